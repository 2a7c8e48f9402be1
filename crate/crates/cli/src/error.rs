use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(quarterlab::Error),

    #[error("not applicable: {0}")]
    Inapplicable(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Other(quarterlab::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NoConvergence(_) => 3,
            CliError::Inapplicable(_) => 4,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

impl From<quarterlab::Error> for CliError {
    fn from(e: quarterlab::Error) -> Self {
        use quarterlab::Error as E;
        match e {
            E::NoConvergence { .. } | E::FactorizationBreakdown { .. } => CliError::NoConvergence(e),
            E::NotAttractiveOnAverage { .. }
            | E::EssentialBottomNotZero { .. }
            | E::InfiniteSupport
            | E::NotIntegrable
            | E::TwoNegativeIntervalEigenvalues { .. } => CliError::Inapplicable(e.to_string()),
            E::InvalidPotential(_) | E::InvalidArgument(_) | E::InvalidGrid(_) | E::InvalidWindow(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Other(other),
        }
    }
}
