use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("potential has infinite support and a nonzero tail, so it is not integrable")]
    NotIntegrable,

    #[error("potential is not attractive on average (integral = {integral})")]
    NotAttractiveOnAverage { integral: f64 },

    #[error("bottom of the essential spectrum is not zero ({bottom:?}); certificate proves nothing")]
    EssentialBottomNotZero { bottom: Option<f64> },

    #[error("counting bound needs a compactly supported potential")]
    InfiniteSupport,

    #[error("interval operator has two negative eigenvalues (sigma_hat = {sigma_hat} > 2/L = {})", 2.0 / .length)]
    TwoNegativeIntervalEigenvalues { sigma_hat: f64, length: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample {value} at node (i = {i}, j = {j})")]
    NonFiniteSample { i: usize, j: usize, value: f64 },

    #[error("vector must be nonzero")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigensolver did not converge after {restarts} restarts (best residuals {residuals:?})")]
    NoConvergence { restarts: usize, residuals: Vec<f64> },

    #[error("factorization broke down at pivot {index} for shift {shift}; move the shift away from the spectrum")]
    FactorizationBreakdown { index: usize, shift: f64 },

    #[error("zero pivot at index {index} while counting below tau = {tau}; retry with a perturbed tau")]
    ZeroPivot { index: usize, tau: f64 },

    #[error("eigenvector underflows (|v| = {value:e}) at r = {radius} inside the fit window; shrink r_max")]
    UnderflowWindow { radius: f64, value: f64 },

    #[error("invalid decay window: {0}")]
    InvalidWindow(String),

    #[error("no asymptotic regime: {0}")]
    NoAsymptoticRegime(String),
}
