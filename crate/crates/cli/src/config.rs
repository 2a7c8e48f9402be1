//! Strict TOML experiment configuration.

use std::path::{Path, PathBuf};

use quarterlab::{BoundaryPotential, Grid, OuterBc, PotentialKind};
use serde::Deserialize;

use crate::error::CliError;

/// Most parameter points a bounds-only sweep may request.
pub const SWEEP_BOUNDS_BUDGET: usize = 10_000;
/// Most parameter points a sweep with eigenvalue solves may request.
pub const SWEEP_SOLVE_BUDGET: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Reference,
    Bounds,
    Certify,
    Roots1d,
    Solve,
    Decay,
    Sweep,
}

impl Task {
    pub const ALL: [Task; 7] =
        [Task::Reference, Task::Bounds, Task::Certify, Task::Roots1d, Task::Solve, Task::Decay, Task::Sweep];

    pub fn name(self) -> &'static str {
        match self {
            Task::Reference => "reference",
            Task::Bounds => "bounds",
            Task::Certify => "certify",
            Task::Roots1d => "roots1d",
            Task::Solve => "solve",
            Task::Decay => "decay",
            Task::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "R")]
    pub radius: f64,
    pub h: OneOrMany<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub k: usize,
    pub tol: f64,
    /// Defaults to true when at least three spacings are given.
    pub richardson: Option<bool>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { k: 3, tol: 1e-9, richardson: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    pub n_max: u32,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self { n_max: 1000 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Roots1dConfig {
    pub k_max: f64,
}

impl Default for Roots1dConfig {
    fn default() -> Self {
        Self { k_max: 20.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayConfig {
    pub ray: [f64; 2],
    pub samples: usize,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub with_prefactor: bool,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self { ray: [1.0, 1.0], samples: quarterlab::analysis::DEFAULT_SAMPLES, r_min: None, r_max: None, with_prefactor: true }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub sigma: Option<Vec<f64>>,
    #[serde(rename = "L")]
    pub length: Option<Vec<f64>>,
    pub solve: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub tasks: Vec<Task>,
    pub potential: BoundaryPotential,
    pub grid: Option<GridConfig>,
    pub outer_bc: Option<OneOrMany<OuterBc>>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub roots1d: Roots1dConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    pub sweep: Option<SweepConfig>,
    pub output_dir: Option<PathBuf>,
}

/// One point of a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub sigma: f64,
    pub length: Option<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok((Self::parse(text)?, bytes))
    }

    pub fn outer_bcs(&self) -> Vec<OuterBc> {
        let mut v = self.outer_bc.as_ref().map_or_else(|| vec![OuterBc::Dirichlet], OneOrMany::to_vec);
        v.dedup();
        v
    }

    /// Spacings, coarsest first.
    pub fn spacings(&self) -> Vec<f64> {
        let mut h = self.grid.as_ref().map(|g| g.h.to_vec()).unwrap_or_default();
        h.sort_by(|a, b| b.total_cmp(a));
        h
    }

    pub fn richardson(&self) -> bool {
        self.solver.richardson.unwrap_or(self.spacings().len() >= 3)
    }

    pub fn grids(&self) -> Result<Vec<Grid>, CliError> {
        let Some(g) = &self.grid else {
            return Err(CliError::Config("a [grid] section is required for this task".into()));
        };
        self.spacings()
            .into_iter()
            .map(|h| Grid::new(g.radius, h).map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }

    /// Sweep points in row-major order (sigma outer, L inner).
    pub fn sweep_points(&self) -> Result<Vec<SweepPoint>, CliError> {
        let Some(sweep) = &self.sweep else {
            return Err(CliError::Config("the sweep task needs a [sweep] section".into()));
        };
        let base_sigma = self.potential.ess_sup();
        let sigmas = sweep.sigma.clone().unwrap_or_else(|| vec![base_sigma]);
        let points: Vec<SweepPoint> = match (&sweep.length, self.potential.kind()) {
            (Some(lengths), PotentialKind::Step { .. }) => sigmas
                .iter()
                .flat_map(|&sigma| lengths.iter().map(move |&l| SweepPoint { sigma, length: Some(l) }))
                .collect(),
            (Some(_), _) => return Err(CliError::Config("sweeping L requires a step potential".into())),
            (None, PotentialKind::Step { length, .. }) => {
                sigmas.iter().map(|&sigma| SweepPoint { sigma, length: Some(*length) }).collect()
            }
            (None, _) => sigmas.iter().map(|&sigma| SweepPoint { sigma, length: None }).collect(),
        };
        if !matches!(self.potential.kind(), PotentialKind::Constant { .. } | PotentialKind::Step { .. })
            && base_sigma == 0.0
            && sweep.sigma.is_some()
        {
            return Err(CliError::Config("cannot rescale a potential with zero supremum".into()));
        }
        let budget = if sweep.solve { SWEEP_SOLVE_BUDGET } else { SWEEP_BOUNDS_BUDGET };
        if points.len() > budget {
            return Err(CliError::Config(format!("sweep has {} points, budget is {budget}", points.len())));
        }
        for p in &points {
            self.sweep_potential(*p)?;
        }
        Ok(points)
    }

    pub fn sweep_potential(&self, point: SweepPoint) -> Result<BoundaryPotential, CliError> {
        let cfg = |e: quarterlab::Error| CliError::Config(e.to_string());
        match (self.potential.kind(), point.length) {
            (PotentialKind::Step { .. }, Some(l)) => BoundaryPotential::step(point.sigma, l).map_err(cfg),
            (PotentialKind::Constant { .. }, _) => BoundaryPotential::constant(point.sigma).map_err(cfg),
            _ => {
                let s = self.potential.ess_sup();
                if point.sigma == s {
                    Ok(self.potential.clone())
                } else {
                    self.potential.scaled(point.sigma / s).map_err(cfg)
                }
            }
        }
    }

    /// Checks everything that can be checked without running a task.
    pub fn validate(&self, tasks: &[Task]) -> Result<(), CliError> {
        if tasks.is_empty() {
            return Err(CliError::Config("no tasks requested".into()));
        }
        let needs_grid = tasks.iter().any(|t| matches!(t, Task::Solve | Task::Decay))
            || (tasks.contains(&Task::Sweep) && self.sweep.as_ref().is_some_and(|s| s.solve));
        if needs_grid {
            let grids = self.grids()?;
            if grids.is_empty() {
                return Err(CliError::Config("grid.h must list at least one spacing".into()));
            }
            let k = self.solver.k;
            if k == 0 {
                return Err(CliError::Config("solver.k must be at least 1".into()));
            }
            if !(self.solver.tol > 0.0) {
                return Err(CliError::Config("solver.tol must be positive".into()));
            }
            if grids.iter().any(|g| g.nodes_per_side(OuterBc::Dirichlet).pow(2) <= k) {
                return Err(CliError::Config("grid too small for the requested number of eigenpairs".into()));
            }
            if tasks.contains(&Task::Solve) && self.richardson() {
                let h = self.spacings();
                if h.len() < 3 {
                    return Err(CliError::Config("richardson needs at least three spacings".into()));
                }
                if h.windows(2).any(|w| ((w[0] / w[1]) - 2.0).abs() > 1e-9) {
                    return Err(CliError::Config("richardson needs spacings in ratio 2".into()));
                }
            }
        }
        if self.outer_bc.as_ref().is_some_and(|o| o.to_vec().is_empty()) {
            return Err(CliError::Config("outer_bc must not be empty".into()));
        }
        if tasks.contains(&Task::Decay) {
            let d = &self.decay;
            if !(d.ray[0] >= 0.0 && d.ray[1] >= 0.0 && d.ray[0] + d.ray[1] > 0.0) {
                return Err(CliError::Config("decay.ray must point into the quarter-plane".into()));
            }
            if d.samples < 10 {
                return Err(CliError::Config("decay.samples must be at least 10".into()));
            }
        }
        if tasks.contains(&Task::Sweep) {
            self.sweep_points()?;
        }
        if tasks.contains(&Task::Certify) && self.certify.n_max == 0 {
            return Err(CliError::Config("certify.n_max must be at least 1".into()));
        }
        if tasks.contains(&Task::Roots1d) && !(self.roots1d.k_max > 0.0 && self.roots1d.k_max.is_finite()) {
            return Err(CliError::Config("roots1d.k_max must be positive".into()));
        }
        Ok(())
    }
}
