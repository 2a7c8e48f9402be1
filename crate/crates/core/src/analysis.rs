//! Physical post-processing of computed spectra: positivity, decay rates,
//! truncation brackets and grid extrapolation.

use serde::Serialize;

use crate::certify::ess_spectrum_class;
use crate::discretize::{assemble, DiscreteForm, Grid, OuterBc};
use crate::eigensolve::lowest_eigenpairs;
use crate::error::{Error, Result};
use crate::potential::BoundaryPotential;

/// Values below this magnitude make a log-linear fit meaningless.
pub const UNDERFLOW: f64 = 1e-14;
/// Number of sample radii used by [`default_window`] fits.
pub const DEFAULT_SAMPLES: usize = 40;
const MIN_SAMPLES: usize = 10;

/// True if, after flipping `v` so its largest-magnitude entry is positive,
/// no entry is below `-tol`.
pub fn ground_state_positivity(v: &[f64], tol: f64) -> bool {
    let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
    v.iter().all(|&x| sign * x >= -tol)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub ray: (f64, f64),
    pub r_window: (f64, f64),
    pub samples: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_std_error: f64,
    /// `-sqrt(|E|)`.
    pub predicted_rate: f64,
    pub with_prefactor: bool,
}

impl DecayFit {
    /// `slope + sqrt|E| <= 0.05 sqrt|E| + 2 stderr`: the fit decays at least
    /// as fast as the bound allows, up to a 5% margin.
    pub fn respects_bound(&self) -> bool {
        let rate = -self.predicted_rate;
        self.slope + rate <= 0.05 * rate + 2.0 * self.slope_std_error
    }

    pub fn relative_rate_error(&self) -> f64 {
        (self.slope - self.predicted_rate).abs() / self.predicted_rate.abs()
    }
}

/// `[support + 2, R - 3]`, the default fit window.
pub fn default_window(p: &BoundaryPotential, radius: f64) -> (f64, f64) {
    (p.support_bound() + 2.0, radius - 3.0)
}

fn normalize_ray(ray: (f64, f64)) -> Result<(f64, f64)> {
    let (dx, dy) = ray;
    let len = dx.hypot(dy);
    if !(dx >= 0.0 && dy >= 0.0 && len > 0.0 && len.is_finite()) {
        return Err(Error::InvalidArgument(format!("ray ({dx}, {dy}) does not point into the quarter-plane")));
    }
    Ok((dx / len, dy / len))
}

/// Fits `log|v(r ray)|` (plus `½ log r` when `with_prefactor`) against `r`
/// for the nodal vector `v` of `form`, sampled by bilinear interpolation.
#[allow(clippy::too_many_arguments)]
pub fn decay_fit(
    form: &DiscreteForm,
    v: &[f64],
    energy: f64,
    ray: (f64, f64),
    window: (f64, f64),
    samples: usize,
    with_prefactor: bool,
) -> Result<DecayFit> {
    if v.len() != form.dim() {
        return Err(Error::DimensionMismatch { expected: form.dim(), got: v.len() });
    }
    let (r_min, r_max) = window;
    let support = form.potential().support_bound();
    let radius = form.grid().radius();
    if !(r_min >= support + 1.0 - 1e-12 && r_max <= radius - 2.0 + 1e-12 && r_min < r_max) {
        return Err(Error::InvalidWindow(format!(
            "window [{r_min}, {r_max}] must lie in [{}, {}]",
            support + 1.0,
            radius - 2.0
        )));
    }
    let dir = normalize_ray(ray)?;
    decay_fit_fn(|x, y| form.interpolate(v, x, y), energy, dir, window, samples, with_prefactor)
}

/// [`decay_fit`] on an arbitrary function of position, without the
/// grid-dependent window checks.
pub fn decay_fit_fn<F: Fn(f64, f64) -> f64>(
    f: F,
    energy: f64,
    ray: (f64, f64),
    window: (f64, f64),
    samples: usize,
    with_prefactor: bool,
) -> Result<DecayFit> {
    if !(energy < 0.0) {
        return Err(Error::InvalidArgument(format!("decay fit needs a negative energy, got {energy}")));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidWindow(format!("need at least {MIN_SAMPLES} radii, got {samples}")));
    }
    let (r_min, r_max) = window;
    if !(r_min > 0.0 && r_min < r_max && r_max.is_finite()) {
        return Err(Error::InvalidWindow(format!("bad window [{r_min}, {r_max}]")));
    }
    let (dx, dy) = normalize_ray(ray)?;

    let mut rs = Vec::with_capacity(samples);
    let mut logs = Vec::with_capacity(samples);
    for i in 0..samples {
        let r = r_min + (r_max - r_min) * i as f64 / (samples - 1) as f64;
        let value = f(r * dx, r * dy).abs();
        if !(value >= UNDERFLOW) {
            return Err(Error::UnderflowWindow { radius: r, value });
        }
        let mut l = value.ln();
        if with_prefactor {
            l += 0.5 * r.ln();
        }
        rs.push(r);
        logs.push(l);
    }

    let n = samples as f64;
    let mean_r = rs.iter().sum::<f64>() / n;
    let mean_l = logs.iter().sum::<f64>() / n;
    let sxx: f64 = rs.iter().map(|r| (r - mean_r).powi(2)).sum();
    let sxy: f64 = rs.iter().zip(&logs).map(|(r, l)| (r - mean_r) * (l - mean_l)).sum();
    let syy: f64 = logs.iter().map(|l| (l - mean_l).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_l - slope * mean_r;
    let ssr: f64 = rs.iter().zip(&logs).map(|(r, l)| (l - intercept - slope * r).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - ssr / syy).max(0.0) } else { 1.0 };
    let slope_std_error = (ssr / (n - 2.0) / sxx).sqrt();

    Ok(DecayFit {
        ray: (dx, dy),
        r_window: window,
        samples,
        slope,
        intercept,
        r_squared,
        slope_std_error,
        predicted_rate: -(-energy).sqrt(),
        with_prefactor,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationBracket {
    /// Neumann-outer eigenvalues.
    pub lo: Vec<f64>,
    /// Dirichlet-outer eigenvalues.
    pub hi: Vec<f64>,
    pub ess_bottom: Option<f64>,
    /// `hi[m] < ess_bottom`.
    pub certified: Vec<bool>,
}

impl TruncationBracket {
    pub fn width(&self, m: usize) -> f64 {
        self.hi[m] - self.lo[m]
    }

    pub fn encloses(&self, m: usize, value: f64) -> bool {
        self.lo[m] <= value && value <= self.hi[m]
    }
}

/// Lowest `k` eigenvalues under Neumann (`lo`) and Dirichlet (`hi`) outer
/// truncation on the same grid.
pub fn truncation_bracket(p: &BoundaryPotential, radius: f64, spacing: f64, k: usize, tol: f64) -> Result<TruncationBracket> {
    let grid = Grid::new(radius, spacing)?;
    let lo = lowest_eigenpairs(&assemble(p, &grid, OuterBc::Neumann), k, tol)?.eigenvalues;
    let hi = lowest_eigenpairs(&assemble(p, &grid, OuterBc::Dirichlet), k, tol)?.eigenvalues;
    let (_, ess_bottom) = ess_spectrum_class(p);
    let certified = hi.iter().map(|&v| ess_bottom.is_some_and(|b| v < b)).collect();
    Ok(TruncationBracket { lo, hi, ess_bottom, certified })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub h_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub extrapolated: f64,
    pub order: f64,
}

/// Richardson extrapolation from the three finest of a halving sequence.
pub fn richardson(points: &[(f64, f64)]) -> Result<ConvergenceStudy> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 grid levels, got {}", points.len())));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    for w in pts.windows(2) {
        if ((w[0].0 / w[1].0) - 2.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("spacings {} and {} are not in ratio 2", w[0].0, w[1].0)));
        }
    }
    let m = pts.len();
    let (l2h, lh, lh2) = (pts[m - 3].1, pts[m - 2].1, pts[m - 1].1);
    let (d1, d2) = (l2h - lh, lh - lh2);
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() || d2.abs() >= d1.abs() {
        return Err(Error::NoAsymptoticRegime(format!("differences {d1:e} and {d2:e} do not contract monotonically")));
    }
    let order = (d1 / d2).log2();
    let extrapolated = lh2 + (lh2 - lh) / (order.exp2() - 1.0);
    Ok(ConvergenceStudy {
        h_values: pts.iter().map(|p| p.0).collect(),
        lambda_values: pts.iter().map(|p| p.1).collect(),
        extrapolated,
        order,
    })
}
