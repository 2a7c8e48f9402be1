//! Analytic bounds and certificates for a given boundary potential.

use std::f64::consts::PI;

use serde::Serialize;

use crate::analytic1d::{interval_ground_kappa, interval_positive_roots};
use crate::error::{Error, Result};
use crate::potential::{BoundaryPotential, PotentialKind};

/// Lower bound `-32 sigma_hat²` on the whole spectrum from the trace estimate
/// with `delta = 1 / (4 sigma_hat)`.
pub fn crude_lower_bound(sigma_hat: f64) -> f64 {
    -32.0 * sigma_hat * sigma_hat
}

/// Two-sided bound on the ground energy.
///
/// The upper end is the form value of the constant-`sigma_hat` ground state,
/// `2 s² - 8 s² int sigma(y) e^{-2 s y} dy` with `s = sigma_hat`.
pub fn ground_energy_sandwich(p: &BoundaryPotential) -> (f64, f64) {
    let s = p.ess_sup();
    if s == 0.0 {
        return (0.0, 0.0);
    }
    let lo = -2.0 * s * s;
    let w = p
        .weighted_integral(2.0 * s)
        .expect("2 sigma_hat is a positive rate");
    let hi = 2.0 * s * s - 8.0 * s * s * w;
    // equal up to rounding when sigma is constant
    (lo, hi.max(lo))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EssClass {
    NonPositiveTail,
    VanishingTail,
    ConstantPositive,
    Inconclusive,
}

/// Classifies the essential spectrum and returns its bottom when known.
pub fn ess_spectrum_class(p: &BoundaryPotential) -> (EssClass, Option<f64>) {
    match p.kind() {
        PotentialKind::Constant { sigma } if *sigma > 0.0 => {
            (EssClass::ConstantPositive, Some(-sigma * sigma))
        }
        // non-positive constants and every compactly supported kind
        _ => (EssClass::NonPositiveTail, Some(0.0)),
    }
}

/// Kinetic energy of the test function `exp(-r^{1/n})` on the quarter-plane.
pub fn certificate_kinetic(n: u32) -> f64 {
    PI / (8.0 * n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub n: u32,
    pub kinetic: f64,
    pub boundary: f64,
    pub q_value: f64,
}

/// Form value of `exp(-r^{1/n})`; negative means a bound state exists.
pub fn certificate_value(p: &BoundaryPotential, n: u32) -> Result<Certificate> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let kinetic = certificate_kinetic(n);
    let boundary = 2.0 * p.stretched_weighted_integral(1.0 / n as f64)?;
    Ok(Certificate { n, kinetic, boundary, q_value: kinetic - boundary })
}

/// Smallest `n <= n_max` whose test function has negative form value.
pub fn bound_state_certificate(p: &BoundaryPotential, n_max: u32) -> Result<Option<Certificate>> {
    let (_, bottom) = ess_spectrum_class(p);
    if bottom != Some(0.0) {
        return Err(Error::EssentialBottomNotZero { bottom });
    }
    let integral = p.integral()?;
    if integral <= 0.0 {
        return Err(Error::NotAttractiveOnAverage { integral });
    }
    for n in 1..=n_max {
        let c = certificate_value(p, n)?;
        if c.q_value < 0.0 {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Upper bound on the number of negative eigenvalues through the interval
/// Robin operator on `[0, L]` with `L = support_bound(p)`.
///
/// `Ok(None)` when `sigma_hat > 2/L` (the bound does not apply) and for the
/// zero potential (no negative spectrum to bound).
pub fn negative_count_bound(p: &BoundaryPotential) -> Result<Option<usize>> {
    let length = p.support_bound();
    if !length.is_finite() {
        return Err(Error::InfiniteSupport);
    }
    let s = p.ess_sup();
    if s == 0.0 || length == 0.0 {
        return Ok(None);
    }
    if s > 2.0 / length {
        return Ok(None);
    }
    let kappa = interval_ground_kappa(s, length)?;
    let roots = interval_positive_roots(s, length, kappa)?;
    // eps_0 = -kappa² always counts; k_n² < kappa² iff k_n < kappa. At
    // sigma_hat L = 2 the interval operator also has the eigenvalue 0.
    let zero_mode = usize::from(s * length == 2.0);
    Ok(Some(1 + zero_mode + roots.iter().filter(|&&k| k < kappa).count()))
}

/// Every bound and certificate for one potential. Inapplicable entries are
/// `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub sigma_hat: f64,
    pub crude_lower: f64,
    pub sandwich_lo: f64,
    pub sandwich_hi: f64,
    pub ess_class: EssClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ess_bottom: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_kinetic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count_bound: Option<usize>,
    pub count_bound_applicable: bool,
}

pub fn full_report(p: &BoundaryPotential, n_max: u32) -> BoundsReport {
    let sigma_hat = p.ess_sup();
    let (sandwich_lo, sandwich_hi) = ground_energy_sandwich(p);
    let (ess_class, ess_bottom) = ess_spectrum_class(p);
    let certificate = bound_state_certificate(p, n_max).ok().flatten();
    let length = p.support_bound();
    let count_bound_applicable = length.is_finite() && sigma_hat <= 2.0 / length;
    let count_bound = negative_count_bound(p).ok().flatten();
    BoundsReport {
        sigma_hat,
        crude_lower: crude_lower_bound(sigma_hat),
        sandwich_lo,
        sandwich_hi,
        ess_class,
        ess_bottom,
        certificate_n: certificate.map(|c| c.n),
        certificate_kinetic: certificate.map(|c| c.kinetic),
        certificate_q: certificate.map(|c| c.q_value),
        count_bound,
        count_bound_applicable,
    }
}
