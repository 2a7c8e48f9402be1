//! The boundary interaction strength `sigma(y)` and the scalar functionals of
//! it that the bounds and certificates are built from.
//!
//! Every kind except `Constant` is piecewise constant on left-closed,
//! right-open cells and vanishes beyond its last cell, so integrals against
//! it are evaluated cell by cell in closed form wherever the weight allows.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Absolute tolerance for the stretched-exponential integrals.
pub const STRETCHED_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Constant { sigma: f64 },
    Step { sigma: f64, length: f64 },
    /// `values[i]` on `[breaks[i-1], breaks[i])` with `breaks[-1] = 0`.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// `samples[i]` on `[i*spacing, (i+1)*spacing)`.
    Tabulated { spacing: f64, samples: Vec<f64> },
}

/// Boundary potential `sigma(y)`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialSpec", into = "PotentialSpec")]
pub struct BoundaryPotential {
    kind: PotentialKind,
}

/// Wire form of a potential in experiment configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialSpec {
    Constant {
        sigma: f64,
    },
    Step {
        sigma: f64,
        #[serde(rename = "L")]
        length: f64,
    },
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    Tabulated {
        h: f64,
        samples: Vec<f64>,
    },
}

impl TryFrom<PotentialSpec> for BoundaryPotential {
    type Error = Error;

    fn try_from(spec: PotentialSpec) -> Result<Self> {
        match spec {
            PotentialSpec::Constant { sigma } => BoundaryPotential::constant(sigma),
            PotentialSpec::Step { sigma, length } => BoundaryPotential::step(sigma, length),
            PotentialSpec::Piecewise { breaks, values } => {
                BoundaryPotential::piecewise(breaks, values)
            }
            PotentialSpec::Tabulated { h, samples } => BoundaryPotential::tabulated(h, samples),
        }
    }
}

impl From<BoundaryPotential> for PotentialSpec {
    fn from(p: BoundaryPotential) -> Self {
        match p.kind {
            PotentialKind::Constant { sigma } => PotentialSpec::Constant { sigma },
            PotentialKind::Step { sigma, length } => PotentialSpec::Step { sigma, length },
            PotentialKind::PiecewiseConstant { breaks, values } => {
                PotentialSpec::Piecewise { breaks, values }
            }
            PotentialKind::Tabulated { spacing, samples } => PotentialSpec::Tabulated {
                h: spacing,
                samples,
            },
        }
    }
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPotential(format!("{name} must be finite, got {x}")))
    }
}

impl BoundaryPotential {
    pub fn constant(sigma: f64) -> Result<Self> {
        check_finite("sigma", sigma)?;
        Ok(Self { kind: PotentialKind::Constant { sigma } })
    }

    pub fn zero() -> Self {
        Self { kind: PotentialKind::Constant { sigma: 0.0 } }
    }

    pub fn step(sigma: f64, length: f64) -> Result<Self> {
        check_finite("sigma", sigma)?;
        check_finite("L", length)?;
        if length <= 0.0 {
            return Err(Error::InvalidPotential(format!("step length must be positive, got {length}")));
        }
        Ok(Self { kind: PotentialKind::Step { sigma, length } })
    }

    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() != values.len() {
            return Err(Error::InvalidPotential(format!(
                "{} breakpoints but {} values",
                breaks.len(),
                values.len()
            )));
        }
        if breaks.is_empty() {
            return Err(Error::InvalidPotential("piecewise potential needs at least one cell".into()));
        }
        for (&b, &v) in breaks.iter().zip(&values) {
            check_finite("breakpoint", b)?;
            check_finite("value", v)?;
        }
        let mut prev = 0.0;
        for &b in &breaks {
            if b <= prev {
                return Err(Error::InvalidPotential(format!(
                    "breakpoints must be positive and strictly ascending ({b} after {prev})"
                )));
            }
            prev = b;
        }
        Ok(Self { kind: PotentialKind::PiecewiseConstant { breaks, values } })
    }

    pub fn tabulated(spacing: f64, samples: Vec<f64>) -> Result<Self> {
        check_finite("h", spacing)?;
        if spacing <= 0.0 {
            return Err(Error::InvalidPotential(format!("sample spacing must be positive, got {spacing}")));
        }
        for &s in &samples {
            check_finite("sample", s)?;
        }
        Ok(Self { kind: PotentialKind::Tabulated { spacing, samples } })
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, PotentialKind::Constant { .. })
    }

    /// Returns a copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let kind = match &self.kind {
            PotentialKind::Constant { sigma } => PotentialKind::Constant { sigma: sigma * factor },
            PotentialKind::Step { sigma, length } => PotentialKind::Step {
                sigma: sigma * factor,
                length: *length,
            },
            PotentialKind::PiecewiseConstant { breaks, values } => PotentialKind::PiecewiseConstant {
                breaks: breaks.clone(),
                values: values.iter().map(|v| v * factor).collect(),
            },
            PotentialKind::Tabulated { spacing, samples } => PotentialKind::Tabulated {
                spacing: *spacing,
                samples: samples.iter().map(|v| v * factor).collect(),
            },
        };
        if !factor.is_finite() {
            return Err(Error::InvalidArgument(format!("scale factor must be finite, got {factor}")));
        }
        Ok(Self { kind })
    }

    /// Cells `(lo, hi, value)` of a compactly supported potential, ascending.
    /// `None` for `Constant`.
    pub fn cells(&self) -> Option<Vec<(f64, f64, f64)>> {
        match &self.kind {
            PotentialKind::Constant { .. } => None,
            PotentialKind::Step { sigma, length } => Some(vec![(0.0, *length, *sigma)]),
            PotentialKind::PiecewiseConstant { breaks, values } => {
                let mut lo = 0.0;
                Some(
                    breaks
                        .iter()
                        .zip(values)
                        .map(|(&b, &v)| {
                            let c = (lo, b, v);
                            lo = b;
                            c
                        })
                        .collect(),
                )
            }
            PotentialKind::Tabulated { spacing, samples } => Some(
                samples
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (i as f64 * spacing, (i + 1) as f64 * spacing, v))
                    .collect(),
            ),
        }
    }

    /// Pointwise value. Panics on negative `y`.
    pub fn eval(&self, y: f64) -> f64 {
        assert!(y >= 0.0, "sigma(y) is defined for y >= 0 only, got {y}");
        match &self.kind {
            PotentialKind::Constant { sigma } => *sigma,
            PotentialKind::Step { sigma, length } => {
                if y < *length {
                    *sigma
                } else {
                    0.0
                }
            }
            PotentialKind::PiecewiseConstant { breaks, values } => {
                let idx = breaks.partition_point(|&b| b <= y);
                values.get(idx).copied().unwrap_or(0.0)
            }
            PotentialKind::Tabulated { spacing, samples } => {
                let idx = (y / spacing).floor() as usize;
                samples.get(idx).copied().unwrap_or(0.0)
            }
        }
    }

    /// `sigma_hat`, the essential supremum of `|sigma|`.
    pub fn ess_sup(&self) -> f64 {
        match &self.kind {
            PotentialKind::Constant { sigma } => sigma.abs(),
            PotentialKind::Step { sigma, .. } => sigma.abs(),
            PotentialKind::PiecewiseConstant { values, .. } => {
                values.iter().fold(0.0, |m, v| m.max(v.abs()))
            }
            PotentialKind::Tabulated { samples, .. } => {
                samples.iter().fold(0.0, |m, v| m.max(v.abs()))
            }
        }
    }

    /// Smallest cell boundary beyond which `sigma` vanishes, or infinity.
    pub fn support_bound(&self) -> f64 {
        match &self.kind {
            PotentialKind::Constant { sigma } => {
                if *sigma == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            _ => self
                .cells()
                .unwrap_or_default()
                .iter()
                .rev()
                .find(|c| c.2 != 0.0)
                .map_or(0.0, |c| c.1),
        }
    }

    pub fn integral(&self) -> Result<f64> {
        match &self.kind {
            PotentialKind::Constant { sigma } => {
                if *sigma == 0.0 {
                    Ok(0.0)
                } else {
                    Err(Error::NotIntegrable)
                }
            }
            _ => Ok(self
                .cells()
                .unwrap_or_default()
                .iter()
                .map(|&(lo, hi, v)| v * (hi - lo))
                .sum()),
        }
    }

    /// `int_0^inf sigma(y) exp(-a y) dy`, exact per cell.
    pub fn weighted_integral(&self, a: f64) -> Result<f64> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!("decay rate must be positive, got {a}")));
        }
        Ok(match &self.kind {
            PotentialKind::Constant { sigma } => sigma / a,
            _ => self
                .cells()
                .unwrap_or_default()
                .iter()
                .map(|&(lo, hi, v)| {
                    // e^{-a lo} - e^{-a hi} = -e^{-a lo} * expm1(-a (hi - lo))
                    -v * (-a * lo).exp() * (-a * (hi - lo)).exp_m1() / a
                })
                .sum(),
        })
    }

    /// `int_0^inf sigma(y) exp(-y^eps) dy` by adaptive quadrature per cell.
    pub fn stretched_weighted_integral(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidArgument(format!("exponent must lie in (0, 1], got {eps}")));
        }
        let cells = match &self.kind {
            PotentialKind::Constant { sigma } if *sigma == 0.0 => return Ok(0.0),
            PotentialKind::Constant { .. } => return Err(Error::NotIntegrable),
            _ => self.cells().unwrap_or_default(),
        };
        let active: Vec<_> = cells.into_iter().filter(|c| c.2 != 0.0).collect();
        if active.is_empty() {
            return Ok(0.0);
        }
        let share = STRETCHED_TOL / active.len() as f64;
        Ok(active
            .iter()
            .map(|&(lo, hi, v)| {
                let tol = share / v.abs().max(1.0);
                v * quadrature::integrate(|y: f64| (-y.powf(eps)).exp(), lo, hi, tol).value
            })
            .sum())
    }

    /// Mean of `sigma` over `[a, b]`, exact for every kind.
    pub fn cell_average(&self, a: f64, b: f64) -> f64 {
        assert!(0.0 <= a && a < b, "bad averaging window [{a}, {b}]");
        match &self.kind {
            PotentialKind::Constant { sigma } => *sigma,
            _ => {
                let total: f64 = self
                    .cells()
                    .unwrap_or_default()
                    .iter()
                    .map(|&(lo, hi, v)| v * (hi.min(b) - lo.max(a)).max(0.0))
                    .sum();
                total / (b - a)
            }
        }
    }
}

impl fmt::Display for BoundaryPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PotentialKind::Constant { sigma } => write!(f, "constant(sigma={sigma})"),
            PotentialKind::Step { sigma, length } => write!(f, "step(sigma={sigma}, L={length})"),
            PotentialKind::PiecewiseConstant { breaks, values } => {
                write!(f, "piecewise(breaks={breaks:?}, values={values:?})")
            }
            PotentialKind::Tabulated { spacing, samples } => {
                write!(f, "tabulated(h={spacing}, {} samples)", samples.len())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn step(s: f64, l: f64) -> BoundaryPotential {
        BoundaryPotential::step(s, l).unwrap()
    }

    /// Composite Simpson oracle on `[0, b]`.
    fn simpson<F: Fn(f64) -> f64>(f: F, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = b / n as f64;
        let mut s = f(0.0) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn eval_examples() {
        assert_eq!(step(1.0, 1.0).eval(0.5), 1.0);
        assert_eq!(step(1.0, 1.0).eval(2.0), 0.0);
        assert_eq!(step(1.0, 1.0).eval(1.0), 0.0);
        assert_eq!(BoundaryPotential::constant(0.7).unwrap().eval(100.0), 0.7);
        let p = BoundaryPotential::piecewise(vec![1.0, 2.0], vec![3.0, -0.5]).unwrap();
        assert_eq!(p.eval(0.0), 3.0);
        assert_eq!(p.eval(1.0), -0.5);
        assert_eq!(p.eval(1.999), -0.5);
        assert_eq!(p.eval(2.0), 0.0);
    }

    #[test]
    #[should_panic]
    fn eval_negative_panics() {
        step(1.0, 1.0).eval(-0.1);
    }

    #[test]
    fn ess_sup_examples() {
        assert_eq!(step(1.0, 1.0).ess_sup(), 1.0);
        let p = BoundaryPotential::piecewise(vec![1.0, 2.0], vec![3.0, -0.5]).unwrap();
        assert_eq!(p.ess_sup(), 3.0);
        assert_eq!(BoundaryPotential::zero().ess_sup(), 0.0);
    }

    #[test]
    fn support_bound_examples() {
        assert_eq!(step(1.0, 2.0).support_bound(), 2.0);
        assert_eq!(BoundaryPotential::constant(1.0).unwrap().support_bound(), f64::INFINITY);
        let mut samples = vec![0.3; 10];
        samples.extend([0.0; 5]);
        let t = BoundaryPotential::tabulated(0.1, samples).unwrap();
        assert_eq!(t.support_bound(), 1.0);
        assert_eq!(t.eval(1.05), 0.0);
        let p = BoundaryPotential::piecewise(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 0.0]).unwrap();
        assert_eq!(p.support_bound(), 2.0);
    }

    #[test]
    fn integral_examples() {
        assert_eq!(step(1.0, 1.0).integral().unwrap(), 1.0);
        let p = BoundaryPotential::piecewise(vec![1.0, 2.0], vec![2.0, -1.0]).unwrap();
        assert_eq!(p.integral().unwrap(), 1.0);
        assert_eq!(
            BoundaryPotential::constant(0.3).unwrap().integral(),
            Err(Error::NotIntegrable)
        );
        let t = BoundaryPotential::tabulated(0.5, vec![1.0, 2.0, -1.0]).unwrap();
        assert_eq!(t.integral().unwrap(), 1.0);
    }

    #[test]
    fn weighted_integral_examples() {
        let w = step(1.0, 1.0).weighted_integral(2.0).unwrap();
        let closed = (1.0 - (-2.0f64).exp()) / 2.0;
        let oracle = simpson(|y| step(1.0, 1.0).eval(y) * (-2.0 * y).exp(), 1.0 - 1e-15, 2000);
        assert!((w - closed).abs() < 1e-15);
        assert!((w - oracle).abs() < 1e-9);
        assert!((w - 0.43233).abs() < 1e-5);
        assert_eq!(BoundaryPotential::constant(1.0).unwrap().weighted_integral(2.0).unwrap(), 0.5);
        let z = BoundaryPotential::piecewise(vec![1.0, 3.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(z.weighted_integral(0.7).unwrap(), 0.0);
        assert!(step(1.0, 1.0).weighted_integral(0.0).is_err());
    }

    #[test]
    fn weighted_integral_small_rate_limit() {
        let p = BoundaryPotential::piecewise(vec![0.5, 1.5, 2.0], vec![2.0, -1.0, 0.5]).unwrap();
        let i = p.integral().unwrap();
        let w = p.weighted_integral(1e-6).unwrap();
        assert!((w - i).abs() < 1e-4 * (1.0 + i.abs()));
    }

    #[test]
    fn stretched_examples() {
        let s = step(1.0, 1.0).stretched_weighted_integral(1.0).unwrap();
        assert!((s - (1.0 - (-1.0f64).exp())).abs() < 1e-9);
        assert!((s - 0.63212).abs() < 1e-5);
        assert_eq!(BoundaryPotential::zero().stretched_weighted_integral(0.3).unwrap(), 0.0);
        assert_eq!(
            BoundaryPotential::constant(1.0).unwrap().stretched_weighted_integral(0.5),
            Err(Error::NotIntegrable)
        );
    }

    #[test]
    fn stretched_small_exponent_tends_to_scaled_integral() {
        // on [0,1], exp(-y^eps) -> exp(-1) pointwise for y > 0
        let p = BoundaryPotential::piecewise(vec![0.3, 0.7, 1.0], vec![1.5, -0.5, 0.8]).unwrap();
        let s = p.stretched_weighted_integral(1e-3).unwrap();
        // brute-force oracle: fine midpoint sums per cell
        let mut oracle = 0.0;
        for (lo, hi, v) in p.cells().unwrap() {
            let n = 200_000;
            let h = (hi - lo) / n as f64;
            for k in 0..n {
                let y: f64 = lo + (k as f64 + 0.5) * h;
                oracle += v * h * (-y.powf(1e-3)).exp();
            }
        }
        assert!((s - oracle).abs() < 1e-6, "{s} vs {oracle}");
        let target = (-1.0f64).exp() * p.integral().unwrap();
        assert!((s - target).abs() < 1e-3, "{s} vs {target}");
    }

    #[test]
    fn invalid_constructions() {
        assert!(BoundaryPotential::step(1.0, 0.0).is_err());
        assert!(BoundaryPotential::piecewise(vec![1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(BoundaryPotential::piecewise(vec![2.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(BoundaryPotential::piecewise(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(BoundaryPotential::tabulated(0.0, vec![1.0]).is_err());
        assert!(BoundaryPotential::constant(f64::NAN).is_err());
    }

    #[test]
    fn cell_average_is_exact() {
        let p = step(2.0, 1.0);
        assert_eq!(p.cell_average(0.5, 1.5), 1.0);
        assert_eq!(p.cell_average(0.0, 0.5), 2.0);
        assert_eq!(p.cell_average(1.0, 2.0), 0.0);
    }

    fn arb_piecewise() -> impl Strategy<Value = BoundaryPotential> {
        prop::collection::vec((0.05f64..1.0, -2.0f64..2.0), 1..6).prop_map(|cells| {
            let mut b = 0.0;
            let (breaks, values): (Vec<_>, Vec<_>) = cells
                .into_iter()
                .map(|(w, v)| {
                    b += w;
                    (b, v)
                })
                .unzip();
            BoundaryPotential::piecewise(breaks, values).unwrap()
        })
    }

    proptest! {
        #[test]
        fn weighted_integral_bounded_by_sup(p in arb_piecewise(), a in 0.01f64..20.0) {
            let w = p.weighted_integral(a).unwrap();
            prop_assert!(w.abs() <= p.ess_sup() / a + 1e-12);
        }

        #[test]
        fn integrals_are_linear(p in arb_piecewise(), c in -3.0f64..3.0, a in 0.1f64..5.0) {
            let q = p.scaled(c).unwrap();
            let i = p.integral().unwrap();
            prop_assert!((q.integral().unwrap() - c * i).abs() <= 1e-12 * (1.0 + i.abs()));
            let w = p.weighted_integral(a).unwrap();
            prop_assert!((q.weighted_integral(a).unwrap() - c * w).abs() <= 1e-12 * (1.0 + w.abs()));
        }

        #[test]
        fn vanishes_beyond_support(p in arb_piecewise(), dy in 0.0f64..10.0) {
            let l = p.support_bound();
            prop_assert_eq!(p.eval(l + dy), 0.0);
        }

        #[test]
        fn sup_dominates_values(p in arb_piecewise(), y in 0.0f64..6.0) {
            prop_assert!(p.eval(y).abs() <= p.ess_sup());
        }
    }
}
