//! Closed-form and root-finding solutions of the one-dimensional Robin
//! problems: the half-line operator behind the constant-sigma reference, and
//! the interval `[0, L]` operator with Robin constant `sigma_hat` at both ends
//! that feeds the eigenvalue counting bound.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Bound state of `-d²/dx²` on the half-line with `u'(0) + sigma u(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfLineBoundState {
    pub sigma: f64,
    pub energy: f64,
}

impl HalfLineBoundState {
    /// Unit-norm profile `sqrt(2 sigma) exp(-sigma x)`.
    pub fn profile(&self, x: f64) -> f64 {
        (2.0 * self.sigma).sqrt() * (-self.sigma * x).exp()
    }
}

pub fn halfline_bound_state(sigma: f64) -> Result<HalfLineBoundState> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    Ok(HalfLineBoundState { sigma, energy: -sigma * sigma })
}

/// Exact solution of the quarter-plane problem with constant `sigma > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantReference {
    pub sigma: f64,
    pub ground_energy: f64,
    pub ess_bottom: f64,
}

impl ConstantReference {
    /// `2 sigma exp(-sigma (x + y))`, unit norm on the quarter-plane.
    pub fn ground_state(&self, x: f64, y: f64) -> f64 {
        2.0 * self.sigma * (-self.sigma * (x + y)).exp()
    }
}

pub fn constant_reference(sigma: f64) -> Result<ConstantReference> {
    let one = halfline_bound_state(sigma)?;
    Ok(ConstantReference {
        sigma,
        ground_energy: 2.0 * one.energy,
        ess_bottom: one.energy,
    })
}

fn check_interval(sigma_hat: f64, length: f64) -> Result<()> {
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma_hat must be positive, got {sigma_hat}")));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidArgument(format!("interval length must be positive, got {length}")));
    }
    Ok(())
}

/// Bisects a sign change of `f` on `[lo, hi]` down to floating-point
/// resolution.
fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    // endpoint with the smaller residual
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Ground-state parameter `kappa` of the interval operator: the root
/// `kappa > sigma_hat` of `kappa tanh(kappa L / 2) = sigma_hat`.
pub fn interval_ground_kappa(sigma_hat: f64, length: f64) -> Result<f64> {
    check_interval(sigma_hat, length)?;
    let f = |k: f64| k * (0.5 * k * length).tanh() - sigma_hat;
    let lo = sigma_hat;
    let mut hi = sigma_hat + 2.0 / length + 10.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    Ok(bisect(f, lo, hi))
}

/// Number of negative eigenvalues of the interval operator.
pub fn interval_negative_count(sigma_hat: f64, length: f64) -> Result<usize> {
    check_interval(sigma_hat, length)?;
    Ok(if sigma_hat <= 2.0 / length { 1 } else { 2 })
}

/// Pole-free form of `tan(kL) = 2 sigma k / (sigma² - k²)`.
pub fn positive_root_function(sigma_hat: f64, length: f64, k: f64) -> f64 {
    (k * length).sin() * (sigma_hat * sigma_hat - k * k) - 2.0 * sigma_hat * k * (k * length).cos()
}

/// Positive roots `k_n <= k_max` of the interval eigenvalue equation,
/// ascending. Requires `sigma_hat <= 2/L`.
pub fn interval_positive_roots(sigma_hat: f64, length: f64, k_max: f64) -> Result<Vec<f64>> {
    check_interval(sigma_hat, length)?;
    if !(k_max > 0.0 && k_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("k_max must be positive, got {k_max}")));
    }
    if sigma_hat > 2.0 / length {
        return Err(Error::TwoNegativeIntervalEigenvalues { sigma_hat, length });
    }
    // divided by k so that roots close to zero (sigma_hat L near 2) still
    // produce a sign change against the limit at k = 0
    let g = |k: f64| {
        if k == 0.0 {
            sigma_hat * (sigma_hat * length - 2.0)
        } else {
            positive_root_function(sigma_hat, length, k) / k
        }
    };

    // scan points: multiples of pi/(2L) subdivided 8x, plus k = sigma_hat
    let step = PI / (16.0 * length);
    let n_steps = (k_max / step).ceil() as usize;
    let mut points: Vec<f64> = (0..=n_steps).map(|i| (i as f64 * step).min(k_max)).collect();
    if sigma_hat < k_max {
        points.push(sigma_hat);
    }
    points.sort_by(f64::total_cmp);
    points.dedup();

    let is_spurious = |k: f64| {
        // k = sigma_hat coinciding with a pole of tan(kL) solves g but not
        // the original equation
        (k - sigma_hat).abs() <= 1e-9 * (1.0 + sigma_hat) && (k * length).cos().abs() < 1e-6
    };

    let mut roots = Vec::new();
    let mut prev = points[0];
    // k = 0 is never a positive root; at sigma_hat L = 2 it marks a zero eigenvalue
    let mut gprev = g(prev);
    for &k in &points[1..] {
        let gk = g(k);
        if gk == 0.0 {
            if !is_spurious(k) {
                roots.push(k);
            }
        } else if gprev != 0.0 && (gk < 0.0) != (gprev < 0.0) {
            let r = bisect(g, prev, k);
            if !is_spurious(r) {
                roots.push(r);
            }
        }
        prev = k;
        gprev = gk;
    }
    Ok(roots)
}

/// Eigenvalues of the interval Robin operator below `k_max²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval1DSpectrum {
    pub length: f64,
    pub sigma_hat: f64,
    pub kappa: f64,
    pub negative_eigenvalues: Vec<f64>,
    pub positive_roots: Vec<f64>,
    /// `-kappa²` merged with `k_n²`, ascending.
    pub eigenvalues: Vec<f64>,
}

impl Interval1DSpectrum {
    pub fn compute(sigma_hat: f64, length: f64, k_max: f64) -> Result<Self> {
        let kappa = interval_ground_kappa(sigma_hat, length)?;
        let positive_roots = interval_positive_roots(sigma_hat, length, k_max)?;
        let mut eigenvalues = vec![-kappa * kappa];
        eigenvalues.extend(positive_roots.iter().map(|k| k * k));
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self {
            length,
            sigma_hat,
            kappa,
            negative_eigenvalues: vec![-kappa * kappa],
            positive_roots,
            eigenvalues,
        })
    }

    pub fn kappa_residual(&self) -> f64 {
        (self.kappa * (0.5 * self.kappa * self.length).tanh() - self.sigma_hat).abs()
    }

    pub fn root_residual(&self, k: f64) -> f64 {
        positive_root_function(self.sigma_hat, self.length, k).abs()
    }
}

/// Symmetric-sector sums `eps_n + eps_m` with `n >= m` that do not exceed
/// `e_max`, ascending with multiplicity.
pub fn tensor_spectrum_symmetric(spec: &Interval1DSpectrum, e_max: f64) -> Vec<f64> {
    let ev = &spec.eigenvalues;
    let mut out = Vec::new();
    for (n, &en) in ev.iter().enumerate() {
        for &em in &ev[..=n] {
            let s = en + em;
            if s <= e_max {
                out.push(s);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halfline_examples() {
        assert_eq!(halfline_bound_state(1.0).unwrap().energy, -1.0);
        assert_eq!(halfline_bound_state(0.5).unwrap().energy, -0.25);
        assert!(halfline_bound_state(0.0).is_err());
        assert!(halfline_bound_state(-1.0).is_err());
        // int_0^inf profile² = 1, by trapezoid on a long fine grid
        let b = halfline_bound_state(0.8).unwrap();
        let h = 1e-4;
        let n = (40.0 / h) as usize;
        let mut s = 0.5 * b.profile(0.0).powi(2);
        for i in 1..n {
            s += b.profile(i as f64 * h).powi(2);
        }
        assert!((s * h - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_reference_examples() {
        let r = constant_reference(1.0).unwrap();
        assert_eq!(r.ground_energy, -2.0);
        assert_eq!(r.ess_bottom, -1.0);
        assert_eq!(r.ground_state(0.0, 0.0), 2.0);
        assert!((r.ground_state(1.0, 1.0) - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((r.ground_state(1.0, 1.0) - 0.27067).abs() < 1e-5);
        assert!(constant_reference(0.0).is_err());
        for s in [0.1, 0.7, 1.0, 3.3] {
            assert_eq!(
                constant_reference(s).unwrap().ground_energy,
                2.0 * halfline_bound_state(s).unwrap().energy
            );
        }
    }

    /// Independent oracle: bisection on the monotone map written directly.
    fn kappa_oracle(s: f64, l: f64) -> f64 {
        let (mut a, mut b) = (s, s + 100.0);
        for _ in 0..300 {
            let m = 0.5 * (a + b);
            if m * (m * l / 2.0).tanh() < s {
                a = m
            } else {
                b = m
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn kappa_examples() {
        let k = interval_ground_kappa(1.0, 50.0).unwrap();
        assert!(k - 1.0 < 1e-10 && k >= 1.0);

        let k = interval_ground_kappa(1.0, 1.0).unwrap();
        assert!((k - kappa_oracle(1.0, 1.0)).abs() < 1e-13);
        assert!((k * (k / 2.0).tanh() - 1.0).abs() < 1e-12);
        assert!((k - 1.54).abs() < 0.01, "{k}");
        assert!((-k * k + 2.38).abs() < 0.02);

        let k = interval_ground_kappa(2.0, 2.0).unwrap();
        assert!((k * k.tanh() - 2.0).abs() < 1e-12);
        assert!((k - 2.07).abs() < 0.01, "{k}");
        assert!((k - kappa_oracle(2.0, 2.0)).abs() < 1e-13);
    }

    #[test]
    fn kappa_is_monotone() {
        let sigmas = [0.1, 0.4, 1.0, 2.5, 6.0];
        let lengths = [0.2, 0.5, 1.0, 3.0, 10.0];
        for &s in &sigmas {
            for w in lengths.windows(2) {
                let (a, b) = (interval_ground_kappa(s, w[0]).unwrap(), interval_ground_kappa(s, w[1]).unwrap());
                assert!(b < a, "kappa must decrease in L: s={s} {w:?}");
            }
        }
        for &l in &lengths {
            for w in sigmas.windows(2) {
                let (a, b) = (interval_ground_kappa(w[0], l).unwrap(), interval_ground_kappa(w[1], l).unwrap());
                assert!(b > a, "kappa must increase in sigma_hat: l={l} {w:?}");
            }
        }
    }

    #[test]
    fn long_interval_matches_halfline() {
        for s in [0.5, 1.0, 2.0] {
            let k = interval_ground_kappa(s, 60.0).unwrap();
            let e = halfline_bound_state(s).unwrap().energy;
            assert!((-k * k - e).abs() < 1e-10);
        }
    }

    #[test]
    fn negative_count_examples() {
        assert_eq!(interval_negative_count(1.0, 1.0).unwrap(), 1);
        assert_eq!(interval_negative_count(2.0, 1.0).unwrap(), 1);
        assert_eq!(interval_negative_count(3.0, 1.0).unwrap(), 2);
    }

    #[test]
    fn neumann_limit_of_roots() {
        let roots = interval_positive_roots(1e-8, 1.0, 10.0).unwrap();
        assert!((roots[0] - PI).abs() < 1e-4, "{roots:?}");
        assert_eq!(roots.len(), 3);
        for (n, r) in roots.iter().enumerate() {
            assert!((r - (n + 1) as f64 * PI).abs() < 1e-4);
        }
    }

    #[test]
    fn first_root_bracket() {
        let roots = interval_positive_roots(1.0, 1.0, 10.0).unwrap();
        let k1 = roots[0];
        assert!(k1 > PI / 2.0 && k1 < PI, "{k1}");
        assert!(positive_root_function(1.0, 1.0, k1).abs() <= 1e-10 * (2.0 + k1 * k1));
        // the original tan form holds too
        let lhs = k1.tan();
        let rhs = 2.0 * k1 / (1.0 - k1 * k1);
        assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn root_count_grows_linearly() {
        let k_max = 20.0 * PI;
        let roots = interval_positive_roots(1.0, 1.0, k_max).unwrap();
        // brute-force sign scan oracle on a much finer grid
        let n = 2_000_000;
        let mut count = 0;
        let mut prev = positive_root_function(1.0, 1.0, k_max / n as f64);
        for i in 2..=n {
            let g = positive_root_function(1.0, 1.0, i as f64 * k_max / n as f64);
            if (g < 0.0) != (prev < 0.0) {
                count += 1;
            }
            prev = g;
        }
        assert_eq!(roots.len(), count);
        assert!((roots.len() as i64 - 20).abs() <= 1, "{}", roots.len());
    }

    #[test]
    fn roots_rejected_outside_regime() {
        assert!(matches!(
            interval_positive_roots(3.0, 1.0, 10.0),
            Err(Error::TwoNegativeIntervalEigenvalues { .. })
        ));
        // boundary sigma_hat = 2/L is admissible
        assert!(interval_positive_roots(2.0, 1.0, 10.0).is_ok());
    }

    #[test]
    fn spectrum_invariants() {
        for (s, l) in [(0.3, 1.0), (1.0, 1.0), (2.0, 1.0), (0.5, 3.0), (0.1, 20.0)] {
            let spec = Interval1DSpectrum::compute(s, l, 30.0).unwrap();
            assert!(spec.kappa_residual() <= 1e-12);
            assert!(spec.kappa > s);
            for &k in &spec.positive_roots {
                assert!(spec.root_residual(k) <= 1e-10 * (1.0 + s * s + k * k));
                assert!((k - s).abs() > 1e-12);
            }
            assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(spec.eigenvalues.len(), spec.positive_roots.len() + 1);
            assert_eq!(spec.eigenvalues[0], -spec.kappa * spec.kappa);
        }
    }

    fn spectrum_with(eigenvalues: Vec<f64>) -> Interval1DSpectrum {
        Interval1DSpectrum {
            length: 1.0,
            sigma_hat: 1.0,
            kappa: 1.0,
            negative_eigenvalues: vec![eigenvalues[0]],
            positive_roots: vec![],
            eigenvalues,
        }
    }

    #[test]
    fn tensor_sums() {
        let spec = spectrum_with(vec![-2.38, 3.1, 9.9]);
        let sums = tensor_spectrum_symmetric(&spec, 1.0);
        // brute-force double loop over n >= m
        let mut oracle = vec![];
        for n in 0..3 {
            for m in 0..=n {
                let s = spec.eigenvalues[n] + spec.eigenvalues[m];
                if s <= 1.0 {
                    oracle.push(s);
                }
            }
        }
        oracle.sort_by(f64::total_cmp);
        assert_eq!(sums, oracle);
        assert_eq!(sums.len(), 2);
        assert!((sums[0] + 4.76).abs() < 1e-12 && (sums[1] - 0.72).abs() < 1e-12);

        assert!(tensor_spectrum_symmetric(&spec, -5.0).is_empty());

        let real = Interval1DSpectrum::compute(1.0, 1.0, 40.0).unwrap();
        let sym = tensor_spectrum_symmetric(&real, 200.0).len();
        let full = real
            .eigenvalues
            .iter()
            .flat_map(|a| real.eigenvalues.iter().map(move |b| a + b))
            .filter(|&s| s <= 200.0)
            .count();
        assert!(sym <= full);
    }
}
