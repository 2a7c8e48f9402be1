//! Lowest eigenpairs and exact eigenvalue counts of a [`DiscreteForm`].
//!
//! The sparse path is a thick-restart block Lanczos iteration on
//! `(S - s I)^{-1}` with the shift `s = -32 sigma_hat² - 1`, which lies below
//! the whole spectrum, so the factorization is positive definite and is
//! computed once. Counts below a threshold come from the inertia of an LDLᵀ
//! factorization (Sylvester's law).

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certify::crude_lower_bound;
use crate::discretize::DiscreteForm;
use crate::error::{Error, Result};
use crate::ldl::{nested_dissection, LdlFactor};

/// Largest dimension for which [`Method::Auto`] falls back to dense
/// diagonalization.
pub const DENSE_LIMIT: usize = 2000;

const PIVOT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Sparse, falling back to dense when the sparse iteration fails (or
    /// the basis would span the whole space) and the dimension is at most
    /// [`DENSE_LIMIT`].
    Auto,
    Sparse,
    Dense,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub k: usize,
    pub tol: f64,
    pub method: Method,
    pub max_restarts: usize,
    pub block_size: usize,
    pub seed: u64,
}

impl SolverOptions {
    pub fn new(k: usize, tol: f64) -> Self {
        Self { k, tol, method: Method::Auto, max_restarts: 500, block_size: 2, seed: 0x5eed }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Nodal values with unit discrete L² norm; the largest-magnitude entry
    /// is positive.
    pub eigenvectors: Vec<Vec<f64>>,
    /// `|S y - λ y|₂` in symmetric coordinates.
    pub residuals: Vec<f64>,
    /// Computed eigenvalues below zero.
    pub negative_count: usize,
    pub converged: Vec<bool>,
}

/// Shift used for shift-invert: one below the crude lower bound.
pub fn solver_shift(form: &DiscreteForm) -> f64 {
    crude_lower_bound(form.potential().ess_sup()) - 1.0
}

pub fn lowest_eigenpairs(form: &DiscreteForm, k: usize, tol: f64) -> Result<SpectralResult> {
    lowest_eigenpairs_with(form, &SolverOptions::new(k, tol))
}

pub fn lowest_eigenpairs_with(form: &DiscreteForm, opts: &SolverOptions) -> Result<SpectralResult> {
    let n = form.dim();
    if opts.k == 0 || opts.k >= n {
        return Err(Error::InvalidArgument(format!("k must satisfy 1 <= k < {n}, got {}", opts.k)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let (values, vectors) = match opts.method {
        Method::Dense => dense_lowest(form, opts.k),
        Method::Sparse => sparse_lowest(form, opts)?,
        Method::Auto if n <= basis_size(opts.k, n) => dense_lowest(form, opts.k),
        Method::Auto => match sparse_lowest(form, opts) {
            Ok(pairs) => pairs,
            Err(e) if n <= DENSE_LIMIT => {
                log::warn!("sparse eigensolver failed ({e}); using dense diagonalization");
                dense_lowest(form, opts.k)
            }
            Err(e) => return Err(e),
        },
    };

    let mut result = SpectralResult {
        eigenvalues: Vec::with_capacity(opts.k),
        eigenvectors: Vec::with_capacity(opts.k),
        residuals: Vec::with_capacity(opts.k),
        negative_count: 0,
        converged: Vec::with_capacity(opts.k),
    };
    for (lambda, mut y) in values.into_iter().zip(vectors) {
        normalize_sign(&mut y);
        let r = symmetric_residual(form, lambda, &y);
        result.converged.push(r <= opts.tol * (1.0 + lambda.abs()));
        result.residuals.push(r);
        result.eigenvalues.push(lambda);
        result.eigenvectors.push(form.from_symmetric(&y));
    }
    result.negative_count = result.eigenvalues.iter().filter(|&&l| l < 0.0).count();
    Ok(result)
}

/// Every eigenvalue of the form by dense diagonalization, ascending.
pub fn dense_spectrum(form: &DiscreteForm) -> Vec<f64> {
    let mut ev: Vec<f64> = form.matrix().to_dense().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Number of eigenvalues strictly below `tau`, from the inertia of
/// `S - tau I`.
pub fn count_below(form: &DiscreteForm, tau: f64) -> Result<usize> {
    let side = form.side();
    let factor = LdlFactor::factor(form.matrix(), tau, &nested_dissection(side, side), PIVOT_TOL)?;
    Ok(factor.negative_pivots())
}

/// [`count_below`], retried at `tau - 1e-10` when a pivot vanishes exactly.
///
/// The count then refers to the perturbed threshold, which differs only if
/// an eigenvalue lies within `1e-10` below `tau`.
pub fn count_below_perturbed(form: &DiscreteForm, tau: f64) -> Result<usize> {
    match count_below(form, tau) {
        Err(Error::ZeroPivot { .. }) => count_below(form, tau - 1e-10),
        other => other,
    }
}

/// `|S y - λ y|₂` for a unit nodal vector `v` (`y` its symmetric coordinates).
pub fn residual(form: &DiscreteForm, lambda: f64, v: &[f64]) -> Result<f64> {
    if v.len() != form.dim() {
        return Err(Error::DimensionMismatch { expected: form.dim(), got: v.len() });
    }
    Ok(symmetric_residual(form, lambda, &form.to_symmetric(v)))
}

fn symmetric_residual(form: &DiscreteForm, lambda: f64, y: &[f64]) -> f64 {
    let sy = form.matrix().mul(y);
    sy.iter().zip(y).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
}

fn normalize_sign(y: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &v in y.iter() {
        if v.abs() > best {
            best = v.abs();
            sign = v.signum();
        }
    }
    if sign < 0.0 {
        y.iter_mut().for_each(|v| *v = -*v);
    }
}

fn dense_lowest(form: &DiscreteForm, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(form.matrix().to_dense());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(k);
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    (values, vectors)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Orthonormal basis `V` together with the images `P = Op V`.
struct KrylovBasis<'a> {
    op: &'a dyn Fn(&[f64]) -> Vec<f64>,
    v: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
}

impl KrylovBasis<'_> {
    /// Orthogonalizes `x` against the basis twice and appends it. Returns
    /// false if nothing independent is left.
    fn push(&mut self, mut x: Vec<f64>) -> bool {
        let original = dot(&x, &x).sqrt();
        if original == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for q in &self.v {
                let c = dot(q, &x);
                axpy(-c, q, &mut x);
            }
        }
        let norm = dot(&x, &x).sqrt();
        if norm <= 1e-10 * original {
            return false;
        }
        x.iter_mut().for_each(|e| *e /= norm);
        let image = (self.op)(&x);
        self.v.push(x);
        self.p.push(image);
        true
    }

    fn len(&self) -> usize {
        self.v.len()
    }

    /// Replaces the basis by `V Y` (and `P Y`) for the given columns of `y`.
    fn rotate(&mut self, y: &DMatrix<f64>, cols: usize) {
        let n = self.v[0].len();
        let combine = |src: &[Vec<f64>]| -> Vec<Vec<f64>> {
            (0..cols)
                .map(|c| {
                    let mut out = vec![0.0; n];
                    for (r, s) in src.iter().enumerate() {
                        axpy(y[(r, c)], s, &mut out);
                    }
                    out
                })
                .collect()
        };
        let v = combine(&self.v);
        let p = combine(&self.p);
        self.v = v;
        self.p = p;
    }
}

/// Krylov basis dimension `max(2k + 10, 30)`, capped by `n`.
fn basis_size(k: usize, n: usize) -> usize {
    (2 * k + 10).max(30).min(n)
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn sparse_lowest(form: &DiscreteForm, opts: &SolverOptions) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = form.dim();
    let k = opts.k;
    let shift = solver_shift(form);
    let side = form.side();
    let factor = LdlFactor::factor(form.matrix(), shift, &nested_dissection(side, side), PIVOT_TOL)
        .map_err(|e| match e {
            Error::ZeroPivot { index, tau } => Error::FactorizationBreakdown { index, shift: tau },
            other => other,
        })?;
    let op = |x: &[f64]| {
        let mut b = x.to_vec();
        factor.solve_in_place(&mut b);
        b
    };

    let m = basis_size(k, n);
    let block = opts.block_size.clamp(1, (m - k).max(1));
    let keep_target = (k + (m - k) / 2).min(m - block).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = KrylovBasis { op: &op, v: Vec::with_capacity(m), p: Vec::with_capacity(m) };

    let mut frontier = Vec::new();
    while frontier.len() < block {
        if basis.push(random_vector(&mut rng, n)) {
            frontier.push(basis.len() - 1);
        }
    }

    let mut best = vec![f64::INFINITY; k];
    let mut projected: Vec<Vec<f64>> = Vec::with_capacity(m);
    for restart in 0..opts.max_restarts {
        // block Krylov expansion
        while basis.len() < m {
            let candidates: Vec<Vec<f64>> = frontier.iter().map(|&i| basis.p[i].clone()).collect();
            let mut next = Vec::with_capacity(candidates.len());
            for c in candidates {
                if basis.len() == m {
                    break;
                }
                if basis.push(c) || basis.push(random_vector(&mut rng, n)) {
                    next.push(basis.len() - 1);
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }

        let dim = basis.len();
        // rows of the projected matrix for vectors added since the restart
        for i in projected.len()..dim {
            let row = (0..=i).map(|j| 0.5 * (dot(&basis.v[i], &basis.p[j]) + dot(&basis.v[j], &basis.p[i]))).collect();
            projected.push(row);
        }
        let t = DMatrix::from_fn(dim, dim, |i, j| if j <= i { projected[i][j] } else { projected[j][i] });
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let y = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);

        let wanted = k.min(dim);
        let mut values = Vec::with_capacity(wanted);
        let mut vectors = Vec::with_capacity(wanted);
        let mut done = true;
        for c in 0..wanted {
            let mut x = vec![0.0; n];
            for (r, q) in basis.v.iter().enumerate() {
                axpy(y[(r, c)], q, &mut x);
            }
            let lambda = shift + 1.0 / theta[c];
            let res = symmetric_residual(form, lambda, &x);
            best[c] = best[c].min(res);
            if !(res <= opts.tol * (1.0 + lambda.abs())) {
                done = false;
            }
            values.push(lambda);
            vectors.push(x);
        }
        if done && wanted == k {
            log::debug!("lanczos converged after {restart} restarts (basis {m}, block {block})");
            return Ok((values, vectors));
        }
        if dim == n {
            // the basis spans everything; Ritz pairs are exact up to rounding
            return Ok((values, vectors));
        }

        // thick restart: keep the leading Ritz vectors, continue from residuals
        let keep = keep_target.min(dim);
        basis.rotate(&y, keep);
        // in the Ritz basis the projection is diagonal
        projected = (0..keep)
            .map(|i| {
                let mut row = vec![0.0; i + 1];
                row[i] = theta[i];
                row
            })
            .collect();
        let mut residuals: Vec<(f64, Vec<f64>)> = (0..keep)
            .map(|c| {
                let mut r = basis.p[c].clone();
                axpy(-theta[c], &basis.v[c], &mut r);
                (dot(&r, &r), r)
            })
            .collect();
        residuals.sort_by(|a, b| b.0.total_cmp(&a.0));
        frontier.clear();
        for (_, r) in residuals.into_iter().take(block) {
            if basis.push(r) || basis.push(random_vector(&mut rng, n)) {
                frontier.push(basis.len() - 1);
            }
        }
    }
    Err(Error::NoConvergence { restarts: opts.max_restarts, residuals: best })
}
