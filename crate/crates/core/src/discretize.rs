//! Finite-difference realization of the quadratic form
//! `q[u] = ∫|∇u|² - ∫ sigma |u_bv|²` on the truncated square `[0, R]²`.
//!
//! The form is discretized with composite-trapezoid weights: node `(i, j)`
//! carries mass `h² w_i w_j` with `w = 1/2` on the edges of the square. The
//! stored matrix is the mass-scaled operator `S = W^{-1/2} K W^{-1/2}`, which
//! is symmetric and whose eigenvalues coincide with the ghost-node scheme
//! `u_{-1,j} = u_{1,j} + 2 h sigma(jh) u_{0,j}`: interior rows carry the
//! 5-point stencil `(4, -1, -1, -1, -1)/h²`, Robin rows pick up `-2 sigma/h`
//! on the diagonal, and the corner collects both edge contributions.
//!
//! Public vectors are always nodal values `u(ih, jh)`, indexed `i * n + j`.
//! The symmetric coordinates `y = h sqrt(W) u` have `|y|₂` equal to the
//! discrete L² norm of `u`.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::BoundaryPotential;
use crate::sparse::CsrMatrix;

/// Condition imposed on the artificial edges `x = R` and `y = R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OuterBc {
    Dirichlet,
    Neumann,
}

impl OuterBc {
    pub fn as_str(self) -> &'static str {
        match self {
            OuterBc::Dirichlet => "dirichlet",
            OuterBc::Neumann => "neumann",
        }
    }
}

/// Uniform grid over `[0, R]²` with `R / h` cells per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    radius: f64,
    spacing: f64,
    cells: usize,
}

impl Grid {
    pub fn new(radius: f64, spacing: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGrid(format!("need R > 0 and h > 0, got R={radius}, h={spacing}")));
        }
        let ratio = radius / spacing;
        let cells = ratio.round();
        if (ratio - cells).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidGrid(format!("R/h = {ratio} is not an integer")));
        }
        let cells = cells as usize;
        if cells < 4 {
            return Err(Error::InvalidGrid(format!("R/h = {cells} leaves fewer than 3 nodes per side")));
        }
        Ok(Self { radius, spacing, cells })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Nodes per side: `R/h + 1` with Neumann outer edges, `R/h` with
    /// Dirichlet (the nodes on `x = R`, `y = R` are eliminated).
    pub fn nodes_per_side(&self, outer: OuterBc) -> usize {
        match outer {
            OuterBc::Neumann => self.cells + 1,
            OuterBc::Dirichlet => self.cells,
        }
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing
    }

    /// One-dimensional trapezoid weight of node `i`.
    pub fn axis_weight(&self, outer: OuterBc, i: usize) -> f64 {
        let last = self.nodes_per_side(outer) - 1;
        if i == 0 || (outer == OuterBc::Neumann && i == last) {
            0.5
        } else {
            1.0
        }
    }
}

/// Samples `f` at every node, in grid indexing order.
pub fn inject_function<F: Fn(f64, f64) -> f64>(grid: &Grid, outer: OuterBc, f: F) -> Result<Vec<f64>> {
    let n = grid.nodes_per_side(outer);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let value = f(grid.coordinate(i), grid.coordinate(j));
            if !value.is_finite() {
                return Err(Error::NonFiniteSample { i, j, value });
            }
            out.push(value);
        }
    }
    Ok(out)
}

/// The assembled form on one grid with one outer condition.
#[derive(Debug, Clone)]
pub struct DiscreteForm {
    matrix: CsrMatrix,
    grid: Grid,
    outer: OuterBc,
    side: usize,
    axis_weights: Vec<f64>,
    boundary_sigma: Vec<f64>,
    potential: BoundaryPotential,
}

/// Minimum truncation radius that leaves `5 / sigma_hat` of decay room past
/// the support.
pub fn recommended_radius(p: &BoundaryPotential) -> Option<f64> {
    let s = p.ess_sup();
    let l = p.support_bound();
    (s > 0.0 && l.is_finite()).then(|| l + 5.0 / s)
}

pub fn assemble(p: &BoundaryPotential, grid: &Grid, outer: OuterBc) -> DiscreteForm {
    if let Some(r_min) = recommended_radius(p) {
        if grid.radius() < r_min {
            log::warn!(
                "truncation radius {} is below support + 5/sigma_hat = {r_min}; bound states may be distorted",
                grid.radius()
            );
        }
    }
    let n = grid.nodes_per_side(outer);
    let h = grid.spacing();
    let h2 = h * h;
    let w: Vec<f64> = (0..n).map(|i| grid.axis_weight(outer, i)).collect();
    // sigma averaged over each boundary node's dual cell
    let sig: Vec<f64> = (0..n)
        .map(|j| p.cell_average(((j as f64 - 0.5) * h).max(0.0), (j as f64 + 0.5) * h))
        .collect();
    let dirichlet = outer == OuterBc::Dirichlet;

    let rows = (0..n * n)
        .map(|a| {
            let (i, j) = (a / n, a % n);
            let wa = w[i] * w[j];
            let mut diag = 0.0;
            let mut row = Vec::with_capacity(5);
            // edges along x carry the weight of the y-node, and vice versa
            let mut edge = |exists: bool, interior: bool, other: usize, weight: f64, wb: f64| {
                if exists {
                    diag += weight;
                    if interior {
                        row.push((other, -weight / h2 / (wa * wb).sqrt()));
                    }
                }
            };
            edge(i > 0, true, a.wrapping_sub(n), w[j], if i > 0 { w[i - 1] * w[j] } else { 1.0 });
            edge(i + 1 < n || dirichlet, i + 1 < n, a + n, w[j], if i + 1 < n { w[i + 1] * w[j] } else { 1.0 });
            edge(j > 0, true, a.wrapping_sub(1), w[i], if j > 0 { w[i] * w[j - 1] } else { 1.0 });
            edge(j + 1 < n || dirichlet, j + 1 < n, a + 1, w[i], if j + 1 < n { w[i] * w[j + 1] } else { 1.0 });
            let mut robin = 0.0;
            if i == 0 {
                robin += sig[j] * w[j];
            }
            if j == 0 {
                robin += sig[i] * w[i];
            }
            row.push((a, (diag / h2 - robin / h) / wa));
            row
        })
        .collect();

    DiscreteForm {
        matrix: CsrMatrix::from_rows(rows),
        grid: *grid,
        outer,
        side: n,
        axis_weights: w,
        boundary_sigma: sig,
        potential: p.clone(),
    }
}

impl DiscreteForm {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn outer_bc(&self) -> OuterBc {
        self.outer
    }

    pub fn potential(&self) -> &BoundaryPotential {
        &self.potential
    }

    /// Nodes per side.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.side * self.side
    }

    /// Boundary values of `sigma` used on the Robin edges.
    pub fn boundary_sigma(&self) -> &[f64] {
        &self.boundary_sigma
    }

    /// Trapezoid mass weight `w_i w_j` of node `a` (without the `h²`).
    pub fn node_weight(&self, a: usize) -> f64 {
        self.axis_weights[a / self.side] * self.axis_weights[a % self.side]
    }

    pub fn node_position(&self, a: usize) -> (f64, f64) {
        (self.grid.coordinate(a / self.side), self.grid.coordinate(a % self.side))
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(())
    }

    /// Nodal values to symmetric coordinates `h sqrt(W) u`.
    pub fn to_symmetric(&self, u: &[f64]) -> Vec<f64> {
        let h = self.grid.spacing();
        u.iter().enumerate().map(|(a, x)| h * self.node_weight(a).sqrt() * x).collect()
    }

    /// Inverse of [`Self::to_symmetric`].
    pub fn from_symmetric(&self, y: &[f64]) -> Vec<f64> {
        let h = self.grid.spacing();
        y.iter().enumerate().map(|(a, x)| x / (h * self.node_weight(a).sqrt())).collect()
    }

    /// Discrete L² inner product `h² Σ w_a u_a v_a`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let h2 = self.grid.spacing().powi(2);
        h2 * u
            .iter()
            .zip(v)
            .enumerate()
            .map(|(a, (x, y))| self.node_weight(a) * x * y)
            .sum::<f64>()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Stiffness applied to nodal values, `K u` with `uᵀ K u` the discrete
    /// form times `1/h²`. Annihilates constants when `sigma = 0` and the outer
    /// edges are Neumann.
    pub fn apply_stiffness(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let z: Vec<f64> = u.iter().enumerate().map(|(a, x)| self.node_weight(a).sqrt() * x).collect();
        let sz = self.matrix.mul(&z);
        Ok(sz.iter().enumerate().map(|(a, x)| self.node_weight(a).sqrt() * x).collect())
    }

    /// Discrete form value `q[u]` (trapezoid rule).
    pub fn form_value(&self, u: &[f64]) -> Result<f64> {
        let y = {
            self.check_len(u)?;
            self.to_symmetric(u)
        };
        let sy = self.matrix.mul(&y);
        Ok(y.iter().zip(&sy).map(|(a, b)| a * b).sum())
    }

    /// Rayleigh quotient `q[u] / |u|²` of nodal values.
    pub fn rayleigh(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        let y = self.to_symmetric(u);
        let den: f64 = y.iter().map(|x| x * x).sum();
        if den == 0.0 {
            return Err(Error::ZeroVector);
        }
        let sy = self.matrix.mul(&y);
        Ok(y.iter().zip(&sy).map(|(a, b)| a * b).sum::<f64>() / den)
    }

    /// Samples `f` on this form's nodes.
    pub fn inject<F: Fn(f64, f64) -> f64>(&self, f: F) -> Result<Vec<f64>> {
        inject_function(&self.grid, self.outer, f)
    }

    /// Nodal value at an arbitrary point by bilinear interpolation. Points past
    /// the last node of a Dirichlet grid interpolate towards zero at `R`.
    pub fn interpolate(&self, u: &[f64], x: f64, y: f64) -> f64 {
        let h = self.grid.spacing();
        let n = self.side;
        let value = |i: usize, j: usize| if i < n && j < n { u[i * n + j] } else { 0.0 };
        let locate = |t: f64| {
            let s = (t / h).max(0.0);
            let i = (s.floor() as usize).min(self.grid.cells() - 1);
            (i, (s - i as f64).clamp(0.0, 1.0))
        };
        let (i, tx) = locate(x);
        let (j, ty) = locate(y);
        (1.0 - tx) * (1.0 - ty) * value(i, j)
            + tx * (1.0 - ty) * value(i + 1, j)
            + (1.0 - tx) * ty * value(i, j + 1)
            + tx * ty * value(i + 1, j + 1)
    }

    /// Coordinate-format dump of the stored matrix.
    pub fn write_matrix<W: Write>(&self, out: W) -> io::Result<()> {
        self.matrix.write_coordinate(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn small(p: &BoundaryPotential, outer: OuterBc) -> DiscreteForm {
        assemble(p, &Grid::new(3.0, 0.25).unwrap(), outer)
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(12.0, 0.1).is_ok());
        assert_eq!(Grid::new(12.0, 0.1).unwrap().cells(), 120);
        assert!(Grid::new(1.0, 0.3).is_err());
        assert!(Grid::new(1.0, 0.5).is_err());
        assert!(Grid::new(-1.0, 0.1).is_err());
        let g = Grid::new(2.0, 0.5).unwrap();
        assert_eq!(g.nodes_per_side(OuterBc::Neumann), 5);
        assert_eq!(g.nodes_per_side(OuterBc::Dirichlet), 4);
    }

    #[test]
    fn injection() {
        let g = Grid::new(2.0, 0.25).unwrap();
        let ones = inject_function(&g, OuterBc::Neumann, |_, _| 1.0).unwrap();
        assert!(ones.iter().all(|&v| v == 1.0));
        let v = inject_function(&g, OuterBc::Dirichlet, |x, y| 2.0 * (-(x + y)).exp()).unwrap();
        assert_eq!(v[0], 2.0);
        let n = g.nodes_per_side(OuterBc::Dirichlet);
        let v = inject_function(&g, OuterBc::Dirichlet, |x, y| x + 10.0 * y).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(v[i * n + j], i as f64 * 0.25 + 10.0 * (j as f64 * 0.25));
            }
        }
        let err = inject_function(&g, OuterBc::Neumann, |x, y| if x == 0.5 && y == 0.25 { f64::NAN } else { 0.0 });
        assert!(matches!(err, Err(Error::NonFiniteSample { i: 2, j: 1, .. })));
    }

    #[test]
    fn matrix_is_exactly_symmetric_and_sparse() {
        let pots = [
            BoundaryPotential::zero(),
            BoundaryPotential::constant(1.3).unwrap(),
            BoundaryPotential::piecewise(vec![0.3, 0.9, 1.4], vec![2.0, -1.0, 0.5]).unwrap(),
        ];
        for p in &pots {
            for outer in [OuterBc::Dirichlet, OuterBc::Neumann] {
                let f = small(p, outer);
                assert_eq!(f.matrix().asymmetry(), 0.0);
                assert!((0..f.dim()).all(|a| f.matrix().row_nnz(a) <= 5));
            }
        }
    }

    #[test]
    fn stencil_entries() {
        let h = 0.25;
        let p = BoundaryPotential::constant(0.8).unwrap();
        let f = small(&p, OuterBc::Dirichlet);
        let n = f.side();
        let m = f.matrix();
        let interior = 3 * n + 4;
        assert!((m.get(interior, interior) - 4.0 / (h * h)).abs() < 1e-12);
        assert!((m.get(interior, interior + 1) + 1.0 / (h * h)).abs() < 1e-12);
        // Robin edge x = 0: diagonal 4/h² - 2 sigma/h
        let edge = 5;
        assert!((m.get(edge, edge) - (4.0 / (h * h) - 2.0 * 0.8 / h)).abs() < 1e-12);
        // corner collects both edges
        assert!((m.get(0, 0) - (4.0 / (h * h) - 4.0 * 0.8 / h)).abs() < 1e-12);
    }

    #[test]
    fn neumann_laplacian_kills_constants() {
        let f = small(&BoundaryPotential::zero(), OuterBc::Neumann);
        let ones = vec![1.0; f.dim()];
        let k = f.apply_stiffness(&ones).unwrap();
        assert!(k.iter().all(|v| v.abs() < 1e-10), "{:?}", k.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        assert!(f.rayleigh(&ones).unwrap().abs() < 1e-12);
    }

    #[test]
    fn zero_potential_is_semidefinite() {
        for outer in [OuterBc::Neumann, OuterBc::Dirichlet] {
            let f = small(&BoundaryPotential::zero(), outer);
            let eig = SymmetricEigen::new(f.matrix().to_dense()).eigenvalues;
            let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            match outer {
                OuterBc::Neumann => assert!(min.abs() < 1e-10),
                OuterBc::Dirichlet => assert!(min > 1e-3),
            }
        }
    }

    #[test]
    fn rayleigh_of_eigenvector_is_eigenvalue() {
        let p = BoundaryPotential::step(1.0, 1.0).unwrap();
        let f = small(&p, OuterBc::Dirichlet);
        let eig = SymmetricEigen::new(f.matrix().to_dense());
        let (k, lam) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (i, &l)| if l < b.1 { (i, l) } else { b });
        let y: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let u = f.from_symmetric(&y);
        assert!((f.rayleigh(&u).unwrap() - lam).abs() < 1e-12 * (1.0 + lam.abs()));
        assert!((f.norm(&u) - 1.0).abs() < 1e-12);
        assert_eq!(f.rayleigh(&vec![0.0; f.dim()]), Err(Error::ZeroVector));
        assert!(matches!(f.rayleigh(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn constant_ground_state_rayleigh() {
        let p = BoundaryPotential::constant(1.0).unwrap();
        let f = assemble(&p, &Grid::new(12.0, 0.05).unwrap(), OuterBc::Dirichlet);
        let u = f.inject(|x, y| 2.0 * (-(x + y)).exp()).unwrap();
        let rq = f.rayleigh(&u).unwrap();
        assert!((rq + 2.0).abs() < 0.01, "{rq}");
        assert!((f.norm(&u) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn bracketing_and_monotonicity_on_small_grids() {
        let g = Grid::new(3.0, 0.2).unwrap();
        let lowest = |p: &BoundaryPotential, outer| {
            let mut e: Vec<f64> = SymmetricEigen::new(assemble(p, &g, outer).matrix().to_dense())
                .eigenvalues
                .iter()
                .copied()
                .collect();
            e.sort_by(f64::total_cmp);
            e.truncate(6);
            e
        };
        let p = BoundaryPotential::piecewise(vec![0.5, 1.0], vec![1.5, 0.4]).unwrap();
        let (nd, dd) = (lowest(&p, OuterBc::Neumann), lowest(&p, OuterBc::Dirichlet));
        for (a, b) in nd.iter().zip(&dd) {
            assert!(a <= &(b + 1e-12));
        }
        // sigma1 <= sigma2 <= sigma3 pointwise
        let chain = [
            BoundaryPotential::piecewise(vec![0.5, 1.0], vec![0.5, 0.0]).unwrap(),
            BoundaryPotential::piecewise(vec![0.5, 1.0], vec![1.0, 0.2]).unwrap(),
            BoundaryPotential::piecewise(vec![0.5, 1.0], vec![1.5, 0.4]).unwrap(),
        ];
        let spectra: Vec<_> = chain.iter().map(|p| lowest(p, OuterBc::Dirichlet)).collect();
        for w in spectra.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                assert!(b <= &(a + 1e-12));
            }
        }
    }

    #[test]
    fn interpolation_reproduces_nodes_and_bilinear_functions() {
        let f = small(&BoundaryPotential::zero(), OuterBc::Neumann);
        let u = f.inject(|x, y| 1.0 + 2.0 * x - y + 0.5 * x * y).unwrap();
        let g = |x: f64, y: f64| 1.0 + 2.0 * x - y + 0.5 * x * y;
        for &(x, y) in &[(0.0, 0.0), (0.25, 0.5), (1.1, 2.3), (2.99, 0.01), (3.0, 3.0)] {
            assert!((f.interpolate(&u, x, y) - g(x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_dump_lists_every_entry() {
        let f = small(&BoundaryPotential::constant(1.0).unwrap(), OuterBc::Neumann);
        let mut buf = Vec::new();
        f.write_matrix(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), f.matrix().nnz() + 1);
        // values round-trip exactly at 17 significant digits
        for line in text.lines().skip(1) {
            let parts: Vec<&str> = line.split(' ').collect();
            let (i, j, v): (usize, usize, f64) =
                (parts[0].parse().unwrap(), parts[1].parse().unwrap(), parts[2].parse().unwrap());
            assert_eq!(v, f.matrix().get(i, j));
        }
    }
}
