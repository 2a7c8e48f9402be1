//! Sparse LDLᵀ factorization without pivoting, used both as the shift-invert
//! operator and for inertia counting.
//!
//! The numeric phase is the up-looking row algorithm driven by the
//! elimination tree. For grid matrices a nested-dissection ordering keeps the
//! fill near `O(N log N)`.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Nested-dissection ordering of an `nx × ny` grid with node index
/// `i * ny + j`. Returns `perm` with `perm[new] = old`.
pub fn nested_dissection(nx: usize, ny: usize) -> Vec<usize> {
    fn recurse(i0: usize, i1: usize, j0: usize, j1: usize, ny: usize, out: &mut Vec<usize>) {
        let (wi, wj) = (i1 - i0, j1 - j0);
        if wi == 0 || wj == 0 {
            return;
        }
        if wi * wj <= 16 || wi.min(wj) <= 2 && wi.max(wj) <= 8 {
            for i in i0..i1 {
                for j in j0..j1 {
                    out.push(i * ny + j);
                }
            }
            return;
        }
        if wi >= wj {
            let mid = i0 + wi / 2;
            recurse(i0, mid, j0, j1, ny, out);
            recurse(mid + 1, i1, j0, j1, ny, out);
            for j in j0..j1 {
                out.push(mid * ny + j);
            }
        } else {
            let mid = j0 + wj / 2;
            recurse(i0, i1, j0, mid, ny, out);
            recurse(i0, i1, mid + 1, j1, ny, out);
            for i in i0..i1 {
                out.push(i * ny + mid);
            }
        }
    }
    let mut out = Vec::with_capacity(nx * ny);
    recurse(0, nx, 0, ny, ny, &mut out);
    out
}

const NONE: usize = usize::MAX;

/// `P (A - shift I) Pᵀ = L D Lᵀ` with unit lower-triangular `L`.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    shift: f64,
    perm: Vec<usize>,
    // L by columns, strictly below the diagonal
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    /// Factors `A - shift I` under the ordering `perm` (`perm[new] = old`).
    ///
    /// A pivot with `|d| <= pivot_tol * max|a_ii - shift|` aborts with
    /// [`Error::ZeroPivot`].
    pub fn factor(a: &CsrMatrix, shift: f64, perm: &[usize], pivot_tol: f64) -> Result<Self> {
        let n = a.dim();
        if perm.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: perm.len() });
        }
        let mut iperm = vec![NONE; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        if iperm.contains(&NONE) {
            return Err(Error::InvalidArgument("ordering is not a permutation".into()));
        }

        // upper triangle of the permuted matrix, by columns
        let mut cp = Vec::with_capacity(n + 1);
        let mut ci = Vec::with_capacity(a.nnz() / 2 + n);
        let mut cx = Vec::with_capacity(a.nnz() / 2 + n);
        cp.push(0);
        let mut scale: f64 = 0.0;
        for k in 0..n {
            let old = perm[k];
            let mut col: Vec<(usize, f64)> = a
                .row(old)
                .filter_map(|(j, v)| {
                    let r = iperm[j];
                    (r <= k).then(|| (r, if j == old { v - shift } else { v }))
                })
                .collect();
            if !col.iter().any(|e| e.0 == k) {
                col.push((k, -shift));
            }
            col.sort_by_key(|e| e.0);
            for (r, v) in col {
                if r == k {
                    scale = scale.max(v.abs());
                }
                ci.push(r);
                cx.push(v);
            }
            cp.push(ci.len());
        }

        // symbolic: elimination tree and column counts
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &i0 in &ci[cp[k]..cp[k + 1]] {
                let mut i = i0;
                if i < k {
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let total = lp[n];

        // numeric
        let mut li = vec![0usize; total];
        let mut lx = vec![0.0; total];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        flag.iter_mut().for_each(|f| *f = NONE);
        lnz.iter_mut().for_each(|c| *c = 0);
        let threshold = pivot_tol * scale.max(f64::MIN_POSITIVE);

        for k in 0..n {
            y[k] = 0.0;
            let mut top = n;
            flag[k] = k;
            for p in cp[k]..cp[k + 1] {
                let mut i = ci[p];
                y[i] += cx[p];
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let end = lp[i] + lnz[i];
                for p in lp[i]..end {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[end] = k;
                lx[end] = l_ki;
                lnz[i] += 1;
            }
            if !(d[k].abs() > threshold) {
                return Err(Error::ZeroPivot { index: k, tau: shift });
            }
        }

        Ok(Self { n, shift, perm: perm.to_vec(), lp, li, lx, d })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn factor_nnz(&self) -> usize {
        self.lx.len()
    }

    /// Number of negative pivots, i.e. eigenvalues of `A` below the shift.
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&x| x < 0.0).count()
    }

    /// Solves `(A - shift I) x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let mut x: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.lp[j]..self.lp[j + 1] {
                    x[self.li[p]] -= self.lx[p] * xj;
                }
            }
        }
        for (xj, dj) in x.iter_mut().zip(&self.d) {
            *xj /= dj;
        }
        for j in (0..self.n).rev() {
            let mut acc = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                acc -= self.lx[p] * x[self.li[p]];
            }
            x[j] = acc;
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = x[new];
        }
    }
}
