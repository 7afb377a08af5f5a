//! Matrix-free symmetric operators on grid nodes and a Jacobi-preconditioned
//! conjugate gradient solver.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::grid::Grid2;

/// Symmetric positive-semidefinite operator assembled from three kinds of
/// terms on a grid:
///
/// * edge couplings `κ_e (x_a − x_b)²` (a weighted graph Laplacian),
/// * per-cell rank-one blocks `α_c/16 · (Σ corners x)²`,
/// * a nodal diagonal.
///
/// The quadratic form is `½ xᵀAx`, so `A` holds `κ_e` on each edge and
/// `α_c/16` on every corner pair of a cell.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub grid: Grid2,
    edges: Vec<[usize; 2]>,
    edge_weight: Vec<f64>,
    cell_block: Option<Vec<f64>>,
    diag: Vec<f64>,
    /// Hash of the damage field the operator was assembled from.
    pub damage_hash: u64,
}

impl SparseOperator {
    pub fn from_edge_weights(grid: Grid2, edge_weight: Vec<f64>) -> Self {
        debug_assert_eq!(edge_weight.len(), grid.n_edges());
        Self {
            grid,
            edges: grid.edges(),
            edge_weight,
            cell_block: None,
            diag: vec![0.0; grid.n_nodes()],
            damage_hash: 0,
        }
    }

    pub fn with_cell_block(mut self, alpha: Vec<f64>) -> Self {
        debug_assert_eq!(alpha.len(), self.grid.n_cells());
        self.cell_block = Some(alpha);
        self
    }

    pub fn add_diagonal(&mut self, d: &[f64]) {
        for (a, b) in self.diag.iter_mut().zip(d) {
            *a += b;
        }
    }

    pub fn with_damage_hash(mut self, values: &[f64]) -> Self {
        self.damage_hash = hash_values(values);
        self
    }

    pub fn dim(&self) -> usize {
        self.grid.n_nodes()
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, (d, xi)) in y.iter_mut().zip(self.diag.iter().zip(x)) {
            *yi = d * xi;
        }
        for (&[a, b], &k) in self.edges.iter().zip(&self.edge_weight) {
            let f = k * (x[a] - x[b]);
            y[a] += f;
            y[b] -= f;
        }
        if let Some(alpha) = &self.cell_block {
            for (c, &w) in alpha.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let corners = self.grid.cell_corners(c);
                let s = corners.iter().map(|&n| x[n]).sum::<f64>() * w / 16.0;
                for n in corners {
                    y[n] += s;
                }
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = self.diag.clone();
        for (&[a, b], &k) in self.edges.iter().zip(&self.edge_weight) {
            d[a] += k;
            d[b] += k;
        }
        if let Some(alpha) = &self.cell_block {
            for (c, &w) in alpha.iter().enumerate() {
                for n in self.grid.cell_corners(c) {
                    d[n] += w / 16.0;
                }
            }
        }
        d
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut ay = vec![0.0; y.len()];
        self.apply(y, &mut ay);
        dot(x, &ay)
    }
}

pub(crate) fn hash_values(values: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for v in values {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Relative residual target `‖r‖ / ‖b‖`.
    pub tol: f64,
    /// Iteration cap; `None` means `50 · n`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Solve `A_ff x_f = b_f − A_fd x_d` in place, where `fixed[n]` marks the
/// nodes whose entries of `x` are held at their current value. The free
/// entries of `x` are used as the initial guess.
pub fn pcg(op: &SparseOperator, b: &[f64], x: &mut [f64], fixed: &[bool], opts: CgOptions) -> Result<CgStats> {
    let n = op.dim();
    debug_assert!(b.len() == n && x.len() == n && fixed.len() == n);
    let max_iter = opts.max_iter.unwrap_or(50 * n);

    // Effective right-hand side b_f − A_fd x_d.
    let mut xd = vec![0.0; n];
    for i in 0..n {
        if fixed[i] {
            xd[i] = x[i];
        }
    }
    let mut tmp = vec![0.0; n];
    op.apply(&xd, &mut tmp);
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        if !fixed[i] {
            rhs[i] = b[i] - tmp[i];
        }
    }
    let bnorm = dot(&rhs, &rhs).sqrt();
    if bnorm == 0.0 {
        for i in 0..n {
            if !fixed[i] {
                x[i] = 0.0;
            }
        }
        return Ok(CgStats { iterations: 0, residual: 0.0 });
    }

    let diag = op.diagonal();
    let inv_diag: Vec<f64> = diag
        .iter()
        .zip(fixed)
        .map(|(d, &f)| if f || *d <= 0.0 { 0.0 } else { 1.0 / d })
        .collect();

    // r = rhs − A_ff x_f
    let mut xf = vec![0.0; n];
    for i in 0..n {
        if !fixed[i] {
            xf[i] = x[i];
        }
    }
    op.apply(&xf, &mut tmp);
    let mut r = vec![0.0; n];
    for i in 0..n {
        if !fixed[i] {
            r[i] = rhs[i] - tmp[i];
        }
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while res > opts.tol {
        if it >= max_iter {
            return Err(Error::SolverDiverged { iterations: it, residual: res });
        }
        op.apply(&p, &mut tmp);
        for i in 0..n {
            if fixed[i] {
                tmp[i] = 0.0;
            }
        }
        let pap = dot(&p, &tmp);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::SolverDiverged { iterations: it, residual: res });
        }
        let alpha = rz / pap;
        for i in 0..n {
            xf[i] += alpha * p[i];
            r[i] -= alpha * tmp[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        it += 1;
    }
    for i in 0..n {
        if !fixed[i] {
            x[i] = xf[i];
        }
    }
    Ok(CgStats { iterations: it, residual: res })
}
