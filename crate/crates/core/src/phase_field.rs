//! Ambrosio–Tortorelli regularization: energy, the two convex half-steps and
//! their alternation under the irreversibility constraint `v ≤ v_prev`.
//!
//! The surface term is discretized as
//!
//! ```text
//! Σ_cells g_c · [ ε |∇v|²_c + (1 − v)²_c / (4ε) ] · h²
//! ```
//!
//! with the same edge-averaged gradient as the elastic term and a lumped
//! (corner-averaged) potential `(1 − v)²_c = ¼ Σ_corners (1 − v_n)²`. The
//! lumping keeps the v-subproblem matrix well behaved: its only positive
//! off-diagonal entries come from the elastic coupling through the cell
//! mean.

use std::collections::VecDeque;
use std::io::Write;

use crate::elastic::{cell_grad_sq, edge_weights_from_cells, solve_with, DirichletData, Material, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::{BoundaryPartition, DamageField, Grid2, Label, RangePolicy, ScalarField, SeparatorAxis};
use crate::linalg::{pcg, CgOptions, SparseOperator};

/// Cells whose mean damage lies below this value form the reported crack.
pub const CRACK_THRESHOLD: f64 = 0.1;

/// Per-cell surface energy density `g` (energy per unit length).
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceDensityField {
    pub grid: Grid2,
    values: Vec<f64>,
}

impl SurfaceDensityField {
    pub fn uniform(grid: Grid2, g: f64) -> Self {
        Self { grid, values: vec![g; grid.n_cells()] }
    }

    /// Checked constructor: every entry must lie in `[lo, hi]`.
    pub fn new(grid: Grid2, values: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch);
        }
        for &g in &values {
            if !(g >= lo && g <= hi) {
                return Err(Error::InvalidParameter(format!("surface density {g} outside [{lo}, {hi}]")));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ATEnergyBreakdown {
    pub elastic: f64,
    pub surface: f64,
    pub total: f64,
    /// Surface term evaluated with `g ≡ 1`: an estimate of crack length.
    pub surface_length_estimate: f64,
}

fn surface_with(v: &DamageField, g: impl Fn(usize) -> f64, eps: f64) -> f64 {
    let grid = v.grid;
    let h2 = grid.h * grid.h;
    let vals = v.values();
    (0..grid.n_cells())
        .map(|c| {
            let pot = grid.cell_corners(c).iter().map(|&n| (1.0 - vals[n]).powi(2)).sum::<f64>() / 4.0;
            g(c) * (eps * cell_grad_sq(vals, &grid, c) + pot / (4.0 * eps)) * h2
        })
        .sum()
}

/// Surface term alone.
pub fn surface_energy(v: &DamageField, g: &SurfaceDensityField, eps: f64) -> Result<f64> {
    if v.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    Ok(surface_with(v, |c| g.values[c], eps))
}

pub fn at_energy(
    u: &ScalarField,
    v: &DamageField,
    g: &SurfaceDensityField,
    mat: &Material,
) -> Result<ATEnergyBreakdown> {
    if u.grid != v.grid || v.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    if mat.eps < u.grid.h {
        log::warn!("eps = {} is below the grid spacing {}; the crack profile is under-resolved", mat.eps, u.grid.h);
    }
    let elastic = crate::elastic::elastic_energy(u, v, mat)?;
    let surface = surface_with(v, |c| g.values[c], mat.eps);
    Ok(ATEnergyBreakdown {
        elastic,
        surface,
        total: elastic + surface,
        surface_length_estimate: surface_with(v, |_| 1.0, mat.eps),
    })
}

/// Equilibrium displacement for fixed damage.
pub fn minimize_u(
    part: &BoundaryPartition,
    bc: &DirichletData,
    v: &DamageField,
    mat: &Material,
    tol: f64,
) -> Result<ScalarField> {
    solve_with(part, bc, v, mat, SolveOptions::with_tol(tol), None, None)
}

/// Assemble the quadratic v-problem `½ vᵀAv − bᵀv` for fixed `u`.
fn v_system(u: &ScalarField, g: &SurfaceDensityField, mat: &Material) -> (SparseOperator, Vec<f64>) {
    let grid = u.grid;
    let h2 = grid.h * grid.h;
    let eps = mat.eps;
    let gv = &g.values;
    let kappa: Vec<f64> = gv.iter().map(|g| eps * g).collect();
    let mut op = SparseOperator::from_edge_weights(grid, edge_weights_from_cells(&grid, &kappa));
    let alpha: Vec<f64> =
        (0..grid.n_cells()).map(|c| 2.0 * mat.mu * cell_grad_sq(u.values(), &grid, c) * h2).collect();
    op = op.with_cell_block(alpha);
    let mut mass = vec![0.0; grid.n_nodes()];
    for (c, &gc) in gv.iter().enumerate() {
        for n in grid.cell_corners(c) {
            mass[n] += gc * h2 / (8.0 * eps);
        }
    }
    op.add_diagonal(&mass);
    (op, mass)
}

/// Minimize the AT energy in `v` for fixed `u`, subject to `0 ≤ v ≤ v_prev`.
///
/// The bound-constrained quadratic problem is solved by a primal-dual active
/// set iteration started from the unconstrained minimizer; the result is
/// clamped into the box at the end.
pub fn minimize_v(
    u: &ScalarField,
    v_prev: &DamageField,
    g: &SurfaceDensityField,
    mat: &Material,
    tol: f64,
) -> Result<DamageField> {
    if u.grid != v_prev.grid || u.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    let n = u.grid.n_nodes();
    let (op, b) = v_system(u, g, mat);
    let hi = v_prev.values();
    let opts = CgOptions { tol, max_iter: None };

    // 0 = free, 1 = held at v_prev, -1 = held at zero
    let mut state = vec![0i8; n];
    let mut x: Vec<f64> = hi.to_vec();
    let mut fixed = vec![false; n];
    let gtol = 1e-9 * b.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut grad = vec![0.0; n];
    const MAX_ROUNDS: usize = 25;
    for round in 0..MAX_ROUNDS {
        for i in 0..n {
            fixed[i] = state[i] != 0;
            match state[i] {
                1 => x[i] = hi[i],
                -1 => x[i] = 0.0,
                _ => {}
            }
        }
        pcg(&op, &b, &mut x, &fixed, opts)?;
        op.apply(&x, &mut grad);
        let mut changed = 0usize;
        for i in 0..n {
            let gi = grad[i] - b[i];
            match state[i] {
                0 if x[i] > hi[i] => {
                    state[i] = 1;
                    changed += 1;
                }
                0 if x[i] < 0.0 => {
                    state[i] = -1;
                    changed += 1;
                }
                // lowering v would reduce the energy: release
                1 if gi > gtol && hi[i] > 0.0 => {
                    state[i] = 0;
                    changed += 1;
                }
                -1 if gi < -gtol => {
                    state[i] = 0;
                    changed += 1;
                }
                _ => {}
            }
        }
        if changed == 0 {
            break;
        }
        if round + 1 == MAX_ROUNDS {
            log::debug!("active set still changing ({changed} nodes) after {MAX_ROUNDS} rounds");
        }
    }
    for i in 0..n {
        x[i] = x[i].min(hi[i]).clamp(0.0, 1.0);
    }
    DamageField::with_policy(u.grid, x, RangePolicy::Clamp)
}

#[derive(Debug, Clone, Copy)]
pub struct AlternateOptions {
    /// Relative energy change that ends the alternation.
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Relative residual for the inner linear solves.
    pub solve_tol: f64,
    /// Record the energy after every iteration.
    pub record: bool,
}

impl Default for AlternateOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-6, max_iters: 200, solve_tol: 1e-10, record: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub elastic: f64,
    pub surface: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct Alternation {
    pub u: ScalarField,
    pub v: DamageField,
    pub energy: ATEnergyBreakdown,
    /// Value of the L² penalty term, zero without one.
    pub penalty: f64,
    pub iterations: usize,
    pub log: Vec<IterationRecord>,
}

/// Quadratic penalty `weight · ∫ (u − reference)²` added to the
/// displacement subproblem, with an optional box `|u| ≤ bound` enforced by
/// projection after each solve.
#[derive(Debug, Clone, Copy)]
pub struct Penalty<'a> {
    pub weight: f64,
    pub reference: &'a ScalarField,
    pub bound: Option<f64>,
}

impl Penalty<'_> {
    fn masses(&self) -> Vec<f64> {
        self.reference.grid.nodal_areas().into_iter().map(|a| a * self.weight).collect()
    }

    fn value(&self, u: &ScalarField, masses: &[f64]) -> f64 {
        masses
            .iter()
            .zip(u.values().iter().zip(self.reference.values()))
            .map(|(m, (a, b))| m * (a - b).powi(2))
            .sum()
    }
}

/// Alternate u- and v-minimization starting from `v_prev`.
pub fn alternate_minimize(
    part: &BoundaryPartition,
    bc: &DirichletData,
    v_prev: &DamageField,
    g: &SurfaceDensityField,
    mat: &Material,
    opts: AlternateOptions,
) -> Result<Alternation> {
    alternate_minimize_from(part, bc, v_prev, v_prev, g, mat, opts, None)
}

/// Alternation started from damage `v_start` (clipped to `v_prev`), with an
/// optional displacement guess for the first solve.
#[allow(clippy::too_many_arguments)]
pub fn alternate_minimize_from(
    part: &BoundaryPartition,
    bc: &DirichletData,
    v_start: &DamageField,
    v_prev: &DamageField,
    g: &SurfaceDensityField,
    mat: &Material,
    opts: AlternateOptions,
    u_guess: Option<&ScalarField>,
) -> Result<Alternation> {
    alternate_core(part, bc, v_start, v_prev, g, mat, opts, u_guess, None)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn alternate_core(
    part: &BoundaryPartition,
    bc: &DirichletData,
    v_start: &DamageField,
    v_prev: &DamageField,
    g: &SurfaceDensityField,
    mat: &Material,
    opts: AlternateOptions,
    u_guess: Option<&ScalarField>,
    penalty: Option<Penalty<'_>>,
) -> Result<Alternation> {
    if !(opts.rel_tol > 0.0) || opts.max_iters == 0 {
        return Err(Error::InvalidParameter(format!(
            "rel_tol = {}, max_iters = {}",
            opts.rel_tol, opts.max_iters
        )));
    }
    let grid = part.grid;
    if v_start.grid != grid || v_prev.grid != grid || g.grid != grid {
        return Err(Error::GridMismatch);
    }
    if penalty.is_some_and(|p| p.reference.grid != grid) {
        return Err(Error::GridMismatch);
    }
    if bc.is_zero() && penalty.is_none_or(|p| p.reference.max_abs() == 0.0) {
        let u = ScalarField::zeros(grid);
        let energy = at_energy(&u, v_prev, g, mat)?;
        return Ok(Alternation { u, v: v_prev.clone(), energy, penalty: 0.0, iterations: 0, log: Vec::new() });
    }
    let masses = penalty.map(|p| p.masses());
    let solve_u = |v: &DamageField, guess: Option<&ScalarField>| -> Result<ScalarField> {
        let reaction = penalty.zip(masses.as_deref()).map(|(p, m)| crate::elastic::Reaction {
            mass: m,
            reference: p.reference.values(),
        });
        let u = solve_with(part, bc, v, mat, SolveOptions::with_tol(opts.solve_tol), guess, reaction)?;
        Ok(match penalty.and_then(|p| p.bound) {
            Some(b) => ScalarField::from_raw(grid, u.into_values().into_iter().map(|x| x.clamp(-b, b)).collect()),
            None => u,
        })
    };
    let pen = |u: &ScalarField| match (penalty, masses.as_deref()) {
        (Some(p), Some(m)) => p.value(u, m),
        _ => 0.0,
    };

    let mut v = v_start.min_with(v_prev)?;
    let mut u = solve_u(&v, u_guess)?;
    let mut e = at_energy(&u, &v, g, mat)?;
    let mut p = pen(&u);
    let mut log = Vec::new();
    let mut last_delta = f64::INFINITY;
    for it in 1..=opts.max_iters {
        let mut v_new = minimize_v(&u, v_prev, g, mat, opts.solve_tol)?;
        let e_half = at_energy(&u, &v_new, g, mat)?;
        if e_half.total > e.total {
            // The constrained solve is exact up to the active-set cap; never
            // accept an ascent step.
            v_new = v.clone();
        }
        v = v_new;
        u = solve_u(&v, Some(&u))?;
        let e_new = at_energy(&u, &v, g, mat)?;
        let p_new = pen(&u);
        let (old, new) = (e.total + p, e_new.total + p_new);
        last_delta = (new - old).abs() / new.max(1e-30);
        e = e_new;
        p = p_new;
        if opts.record {
            log.push(IterationRecord { iter: it, elastic: e.elastic, surface: e.surface, total: e.total });
        }
        if last_delta <= opts.rel_tol {
            return Ok(Alternation { u, v, energy: e, penalty: p, iterations: it, log });
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iters, last_delta })
}

/// Write an iteration log as `iter,elastic,surface,total`.
pub fn write_iteration_log(mut w: impl Write, log: &[IterationRecord]) -> Result<()> {
    writeln!(w, "iter,elastic,surface,total")?;
    for r in log {
        writeln!(w, "{},{:.16e},{:.16e},{:.16e}", r.iter, r.elastic, r.surface, r.total)?;
    }
    Ok(())
}

/// Flags cells whose mean damage is below [`CRACK_THRESHOLD`].
pub fn crack_cells(v: &DamageField) -> Vec<bool> {
    (0..v.grid.n_cells()).map(|c| v.cell_mean(c) < CRACK_THRESHOLD).collect()
}

/// Whether the cracked cells disconnect every cell touching `GammaU1` from
/// every cell touching `GammaU2` (4-connectivity through intact cells).
pub fn separates(part: &BoundaryPartition, v: &DamageField) -> bool {
    let grid = part.grid;
    let cracked = crack_cells(v);
    let touches = |c: usize, l: Label| grid.cell_corners(c).iter().any(|&n| part.label(n) == Some(l));
    let mut seen = vec![false; grid.n_cells()];
    let mut queue = VecDeque::new();
    for c in 0..grid.n_cells() {
        if !cracked[c] && touches(c, Label::GammaU1) {
            seen[c] = true;
            queue.push_back(c);
        }
    }
    let (cx, cy) = (grid.nx - 1, grid.ny - 1);
    while let Some(c) = queue.pop_front() {
        if touches(c, Label::GammaU2) {
            return false;
        }
        let (i, j) = grid.cell_ij(c);
        let mut nb = Vec::with_capacity(4);
        if i > 0 {
            nb.push(grid.cell(i - 1, j));
        }
        if i + 1 < cx {
            nb.push(grid.cell(i + 1, j));
        }
        if j > 0 {
            nb.push(grid.cell(i, j - 1));
        }
        if j + 1 < cy {
            nb.push(grid.cell(i, j + 1));
        }
        for d in nb {
            if !cracked[d] && !seen[d] {
                seen[d] = true;
                queue.push_back(d);
            }
        }
    }
    true
}

/// Symmetric-difference area of the two thresholded crack sets divided by
/// `2ε`: a length-like distance between phase-field cracks.
pub fn crack_set_distance(a: &DamageField, b: &DamageField, eps: f64) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let h2 = a.grid.h * a.grid.h;
    let diff = crack_cells(a).iter().zip(crack_cells(b)).filter(|(x, y)| **x != *y).count();
    Ok(diff as f64 * h2 / (2.0 * eps))
}

/// Optimal one-dimensional profile `1 − exp(−d/(2ε))` for a distance
/// function `d`.
pub fn profile_from_distance(grid: Grid2, eps: f64, d: impl Fn(f64, f64) -> f64) -> Result<DamageField> {
    DamageField::from_fn(grid, |x, y| 1.0 - (-d(x, y).abs() / (2.0 * eps)).exp())
}

/// Profile of a full-width crack occupying the row (or column) of cells
/// with index `line`, perpendicular to the load direction implied by
/// `axis`. Both node lines bounding the cell row are fully damaged: in the
/// discrete energy a displacement jump inside a cell is only released when
/// the cell mean of the damage vanishes.
pub fn line_crack(grid: Grid2, axis: SeparatorAxis, line: usize, eps: f64) -> Result<DamageField> {
    let h = grid.h;
    let mid = (line as f64 + 0.5) * h;
    let dist = move |s: f64| ((s - mid).abs() - 0.5 * h).max(0.0);
    match axis {
        SeparatorAxis::Horizontal => profile_from_distance(grid, eps, |_, y| dist(y)),
        SeparatorAxis::Vertical => profile_from_distance(grid, eps, |x, _| dist(x)),
    }
}
