//! Viscous minimizing movements: each step minimizes the AT energy plus the
//! penalty `λ s ∫ (u − u_k)²` under the boundary trace of the initial datum,
//! with `|u| ≤ ‖u₀‖_∞` enforced by projection.

use std::io::Write;

use crate::elastic::{DirichletData, Material};
use crate::error::{Error, Result};
use crate::grid::{BoundaryPartition, DamageField, ScalarField};
use crate::phase_field::{alternate_core, ATEnergyBreakdown, AlternateOptions, Penalty, SurfaceDensityField};

/// Boundary data and bound shared by all steps of a viscous run.
#[derive(Debug, Clone)]
pub struct ViscousSetup {
    pub part: BoundaryPartition,
    pub bc: DirichletData,
    /// `‖u₀‖_∞`.
    pub bound: f64,
}

impl ViscousSetup {
    pub fn from_initial(part: &BoundaryPartition, u0: &ScalarField) -> Result<Self> {
        Ok(Self { part: part.clone(), bc: DirichletData::trace_of(part, u0)?, bound: u0.max_abs() })
    }
}

#[derive(Debug, Clone)]
pub struct ViscousRecord {
    pub k: usize,
    pub t: f64,
    pub u: ScalarField,
    pub v: DamageField,
    pub energy: ATEnergyBreakdown,
    /// `λ s ‖u_k − u_{k−1}‖²`, zero for the initial state.
    pub penalty: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct ViscousTrace {
    pub s: f64,
    pub lambda: f64,
    pub bound: f64,
    pub steps: Vec<ViscousRecord>,
}

fn check_params(s: f64, lambda: f64) -> Result<()> {
    if !(s >= 1.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("s = {s}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda}")));
    }
    Ok(())
}

/// One implicit step from `(u_prev, v_prev)`.
pub fn viscous_step(
    setup: &ViscousSetup,
    u_prev: &ScalarField,
    v_prev: &DamageField,
    s: f64,
    lambda: f64,
    mat: &Material,
    opts: AlternateOptions,
) -> Result<ViscousRecord> {
    check_params(s, lambda)?;
    let g = SurfaceDensityField::uniform(u_prev.grid, mat.griffith);
    let pen = Penalty { weight: lambda * s, reference: u_prev, bound: Some(setup.bound) };
    let r = alternate_core(&setup.part, &setup.bc, v_prev, v_prev, &g, mat, opts, Some(u_prev), Some(pen))?;
    Ok(ViscousRecord { k: 0, t: 0.0, u: r.u, v: r.v, energy: r.energy, penalty: r.penalty, iterations: r.iterations })
}

/// `⌈sT⌉` viscous steps from the initial state `(u0, v0)`.
pub fn run_viscous(
    part: &BoundaryPartition,
    u0: &ScalarField,
    v0: &DamageField,
    s: f64,
    lambda: f64,
    horizon: f64,
    mat: &Material,
    opts: AlternateOptions,
) -> Result<ViscousTrace> {
    check_params(s, lambda)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("T = {horizon}")));
    }
    if u0.grid != part.grid || v0.grid != part.grid {
        return Err(Error::GridMismatch);
    }
    let setup = ViscousSetup::from_initial(part, u0)?;
    let g = SurfaceDensityField::uniform(u0.grid, mat.griffith);
    let n = (horizon * s - 1e-9).ceil().max(0.0) as usize;
    let mut steps = Vec::with_capacity(n + 1);
    steps.push(ViscousRecord {
        k: 0,
        t: 0.0,
        u: u0.clone(),
        v: v0.clone(),
        energy: crate::phase_field::at_energy(u0, v0, &g, mat)?,
        penalty: 0.0,
        iterations: 0,
    });
    for k in 1..=n {
        let prev = steps.last().expect("initial state present");
        let mut rec = viscous_step(&setup, &prev.u, &prev.v, s, lambda, mat, opts)
            .map_err(|e| Error::StepFailed { step: k, source: Box::new(e) })?;
        rec.k = k;
        rec.t = k as f64 / s;
        log::debug!("viscous step {k}: total = {:.6e}, penalty = {:.3e}", rec.energy.total, rec.penalty);
        steps.push(rec);
    }
    Ok(ViscousTrace { s, lambda, bound: setup.bound, steps })
}

/// Right-hand side factor `sqrt(t′ − t + 1/(λs))` of the Hölder estimate.
pub fn holder_bound(dt: f64, lambda: f64, s: f64) -> f64 {
    (dt + 1.0 / (lambda * s)).sqrt()
}

/// Lumped L² norm of a nodal field.
pub fn l2_norm(u: &ScalarField) -> f64 {
    u.grid.nodal_areas().iter().zip(u.values()).map(|(a, x)| a * x * x).sum::<f64>().sqrt()
}

pub fn l2_distance(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    Ok(a.grid
        .nodal_areas()
        .iter()
        .zip(a.values().iter().zip(b.values()))
        .map(|(m, (x, y))| m * (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderFit {
    /// Smallest constant for which every pair satisfies the estimate.
    pub m_fit: f64,
    /// Pairs `(k, k′)` exceeding a supplied constant.
    pub violations: Vec<(usize, usize)>,
}

/// Fit `M` in `‖u(t′) − u(t)‖ ≤ M sqrt(t′ − t + 1/(λs))` over all pairs.
pub fn holder_estimate_check(trace: &ViscousTrace, m: Option<f64>) -> Result<HolderFit> {
    let n = trace.steps.len();
    if n < 3 {
        return Err(Error::TraceTooShort(n));
    }
    let mut m_fit = 0.0_f64;
    let mut violations = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&trace.steps[i], &trace.steps[j]);
            let d = l2_distance(&a.u, &b.u)?;
            let bound = holder_bound(b.t - a.t, trace.lambda, trace.s);
            let ratio = d / bound;
            m_fit = m_fit.max(ratio);
            if m.is_some_and(|m| ratio > m) {
                violations.push((a.k, b.k));
            }
        }
    }
    Ok(HolderFit { m_fit, violations })
}

/// Same schema as the quasi-static trace plus a `penalty` column; `work`
/// is zero since the boundary data do not change.
pub fn write_viscous_csv(mut w: impl Write, trace: &ViscousTrace) -> Result<()> {
    writeln!(w, "k,t,elastic,surface,total,work,griffith_ok,penalty")?;
    for r in &trace.steps {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},1,{:.16e}",
            r.k, r.t, r.energy.elastic, r.energy.surface, r.energy.total, 0.0, r.penalty
        )?;
    }
    Ok(())
}
