//! Time-discrete quasi-static evolution.
//!
//! At step `k+1` the load is sampled at `t = (k+1)/s` and the AT energy is
//! minimized over pairs `(u, v)` with `v ≤ v_k`. Since alternate
//! minimization only finds critical points, each step may compare two
//! starts: the previous damage, and the previous damage intersected with a
//! full-width crack profile (when the boundary conditions single out a
//! separating direction). The lower energy wins.

use std::io::Write;

use crate::criteria::surface_density_field;
use crate::elastic::{elastic_energy, solve_with, DirichletData, Material, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::{
    partition_boundary, BoundaryPartition, BoundarySpec, DamageField, Grid2, ScalarField, SeparatorAxis,
};
use crate::phase_field::{
    alternate_core, at_energy, line_crack, separates, surface_energy, ATEnergyBreakdown, Alternation,
    AlternateOptions, Penalty, SurfaceDensityField,
};

/// Piecewise-linear function of time, extended past its last knot with the
/// slope of the last segment (constant for a single knot).
#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise {
    knots: Vec<(f64, f64)>,
}

impl Piecewise {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidParameter("load program needs at least one knot".into()));
        }
        if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite load knot".into()));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParameter("load knots must have increasing times".into()));
        }
        Ok(Self { knots })
    }

    pub fn constant(v: f64) -> Self {
        Self { knots: vec![(0.0, v)] }
    }

    /// `rate · t`.
    pub fn ramp(rate: f64) -> Self {
        Self { knots: vec![(0.0, 0.0), (1.0, rate)] }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = &self.knots;
        if k.len() == 1 {
            return k[0].1;
        }
        let i = match k.iter().position(|(tk, _)| *tk > t) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => k.len() - 2,
        };
        let (t0, v0) = k[i];
        let (t1, v1) = k[i + 1];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// Imposed displacement per Dirichlet label.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProgram {
    pub on_u1: Piecewise,
    pub on_u2: Piecewise,
}

impl LoadProgram {
    /// Zero on `GammaU1`, `delta · t` on `GammaU2`.
    pub fn opening(delta: f64) -> Self {
        Self { on_u1: Piecewise::constant(0.0), on_u2: Piecewise::ramp(delta) }
    }

    pub fn eval(&self, t: f64) -> (f64, f64) {
        (self.on_u1.eval(t), self.on_u2.eval(t))
    }

    pub fn dirichlet(&self, part: &BoundaryPartition, t: f64) -> Result<DirichletData> {
        let (a, b) = self.eval(t);
        DirichletData::uniform(part, a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    /// Constant surface density `G`.
    First,
    /// Surface density from the local appearance criterion of the previous
    /// state.
    Improved,
    /// First model with an additional L² penalty `λ s ∫ (u − u_k)²`.
    Viscous { lambda: f64 },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::First => "first",
            Model::Improved => "improved",
            Model::Viscous { .. } => "viscous",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: Grid2,
    pub boundary: BoundarySpec,
    pub load: LoadProgram,
    pub material: Material,
    pub model: Model,
    /// Time horizon `T`.
    pub horizon: f64,
    /// Steps per unit time `s`.
    pub steps_per_unit: usize,
    pub alternation: AlternateOptions,
    /// Compare against a pre-cracked start at every step.
    pub multistart: bool,
    pub initial_damage: Option<DamageField>,
}

impl Scenario {
    /// Strip `[0, a] × [0, L]` fixed at the bottom, pulled by `δ t` at the
    /// top, free on the sides.
    pub fn strip(nx: usize, ny: usize, a: f64, l: f64, material: Material, delta: f64, horizon: f64, s: usize) -> Result<Self> {
        Ok(Self {
            grid: Grid2::new(nx, ny, a, l)?,
            boundary: BoundarySpec::strip(),
            load: LoadProgram::opening(delta),
            material,
            model: Model::First,
            horizon,
            steps_per_unit: s,
            alternation: AlternateOptions { max_iters: 500, ..AlternateOptions::default() },
            multistart: true,
            initial_damage: None,
        })
    }

    pub fn with_model(mut self, model: Model) -> Self {
        self.model = model;
        self
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon * self.steps_per_unit as f64 - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<BoundaryPartition> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("T = {}", self.horizon)));
        }
        if self.steps_per_unit == 0 {
            return Err(Error::InvalidParameter("s = 0".into()));
        }
        if let Model::Viscous { lambda } = self.model {
            if !(lambda > 0.0) {
                return Err(Error::InvalidParameter(format!("lambda = {lambda}")));
            }
        }
        self.material.validated()?;
        if let Some(v) = &self.initial_damage {
            if v.grid != self.grid {
                return Err(Error::GridMismatch);
            }
        }
        let part = partition_boundary(&self.grid, &self.boundary)?;
        if !part.has_dirichlet() {
            return Err(Error::SingularSystem);
        }
        Ok(part)
    }

    /// Length of the boundary portion a separating crack has to cross.
    pub fn reference_length(&self, part: &BoundaryPartition) -> f64 {
        match part.separator_axis() {
            Some(SeparatorAxis::Horizontal) => self.grid.lx,
            Some(SeparatorAxis::Vertical) => self.grid.ly,
            None => self.grid.lx.max(self.grid.ly),
        }
    }
}

/// State and bookkeeping of one time step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub k: usize,
    pub t: f64,
    pub u: ScalarField,
    pub v: DamageField,
    pub energy: ATEnergyBreakdown,
    /// Elastic energy at the new load on the previous damage.
    pub elastic_star: f64,
    /// Surface energy of the new damage minus that of the previous one,
    /// both with the density used in this step.
    pub surface_increment: f64,
    pub cumulative_surface: f64,
    /// `elastic_star − elastic(u_k, v_k)`: the boundary work done by the
    /// load increment on the previous crack.
    pub power: f64,
    pub griffith_ok: bool,
    pub separated: bool,
    pub iterations: usize,
    /// The pre-cracked start won.
    pub seeded: bool,
    /// L² penalty of the viscous model (zero otherwise).
    pub penalty: f64,
    pub density: Option<SurfaceDensityField>,
}

#[derive(Debug, Clone)]
pub struct IncrementTrace {
    pub griffith: f64,
    pub reference_length: f64,
    pub steps_per_unit: usize,
    pub steps: Vec<StepRecord>,
}

impl IncrementTrace {
    /// First recorded step with a separating crack.
    pub fn onset(&self) -> Option<&StepRecord> {
        self.steps.iter().find(|r| r.separated)
    }

    pub fn default_slack(&self, total: f64) -> f64 {
        1e-6 * (total + self.griffith * self.reference_length)
    }
}

fn density_for(model: Model, mat: &Material, u: &ScalarField, v: &DamageField) -> Result<SurfaceDensityField> {
    match model {
        Model::Improved => surface_density_field(u, v, mat),
        _ => Ok(SurfaceDensityField::uniform(u.grid, mat.griffith)),
    }
}

/// Index of the cell row (or column) carrying the most damage; ties go to
/// the one nearest the middle.
fn most_damaged_line(v: &DamageField, axis: SeparatorAxis) -> usize {
    let g = v.grid;
    let (lines, along) = match axis {
        SeparatorAxis::Horizontal => (g.ny - 1, g.nx - 1),
        SeparatorAxis::Vertical => (g.nx - 1, g.ny - 1),
    };
    let damage = |l: usize| -> f64 {
        (0..along)
            .map(|a| {
                let c = match axis {
                    SeparatorAxis::Horizontal => g.cell(a, l),
                    SeparatorAxis::Vertical => g.cell(l, a),
                };
                1.0 - v.cell_mean(c)
            })
            .sum::<f64>()
            / along as f64
    };
    let d: Vec<f64> = (0..lines).map(damage).collect();
    let best = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mid = (lines - 1) as f64 / 2.0;
    (0..lines)
        .filter(|&l| d[l] >= best - 1e-9)
        .min_by(|&a, &b| (a as f64 - mid).abs().total_cmp(&(b as f64 - mid).abs()).then(a.cmp(&b)))
        .unwrap_or(lines / 2)
}

/// Run the incremental minimization over `[0, T]`.
pub fn run_incremental(scn: &Scenario) -> Result<IncrementTrace> {
    let part = scn.validate()?;
    let grid = scn.grid;
    let mat = &scn.material;
    let s = scn.steps_per_unit;
    let sopts = SolveOptions::with_tol(scn.alternation.solve_tol);
    let axis = part.separator_axis();

    let v0 = scn.initial_damage.clone().unwrap_or_else(|| DamageField::intact(grid));
    let bc0 = scn.load.dirichlet(&part, 0.0)?;
    let u0 = if bc0.is_zero() { ScalarField::zeros(grid) } else { solve_with(&part, &bc0, &v0, mat, sopts, None, None)? };
    let g0 = density_for(scn.model, mat, &u0, &v0)?;
    let e0 = at_energy(&u0, &v0, &g0, mat)?;
    let mut trace = IncrementTrace {
        griffith: mat.griffith,
        reference_length: scn.reference_length(&part),
        steps_per_unit: s,
        steps: Vec::with_capacity(scn.n_steps() + 1),
    };
    trace.steps.push(StepRecord {
        k: 0,
        t: 0.0,
        separated: separates(&part, &v0),
        u: u0,
        v: v0,
        energy: e0,
        elastic_star: e0.elastic,
        surface_increment: 0.0,
        cumulative_surface: e0.surface,
        power: 0.0,
        griffith_ok: true,
        iterations: 0,
        seeded: false,
        penalty: 0.0,
        density: None,
    });

    for k in 0..scn.n_steps() {
        let t = (k + 1) as f64 / s as f64;
        let step = || -> Result<StepRecord> {
            let prev = trace.steps.last().expect("trace starts with the initial state");
            let bc = scn.load.dirichlet(&part, t)?;
            let g = density_for(scn.model, mat, &prev.u, &prev.v)?;
            let u_star = solve_with(&part, &bc, &prev.v, mat, sopts, Some(&prev.u), None)?;
            let elastic_star = elastic_energy(&u_star, &prev.v, mat)?;
            let elastic_prev = elastic_energy(&prev.u, &prev.v, mat)?;
            let penalty = match scn.model {
                Model::Viscous { lambda } => {
                    Some(Penalty { weight: lambda * s as f64, reference: &prev.u, bound: None })
                }
                _ => None,
            };
            let minimize = |start: &DamageField| -> Result<Alternation> {
                alternate_core(&part, &bc, start, &prev.v, &g, mat, scn.alternation, Some(&u_star), penalty)
            };
            let mut best = minimize(&prev.v)?;
            let mut seeded = false;
            if scn.multistart && !prev.separated && !bc.is_zero() {
                if let Some(ax) = axis {
                    let line = most_damaged_line(&best.v, ax);
                    let seed = line_crack(grid, ax, line, mat.eps)?.min_with(&prev.v)?;
                    let alt = minimize(&seed)?;
                    let (e_best, e_alt) = (best.energy.total + best.penalty, alt.energy.total + alt.penalty);
                    log::debug!("step {}: intact start {e_best:.6e}, seeded start {e_alt:.6e}", k + 1);
                    if e_alt < e_best {
                        best = alt;
                        seeded = true;
                    }
                }
            }
            let surface_prev = surface_energy(&prev.v, &g, mat.eps)?;
            let increment = best.energy.surface - surface_prev;
            let griffith_ok = {
                let slack = trace.default_slack(best.energy.total);
                elastic_star >= best.energy.elastic + increment - slack
            };
            Ok(StepRecord {
                k: k + 1,
                t,
                separated: separates(&part, &best.v),
                energy: best.energy,
                elastic_star,
                surface_increment: increment,
                cumulative_surface: prev.cumulative_surface + increment,
                power: elastic_star - elastic_prev,
                griffith_ok,
                iterations: best.iterations,
                seeded,
                penalty: best.penalty,
                density: if scn.model == Model::Improved { Some(g) } else { None },
                u: best.u,
                v: best.v,
            })
        };
        let rec = step().map_err(|e| Error::StepFailed { step: k + 1, source: Box::new(e) })?;
        log::info!(
            "step {:>4} t = {:.4} elastic = {:.6e} surface = {:.6e} iters = {}{}{}",
            rec.k,
            rec.t,
            rec.energy.elastic,
            rec.energy.surface,
            rec.iterations,
            if rec.seeded { " (seeded)" } else { "" },
            if rec.separated { " separated" } else { "" }
        );
        trace.steps.push(rec);
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerVerdict {
    pub k: usize,
    /// Energy of the no-growth competitor: elastic energy on the old crack.
    pub lhs: f64,
    /// New elastic energy plus the surface increment.
    pub rhs: f64,
    pub ok: bool,
    pub power: f64,
}

/// Incremental Griffith inequality per step:
/// `elastic(u*, v_k) ≥ elastic(u_{k+1}, v_{k+1}) + Δsurface − slack`.
/// `slack = None` uses `1e-6 · (total + G·a)`.
pub fn griffith_ledger_check(trace: &IncrementTrace, slack: Option<f64>) -> Vec<LedgerVerdict> {
    trace
        .steps
        .iter()
        .skip(1)
        .map(|r| {
            let lhs = r.elastic_star;
            let rhs = r.energy.elastic + r.surface_increment;
            let sl = slack.unwrap_or_else(|| trace.default_slack(r.energy.total));
            LedgerVerdict { k: r.k, lhs, rhs, ok: lhs >= rhs - sl, power: r.power }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerBound {
    /// `s · max_k p_k`.
    pub p_est: f64,
    pub ok: bool,
    /// Steps where the bound fails.
    pub violations: Vec<usize>,
}

/// Check `total_k ≤ total_0 + P_est · k/s + slack` at every step.
pub fn power_bound_check(trace: &IncrementTrace, s: usize, slack: Option<f64>) -> PowerBound {
    let pmax = trace.steps.iter().skip(1).map(|r| r.power).fold(0.0_f64, f64::max);
    let p_est = s as f64 * pmax;
    let base = trace.steps.first().map_or(0.0, |r| r.energy.total);
    let violations: Vec<usize> = trace
        .steps
        .iter()
        .filter(|r| {
            let sl = slack.unwrap_or_else(|| trace.default_slack(r.energy.total));
            r.energy.total > base + p_est * r.k as f64 / s as f64 + sl
        })
        .map(|r| r.k)
        .collect();
    PowerBound { p_est, ok: violations.is_empty(), violations }
}

/// Onset time `sqrt(G L / μ)` of the separating crack in a strip of height
/// `L` pulled at unit rate.
pub fn critical_time_prediction(a: f64, l: f64, mat: &Material) -> Result<f64> {
    if !(a > 0.0) || !(l > 0.0) {
        return Err(Error::InvalidParameter(format!("a = {a}, L = {l}")));
    }
    Ok((mat.griffith * l / mat.mu).sqrt())
}

/// `k,t,elastic,surface,total,work,griffith_ok[,penalty]` with one row per
/// step; `work` is the per-step boundary work.
pub fn write_trace_csv(mut w: impl Write, trace: &IncrementTrace, with_penalty: bool) -> Result<()> {
    write!(w, "k,t,elastic,surface,total,work,griffith_ok")?;
    if with_penalty {
        write!(w, ",penalty")?;
    }
    writeln!(w)?;
    for r in &trace.steps {
        write!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.k,
            r.t,
            r.energy.elastic,
            r.energy.surface,
            r.energy.total,
            r.power,
            r.griffith_ok as u8
        )?;
        if with_penalty {
            write!(w, ",{:.16e}", r.penalty)?;
        }
        writeln!(w)?;
    }
    Ok(())
}
