//! Command-line entry points for the `mmfrac` binary.
//!
//! Exit codes: 0 on success, 1 on invalid input (bad flags, config or field
//! files), 2 when a solver fails.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{error::ErrorKind, Args, Parser, Subcommand};

use mmfrac::config::ScenarioConfig;
use mmfrac::criteria::{
    antiplane_la_max, antiplane_la_threshold, critical_uniaxial_stress, f_c, f_infinity, la_sup,
    surface_density_field, TensorState,
};
use mmfrac::evolution::{critical_time_prediction, run_incremental, write_trace_csv, IncrementTrace, Model, Scenario};
use mmfrac::k2::{k2_contour, ContourSpec, CrackCut};
use mmfrac::{io, DamageField, Error, Material};

#[derive(Debug, Parser)]
#[command(name = "mmfrac", about = "Quasi-static brittle fracture simulator", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the incremental evolution described by a scenario file.
    Run(RunArgs),
    /// Pull a strip apart and compare the crack onset with sqrt(G L / mu).
    StripTest(StripArgs),
    /// Energy release rate of a field by contour integrals.
    K2(K2Args),
    /// Evaluate the local admissibility quantities at one tensor state.
    Criteria(CriteriaArgs),
    /// Run the viscous model described by a scenario file.
    Viscous(ViscousArgs),
    /// Print the version.
    Version,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file (TOML).
    config: PathBuf,
    /// Override the output directory of the scenario.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ViscousArgs {
    config: PathBuf,
    /// Viscosity parameter; overrides `model.lambda`.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StripArgs {
    /// Strip height.
    #[arg(long = "L", default_value_t = 1.0)]
    l: f64,
    /// Strip width.
    #[arg(long = "a", default_value_t = 1.0)]
    a: f64,
    #[arg(long = "G", default_value_t = 1.0)]
    g: f64,
    #[arg(long = "mu", default_value_t = 1.0)]
    mu: f64,
    /// Cells per unit length.
    #[arg(long, default_value_t = 32)]
    cells: usize,
    /// Steps per unit time.
    #[arg(long, default_value_t = 50)]
    s: usize,
    /// Final time; defaults to 1.6 times the predicted onset.
    #[arg(long = "T")]
    horizon: Option<f64>,
    /// Regularization length; defaults to two cells.
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Debug, Args)]
struct K2Args {
    /// Displacement field CSV.
    #[arg(long)]
    field: PathBuf,
    /// Crack tip `x,y`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    tip: Vec<f64>,
    /// Direction from the tip along the crack faces, in radians.
    #[arg(long, default_value_t = std::f64::consts::PI, allow_negative_numbers = true)]
    crack_angle: f64,
    /// Contour radii, decreasing.
    #[arg(long, value_delimiter = ',')]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 720)]
    samples: usize,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Do not treat the crack faces as a cut.
    #[arg(long)]
    no_cut: bool,
}

#[derive(Debug, Args)]
struct CriteriaArgs {
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Young's modulus; defaults to 3 mu.
    #[arg(long = "E")]
    young: Option<f64>,
    #[arg(long = "G", default_value_t = 1.0)]
    g: f64,
    #[arg(long = "Sigma")]
    sigma_c: f64,
    /// Upper bound of the surface density; defaults to 100 G.
    #[arg(long)]
    cap: Option<f64>,
    /// Anti-plane gradient `gx,gy`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with_all = ["stress", "deformation"])]
    grad: Option<Vec<f64>>,
    /// Stress tensor, nine row-major entries.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, requires = "deformation")]
    stress: Option<Vec<f64>>,
    /// Deformation gradient, nine row-major entries.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, requires = "stress")]
    deformation: Option<Vec<f64>>,
    /// Crack normal (two entries in anti-plane mode, three otherwise).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    normal: Option<Vec<f64>>,
    /// Displacement field CSV; reports the range of the surface density.
    #[arg(long, conflicts_with_all = ["grad", "stress"])]
    field: Option<PathBuf>,
    /// Damage field CSV to go with `--field`; intact if omitted.
    #[arg(long, requires = "field")]
    damage: Option<PathBuf>,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

fn is_solver_failure(e: &Error) -> bool {
    match e {
        Error::SolverDiverged { .. } | Error::SingularSystem | Error::NoConvergence { .. } => true,
        Error::StepFailed { source, .. } => is_solver_failure(source),
        _ => false,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self { code: if is_solver_failure(&e) { 2 } else { 1 }, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::invalid(format!("i/o: {e}"))
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parse `args` (program name first) and run the subcommand; returns the
/// process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a, &mut out),
        Command::StripTest(a) => cmd_strip(a, &mut out),
        Command::K2(a) => cmd_k2(a, &mut out),
        Command::Criteria(a) => cmd_criteria(a, &mut out),
        Command::Viscous(a) => cmd_viscous(a, &mut out),
        Command::Version => writeln!(out, "mmfrac {}", env!("CARGO_PKG_VERSION")).map_err(Failure::from),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load_config(path: &Path) -> std::result::Result<ScenarioConfig, Failure> {
    ScenarioConfig::from_path(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::invalid(format!("cannot create {}: {e}", path.display())))
}

/// Trace, optional snapshots and a VTK file of the final state.
fn write_outputs(dir: &Path, trace: &IncrementTrace, stride: usize, with_penalty: bool) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| Failure::invalid(format!("cannot create {}: {e}", dir.display())))?;
    let mut w = create(&dir.join("trace.csv"))?;
    write_trace_csv(&mut w, trace, with_penalty)?;
    w.flush()?;
    if stride > 0 {
        for r in trace.steps.iter().filter(|r| r.k % stride == 0) {
            io::write_field_csv(create(&dir.join(format!("u_{:05}.csv", r.k)))?, &r.u)?;
            io::write_damage_csv(create(&dir.join(format!("v_{:05}.csv", r.k)))?, &r.v)?;
        }
    }
    if let Some(last) = trace.steps.last() {
        let mut w = create(&dir.join("final.vtk"))?;
        io::write_vtk(&mut w, &last.u.grid, "mmfrac final state", &[("u", last.u.values()), ("v", last.v.values())])?;
        w.flush()?;
    }
    Ok(())
}

fn summarize(out: &mut impl Write, trace: &IncrementTrace) -> CliResult {
    let last = trace.steps.last();
    writeln!(out, "steps = {}", trace.steps.len().saturating_sub(1))?;
    match trace.onset() {
        Some(r) => writeln!(out, "onset step = {}, t = {:.16e}", r.k, r.t)?,
        None => writeln!(out, "onset step = none")?,
    }
    if let Some(r) = last {
        writeln!(out, "final total energy = {:.16e}", r.energy.total)?;
    }
    Ok(())
}

fn cmd_run(a: RunArgs, out: &mut impl Write) -> CliResult {
    let cfg = load_config(&a.config)?;
    let scn = cfg.to_scenario()?;
    let trace = run_incremental(&scn)?;
    let dir = a.out.unwrap_or_else(|| cfg.output.dir.clone());
    write_outputs(&dir, &trace, cfg.output.snapshot_stride, matches!(scn.model, Model::Viscous { .. }))?;
    writeln!(out, "model = {}", scn.model.name())?;
    summarize(out, &trace)?;
    writeln!(out, "output = {}", dir.display())?;
    Ok(())
}

fn cmd_viscous(a: ViscousArgs, out: &mut impl Write) -> CliResult {
    let cfg = load_config(&a.config)?;
    let lambda = match (a.lambda, cfg.model) {
        (Some(l), _) => l,
        (None, Model::Viscous { lambda }) => lambda,
        (None, _) => return Err(Failure::invalid("no viscosity: pass --lambda or set model.kind = \"viscous\"")),
    };
    let scn = cfg.to_scenario()?.with_model(Model::Viscous { lambda });
    let trace = run_incremental(&scn)?;
    let dir = a.out.unwrap_or_else(|| cfg.output.dir.clone());
    write_outputs(&dir, &trace, cfg.output.snapshot_stride, true)?;
    writeln!(out, "model = viscous, lambda = {lambda:.16e}")?;
    summarize(out, &trace)?;
    writeln!(out, "output = {}", dir.display())?;
    Ok(())
}

fn cmd_strip(a: StripArgs, out: &mut impl Write) -> CliResult {
    if a.cells < 2 {
        return Err(Failure::invalid("need at least 2 cells per unit length"));
    }
    let h = 1.0 / a.cells as f64;
    let cells = |len: f64, name: &str| -> std::result::Result<usize, Failure> {
        let n = len / h;
        if !(n >= 2.0) || (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return Err(Failure::invalid(format!("{name} = {len} is not a multiple of the cell size {h}")));
        }
        Ok(n.round() as usize)
    };
    let (cx, cy) = (cells(a.a, "a")?, cells(a.l, "L")?);
    let mat = Material::new(a.mu, a.g, a.eps.unwrap_or(2.0 * h))?;
    let predicted = critical_time_prediction(a.a, a.l, &mat)?;
    let horizon = a.horizon.unwrap_or(1.6 * predicted);
    let scn = Scenario::strip(cx + 1, cy + 1, a.a, a.l, mat, 1.0, horizon, a.s)?;
    let trace = run_incremental(&scn)?;
    writeln!(out, "predicted t_c = {predicted:.16e}")?;
    match trace.onset() {
        Some(r) => {
            writeln!(out, "measured onset step = {}", r.k)?;
            writeln!(out, "measured t_c = {:.16e}", r.t)?;
            writeln!(out, "relative error = {:.16e}", (r.t - predicted) / predicted)?;
        }
        None => writeln!(out, "measured onset step = none (no separation up to T = {horizon:.16e})")?,
    }
    Ok(())
}

fn read_field(path: &Path) -> std::result::Result<mmfrac::ScalarField, Failure> {
    let f = File::open(path).map_err(|e| Failure::invalid(format!("cannot open {}: {e}", path.display())))?;
    Ok(io::read_field_csv(BufReader::new(f))?)
}

fn cmd_k2(a: K2Args, out: &mut impl Write) -> CliResult {
    expect_len("tip", &a.tip, 2)?;
    let u = read_field(&a.field)?;
    let tip = [a.tip[0], a.tip[1]];
    // The material is only used for μ here.
    let mat = Material::new(a.mu, 1.0, 2.0 * u.grid.h)?;
    let spec = ContourSpec::new(tip, a.radii, a.samples)?;
    let cut = if a.no_cut { None } else { Some(CrackCut::from_ray(u.grid, tip, a.crack_angle)?) };
    let eta = [-a.crack_angle.cos(), -a.crack_angle.sin()];
    let res = k2_contour(&u, eta, &spec, &mat, cut.as_ref())?;
    writeln!(out, "r,value,extrapolated")?;
    for (r, v) in &res.table {
        writeln!(out, "{r:.16e},{v:.16e},{:.16e}", res.extrapolated)?;
    }
    Ok(())
}

fn expect_len(flag: &str, v: &[f64], n: usize) -> CliResult {
    if v.len() == n {
        Ok(())
    } else {
        Err(Failure::invalid(format!("--{flag} takes {n} comma-separated values, got {}", v.len())))
    }
}

fn mat3(v: &[f64]) -> [[f64; 3]; 3] {
    [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]]
}

fn cmd_criteria(a: CriteriaArgs, out: &mut impl Write) -> CliResult {
    let young = a.young.unwrap_or(3.0 * a.mu);
    let cap = a.cap.unwrap_or(100.0 * a.g);
    let threshold = antiplane_la_threshold(a.mu, a.sigma_c)?;
    let sigma_cr = critical_uniaxial_stress(young, a.sigma_c)?;

    if let Some(path) = &a.field {
        let u = read_field(path)?;
        let v = match &a.damage {
            Some(p) => {
                let f = File::open(p).map_err(|e| Failure::invalid(format!("cannot open {}: {e}", p.display())))?;
                io::read_damage_csv(BufReader::new(f))?
            }
            None => DamageField::intact(u.grid),
        };
        let mat = Material { mu: a.mu, young, griffith: a.g, sigma: a.sigma_c, cap, eps: 2.0 * u.grid.h, k_eps: 1e-6 }
            .validated()?;
        let g = surface_density_field(&u, &v, &mat)?;
        writeln!(out, "f_C min = {:.16e}", g.min())?;
        writeln!(out, "f_C max = {:.16e}", g.max())?;
        let at_g = g.values().iter().filter(|x| **x == a.g).count();
        writeln!(out, "cells at G = {at_g} of {}", g.values().len())?;
    } else {
        let state = match (&a.grad, &a.stress, &a.deformation) {
            (Some(g), _, _) => {
                expect_len("grad", g, 2)?;
                let gv = [g[0], g[1]];
                writeln!(out, "la_max over normals = {:.16e}", antiplane_la_max(gv, a.mu))?;
                let n = match a.normal.as_deref() {
                    Some([x, y]) => [*x, *y],
                    Some(_) => return Err(Failure::invalid("anti-plane mode takes a 2-component normal")),
                    // The maximizing normals sit at 45° to the gradient.
                    None => {
                        let norm = gv[0].hypot(gv[1]);
                        if norm > 0.0 {
                            let (c, s) = (gv[0] / norm, gv[1] / norm);
                            let r = std::f64::consts::FRAC_1_SQRT_2;
                            [r * (c - s), r * (c + s)]
                        } else {
                            [1.0, 0.0]
                        }
                    }
                };
                TensorState::antiplane(gv, a.mu, n)?
            }
            (None, Some(s), Some(f)) => {
                expect_len("stress", s, 9)?;
                expect_len("deformation", f, 9)?;
                let n = match a.normal.as_deref() {
                    Some([x, y, z]) => [*x, *y, *z],
                    _ => return Err(Failure::invalid("tensor mode needs a 3-component --normal")),
                };
                TensorState::with_normal_direction(mat3(s), mat3(f), n)?
            }
            _ => return Err(Failure::invalid("give --grad, --stress with --deformation, or --field")),
        };
        writeln!(out, "la_sup = {:.16e}", la_sup(&state))?;
        writeln!(out, "f_inf = {:.16e}", f_infinity(&state, a.sigma_c, a.g))?;
        writeln!(out, "f_C = {:.16e}", f_c(&state, a.sigma_c, a.g, cap)?)?;
    }
    writeln!(out, "sigma_cr = {sigma_cr:.16e}")?;
    writeln!(out, "antiplane gradient threshold = {threshold:.16e}")?;
    Ok(())
}
