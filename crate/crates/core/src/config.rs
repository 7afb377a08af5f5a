//! Scenario configuration files (TOML).
//!
//! ```toml
//! [grid]
//! nx = 65
//! ny = 65
//! lx = 1.0
//! ly = 1.0
//!
//! [boundary]
//! bottom = "u1"
//! top = "u2"
//! left = "f"
//! right = "f"
//!
//! [material]
//! mu = 1.0
//! G = 1.0
//! # optional: E, Sigma, cap_C, eps, k_eps
//!
//! [load]
//! delta = 1.0
//! T = 1.5
//! s = 50
//!
//! [model]
//! kind = "first"   # or "improved", "viscous" (needs lambda)
//!
//! [output]
//! dir = "out"
//! snapshot_stride = 10
//! ```

use std::path::{Path, PathBuf};

use thiserror::Error;
use toml::{Table, Value};

use crate::elastic::{Material, DEFAULT_CAP_FACTOR, DEFAULT_K_EPS};
use crate::evolution::{LoadProgram, Model, Scenario};
use crate::grid::{BoundarySpec, Grid2, Label};
use crate::phase_field::AlternateOptions;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("bad value for `{0}`: {1}")]
    BadValue(String, String),
    #[error("cannot read config: {0}")]
    Io(String),
}

type CResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadConfig {
    pub delta: f64,
    pub horizon: f64,
    pub s: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write field snapshots every this many steps; 0 disables them.
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub boundary: BoundarySpec,
    pub material: Material,
    pub load: LoadConfig,
    pub model: Model,
    pub multistart: bool,
    pub output: OutputConfig,
}

fn section<'a>(doc: &'a Table, name: &str) -> CResult<&'a Table> {
    match doc.get(name) {
        Some(Value::Table(t)) => Ok(t),
        Some(_) => Err(ConfigError::BadValue(name.into(), "expected a table".into())),
        None => Err(ConfigError::MissingKey(name.into())),
    }
}

fn opt_section<'a>(doc: &'a Table, name: &str) -> CResult<Option<&'a Table>> {
    match doc.get(name) {
        None => Ok(None),
        Some(_) => section(doc, name).map(Some),
    }
}

fn float(t: Option<&Table>, sec: &str, key: &str) -> CResult<Option<f64>> {
    let path = format!("{sec}.{key}");
    match t.and_then(|t| t.get(key)) {
        None => Ok(None),
        Some(Value::Float(x)) => Ok(Some(*x)),
        Some(Value::Integer(i)) => Ok(Some(*i as f64)),
        Some(_) => Err(ConfigError::BadValue(path, "expected a number".into())),
    }
}

fn req_float(t: Option<&Table>, sec: &str, key: &str) -> CResult<f64> {
    float(t, sec, key)?.ok_or_else(|| ConfigError::MissingKey(format!("{sec}.{key}")))
}

fn count(t: Option<&Table>, sec: &str, key: &str) -> CResult<Option<usize>> {
    let path = format!("{sec}.{key}");
    match t.and_then(|t| t.get(key)) {
        None => Ok(None),
        Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
        Some(_) => Err(ConfigError::BadValue(path, "expected a non-negative integer".into())),
    }
}

fn string<'a>(t: Option<&'a Table>, sec: &str, key: &str) -> CResult<Option<&'a str>> {
    match t.and_then(|t| t.get(key)) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.as_str())),
        Some(_) => Err(ConfigError::BadValue(format!("{sec}.{key}"), "expected a string".into())),
    }
}

fn positive(path: &str, x: f64) -> CResult<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::BadValue(path.into(), format!("{x} is not a positive number")))
    }
}

impl ScenarioConfig {
    /// Read and validate a configuration file.
    pub fn from_path(path: &Path) -> CResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CResult<Self> {
        let doc: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::BadValue("document".into(), e.to_string()))?;

        let g = Some(section(&doc, "grid")?);
        let nx = count(g, "grid", "nx")?.ok_or_else(|| ConfigError::MissingKey("grid.nx".into()))?;
        let ny = count(g, "grid", "ny")?.ok_or_else(|| ConfigError::MissingKey("grid.ny".into()))?;
        let lx = positive("grid.lx", req_float(g, "grid", "lx")?)?;
        let ly = positive("grid.ly", req_float(g, "grid", "ly")?)?;
        let grid = Grid2::new(nx, ny, lx, ly).map_err(|e| ConfigError::BadValue("grid".into(), e.to_string()))?;

        let b = Some(section(&doc, "boundary")?);
        let label = |k: &str| -> CResult<Label> {
            let s = string(b, "boundary", k)?.ok_or_else(|| ConfigError::MissingKey(format!("boundary.{k}")))?;
            Label::parse(s).ok_or_else(|| ConfigError::BadValue(format!("boundary.{k}"), format!("unknown label `{s}`")))
        };
        let boundary = BoundarySpec::new(label("bottom")?, label("top")?, label("left")?, label("right")?);

        let m = Some(section(&doc, "material")?);
        let mu = positive("material.mu", req_float(m, "material", "mu")?)?;
        let griffith = positive("material.G", req_float(m, "material", "G")?)?;
        let young = positive("material.E", float(m, "material", "E")?.unwrap_or(3.0 * mu))?;
        let sigma = match float(m, "material", "Sigma")? {
            Some(x) => positive("material.Sigma", x)?,
            None => f64::INFINITY,
        };
        let cap = positive("material.cap_C", float(m, "material", "cap_C")?.unwrap_or(DEFAULT_CAP_FACTOR * griffith))?;
        if cap <= griffith {
            return Err(ConfigError::BadValue("material.cap_C".into(), "must exceed G".into()));
        }
        let eps = positive("material.eps", float(m, "material", "eps")?.unwrap_or(2.0 * grid.h))?;
        let k_eps = positive("material.k_eps", float(m, "material", "k_eps")?.unwrap_or(DEFAULT_K_EPS))?;
        if k_eps > 1e-3 {
            return Err(ConfigError::BadValue("material.k_eps".into(), "must not exceed 1e-3".into()));
        }
        let material = Material { mu, young, griffith, sigma, cap, eps, k_eps };

        let l = Some(section(&doc, "load")?);
        let delta = float(l, "load", "delta")?.unwrap_or(1.0);
        if !delta.is_finite() {
            return Err(ConfigError::BadValue("load.delta".into(), "not finite".into()));
        }
        let horizon = positive("load.T", req_float(l, "load", "T")?)?;
        let s = count(l, "load", "s")?.ok_or_else(|| ConfigError::MissingKey("load.s".into()))?;
        if s == 0 {
            return Err(ConfigError::BadValue("load.s".into(), "must be at least 1".into()));
        }

        let md = opt_section(&doc, "model")?;
        let kind = string(md, "model", "kind")?.unwrap_or("first");
        let model = match kind {
            "first" => Model::First,
            "improved" => {
                if sigma.is_infinite() {
                    return Err(ConfigError::MissingKey("material.Sigma".into()));
                }
                Model::Improved
            }
            "viscous" => {
                let lambda = float(md, "model", "lambda")?.ok_or_else(|| ConfigError::MissingKey("model.lambda".into()))?;
                Model::Viscous { lambda: positive("model.lambda", lambda)? }
            }
            other => return Err(ConfigError::BadValue("model.kind".into(), format!("unknown model `{other}`"))),
        };
        let multistart = match md.and_then(|t| t.get("multistart")) {
            None => true,
            Some(Value::Boolean(b)) => *b,
            Some(_) => return Err(ConfigError::BadValue("model.multistart".into(), "expected a boolean".into())),
        };

        let o = opt_section(&doc, "output")?;
        let dir = PathBuf::from(string(o, "output", "dir")?.unwrap_or("out"));
        let snapshot_stride = count(o, "output", "snapshot_stride")?.unwrap_or(0);

        Ok(Self {
            grid: GridConfig { nx, ny, lx, ly },
            boundary,
            material,
            load: LoadConfig { delta, horizon, s },
            model,
            multistart,
            output: OutputConfig { dir, snapshot_stride },
        })
    }

    /// Serialize with every default spelled out, so that parsing the result
    /// gives back an equal configuration.
    pub fn to_toml(&self) -> String {
        let mut doc = Table::new();
        let mut grid = Table::new();
        grid.insert("nx".into(), Value::Integer(self.grid.nx as i64));
        grid.insert("ny".into(), Value::Integer(self.grid.ny as i64));
        grid.insert("lx".into(), Value::Float(self.grid.lx));
        grid.insert("ly".into(), Value::Float(self.grid.ly));
        doc.insert("grid".into(), Value::Table(grid));

        let mut b = Table::new();
        let lab = |l: Option<Label>| Value::String(l.unwrap_or(Label::GammaF).as_str().into());
        b.insert("bottom".into(), lab(self.boundary.bottom));
        b.insert("top".into(), lab(self.boundary.top));
        b.insert("left".into(), lab(self.boundary.left));
        b.insert("right".into(), lab(self.boundary.right));
        doc.insert("boundary".into(), Value::Table(b));

        let m = &self.material;
        let mut mat = Table::new();
        mat.insert("mu".into(), Value::Float(m.mu));
        mat.insert("E".into(), Value::Float(m.young));
        mat.insert("G".into(), Value::Float(m.griffith));
        if m.sigma.is_finite() {
            mat.insert("Sigma".into(), Value::Float(m.sigma));
        }
        mat.insert("cap_C".into(), Value::Float(m.cap));
        mat.insert("eps".into(), Value::Float(m.eps));
        mat.insert("k_eps".into(), Value::Float(m.k_eps));
        doc.insert("material".into(), Value::Table(mat));

        let mut load = Table::new();
        load.insert("delta".into(), Value::Float(self.load.delta));
        load.insert("T".into(), Value::Float(self.load.horizon));
        load.insert("s".into(), Value::Integer(self.load.s as i64));
        doc.insert("load".into(), Value::Table(load));

        let mut model = Table::new();
        model.insert("kind".into(), Value::String(self.model.name().into()));
        if let Model::Viscous { lambda } = self.model {
            model.insert("lambda".into(), Value::Float(lambda));
        }
        model.insert("multistart".into(), Value::Boolean(self.multistart));
        doc.insert("model".into(), Value::Table(model));

        let mut out = Table::new();
        out.insert("dir".into(), Value::String(self.output.dir.to_string_lossy().into_owned()));
        out.insert("snapshot_stride".into(), Value::Integer(self.output.snapshot_stride as i64));
        doc.insert("output".into(), Value::Table(out));
        doc.to_string()
    }

    pub fn to_scenario(&self) -> crate::Result<Scenario> {
        let grid = Grid2::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly)?;
        Ok(Scenario {
            grid,
            boundary: self.boundary,
            load: LoadProgram::opening(self.load.delta),
            material: self.material.validated()?,
            model: self.model,
            horizon: self.load.horizon,
            steps_per_unit: self.load.s,
            alternation: AlternateOptions { max_iters: 500, ..AlternateOptions::default() },
            multistart: self.multistart,
            initial_damage: None,
        })
    }
}
