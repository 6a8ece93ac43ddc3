//! Run configuration: an INI-style file with fixed sections.
//!
//! ```text
//! # comment
//! [grid]
//! nx = 32
//! ny = 32
//! [boundary]
//! u_b = constant 0.5 0
//! ```
//!
//! Scalars and vectors in `[boundary]` and `[initial]` use the expression
//! catalogue of [`crate::expr`]; initial data may instead be `file <path>`,
//! a field file relative to the config's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::diagnostics::energy::energy;
use crate::error::{Error, Result};
use crate::expr::{ScalarExpr, VectorExpr};
use crate::fields::{BoundaryData, ScalarField, VectorField};
use crate::grid::Grid;
use crate::io::fieldfile::read_fields;
use crate::params::{Domination, PhysParams, RegParams, Tolerances};
use crate::solver::{Problem, Schedule, State};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData<E> {
    Expr(E),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub phys: PhysParams,
    pub domination: Domination,
    pub reg: RegParams,
    pub eps_init: f64,
    pub t_end: f64,
    pub dt: f64,
    pub out_every: usize,
    pub u_b: VectorExpr,
    pub rho_b: ScalarExpr,
    pub b_b: ScalarExpr,
    pub rho0: InitialData<ScalarExpr>,
    pub b0: InitialData<ScalarExpr>,
    pub u0: InitialData<VectorExpr>,
    pub tol: Tolerances,
    /// Bound on the ledger defect accumulated over the run.
    pub tol_mass_total: f64,
    /// Directory that relative file paths are resolved against.
    pub base_dir: PathBuf,
}

const KEYS: &[(&str, &[&str])] = &[
    ("grid", &["nx", "ny", "lx", "ly"]),
    ("physics", &["gamma", "mu", "lambda", "c_lower", "c_upper"]),
    ("regularization", &["eps", "delta", "beta", "eps_init"]),
    ("time", &["t_end", "dt", "out_every"]),
    ("boundary", &["u_b", "rho_b", "b_b"]),
    ("initial", &["rho0", "b0", "u0"]),
    (
        "tolerance",
        &[
            "picard_tol",
            "picard_max",
            "tol_lin",
            "max_lin",
            "tol_energy",
            "tol_dom",
            "tol_mp",
            "tol_mass",
            "tol_mass_total",
            "tol_neg",
        ],
    ),
];

/// A value with the position of its first character.
#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    column: usize,
}

struct Raw {
    entries: BTreeMap<(String, String), Entry>,
    last_line: usize,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Raw> {
    let mut entries = BTreeMap::new();
    let mut section: Option<String> = None;
    let mut last_line = 0;
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let content = raw_line.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let lead = content.len() - content.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(parse_err(line, lead + 1, "unterminated section header"));
            };
            let name = name.trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(parse_err(line, lead + 2, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(parse_err(line, lead + 1, "expected 'key = value'"));
        };
        let Some(sec) = &section else {
            return Err(parse_err(line, lead + 1, "key outside of any section"));
        };
        let key = content[..eq].trim();
        let allowed = KEYS.iter().find(|(s, _)| s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(parse_err(line, lead + 1, format!("unknown key '{key}' in [{sec}]")));
        }
        let after = &content[eq + 1..];
        let vlead = after.len() - after.trim_start().len();
        let value = after.trim();
        let column = eq + 1 + vlead + 1;
        if value.is_empty() {
            return Err(parse_err(line, column, format!("missing value for '{key}'")));
        }
        let k = (sec.clone(), key.to_string());
        if entries.contains_key(&k) {
            return Err(parse_err(line, lead + 1, format!("duplicate key '{key}' in [{sec}]")));
        }
        entries.insert(
            k,
            Entry {
                value: value.to_string(),
                line,
                column,
            },
        );
    }
    Ok(Raw { entries, last_line })
}

impl Raw {
    fn get(&self, sec: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(sec.to_string(), key.to_string()))
    }

    fn required(&self, sec: &str, key: &str) -> Result<&Entry> {
        self.get(sec, key)
            .ok_or_else(|| parse_err(self.last_line + 1, 1, format!("missing required key '{key}' in [{sec}]")))
    }

    fn number(&self, sec: &str, key: &str, default: Option<f64>) -> Result<f64> {
        let e = match (self.get(sec, key), default) {
            (Some(e), _) => e,
            (None, Some(d)) => return Ok(d),
            (None, None) => self.required(sec, key)?,
        };
        match e.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(parse_err(e.line, e.column, format!("'{key}' must be a finite number, got '{}'", e.value))),
        }
    }

    fn count(&self, sec: &str, key: &str, default: Option<usize>) -> Result<usize> {
        let e = match (self.get(sec, key), default) {
            (Some(e), _) => e,
            (None, Some(d)) => return Ok(d),
            (None, None) => self.required(sec, key)?,
        };
        e.value
            .parse::<usize>()
            .map_err(|_| parse_err(e.line, e.column, format!("'{key}' must be a nonnegative integer, got '{}'", e.value)))
    }

    fn scalar(&self, sec: &str, key: &str) -> Result<ScalarExpr> {
        let e = self.required(sec, key)?;
        ScalarExpr::parse(&e.value).map_err(|x| parse_err(e.line, e.column + x.offset, x.message))
    }

    fn vector(&self, sec: &str, key: &str) -> Result<VectorExpr> {
        let e = self.required(sec, key)?;
        VectorExpr::parse(&e.value).map_err(|x| parse_err(e.line, e.column + x.offset, x.message))
    }

    fn initial<E>(&self, key: &str, parse: impl Fn(&Raw, &str, &str) -> Result<E>) -> Result<InitialData<E>> {
        let e = self.required("initial", key)?;
        match e.value.strip_prefix("file") {
            Some(rest) if rest.starts_with(char::is_whitespace) => Ok(InitialData::File(PathBuf::from(rest.trim()))),
            _ => Ok(InitialData::Expr(parse(self, "initial", key)?)),
        }
    }
}

/// Parses configuration text. Paths in the file resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<Config> {
    let raw = tokenize(text)?;
    let d = RegParams::default();
    let t = Tolerances::default();
    Ok(Config {
        nx: raw.count("grid", "nx", None)?,
        ny: raw.count("grid", "ny", None)?,
        lx: raw.number("grid", "lx", Some(1.0))?,
        ly: raw.number("grid", "ly", Some(1.0))?,
        phys: PhysParams {
            gamma: raw.number("physics", "gamma", None)?,
            mu: raw.number("physics", "mu", None)?,
            lambda: raw.number("physics", "lambda", Some(0.0))?,
        },
        domination: Domination {
            lower: raw.number("physics", "c_lower", None)?,
            upper: raw.number("physics", "c_upper", None)?,
        },
        reg: RegParams {
            eps: raw.number("regularization", "eps", Some(d.eps))?,
            delta: raw.number("regularization", "delta", Some(d.delta))?,
            beta: raw.number("regularization", "beta", Some(d.beta))?,
            picard_tol: raw.number("tolerance", "picard_tol", Some(d.picard_tol))?,
            picard_max: raw.count("tolerance", "picard_max", Some(d.picard_max))?,
            tol_lin: raw.number("tolerance", "tol_lin", Some(d.tol_lin))?,
            max_lin: raw.count("tolerance", "max_lin", Some(d.max_lin))?,
        },
        eps_init: raw.number("regularization", "eps_init", Some(0.0))?,
        t_end: raw.number("time", "t_end", None)?,
        dt: raw.number("time", "dt", None)?,
        out_every: raw.count("time", "out_every", Some(1))?,
        u_b: raw.vector("boundary", "u_b")?,
        rho_b: raw.scalar("boundary", "rho_b")?,
        b_b: raw.scalar("boundary", "b_b")?,
        rho0: raw.initial("rho0", |r, s, k| r.scalar(s, k))?,
        b0: raw.initial("b0", |r, s, k| r.scalar(s, k))?,
        u0: raw.initial("u0", |r, s, k| r.vector(s, k))?,
        tol: Tolerances {
            tol_energy: raw.number("tolerance", "tol_energy", Some(t.tol_energy))?,
            tol_dom: raw.number("tolerance", "tol_dom", Some(t.tol_dom))?,
            tol_mp: raw.number("tolerance", "tol_mp", Some(t.tol_mp))?,
            tol_mass: raw.number("tolerance", "tol_mass", Some(t.tol_mass))?,
            tol_neg: raw.number("tolerance", "tol_neg", Some(t.tol_neg))?,
        },
        tol_mass_total: raw.number("tolerance", "tol_mass_total", Some(1e-6))?,
        base_dir: base_dir.to_path_buf(),
    })
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: &Path) -> Result<Config> {
    let cfg = load_config_unchecked(path)?;
    cfg.build()?;
    Ok(cfg)
}

/// Parses a config file without building or checking its initial data.
pub fn load_config_unchecked(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, &base)
}

impl Config {
    pub fn schedule(&self) -> Schedule {
        Schedule {
            t_end: self.t_end,
            dt: self.dt,
            eps_init: self.eps_init,
        }
    }

    /// Serializes back to the config grammar.
    pub fn to_text(&self) -> String {
        let init_s = |d: &InitialData<ScalarExpr>| match d {
            InitialData::Expr(e) => e.to_string(),
            InitialData::File(p) => format!("file {}", self.base_dir.join(p).display()),
        };
        let init_v = match &self.u0 {
            InitialData::Expr(e) => e.to_string(),
            InitialData::File(p) => format!("file {}", self.base_dir.join(p).display()),
        };
        format!(
            "[grid]\nnx = {}\nny = {}\nlx = {:e}\nly = {:e}\n\n\
             [physics]\ngamma = {:e}\nmu = {:e}\nlambda = {:e}\nc_lower = {:e}\nc_upper = {:e}\n\n\
             [regularization]\neps = {:e}\ndelta = {:e}\nbeta = {:e}\neps_init = {:e}\n\n\
             [time]\nt_end = {:e}\ndt = {:e}\nout_every = {}\n\n\
             [boundary]\nu_b = {}\nrho_b = {}\nb_b = {}\n\n\
             [initial]\nrho0 = {}\nb0 = {}\nu0 = {}\n\n\
             [tolerance]\npicard_tol = {:e}\npicard_max = {}\ntol_lin = {:e}\nmax_lin = {}\n\
             tol_energy = {:e}\ntol_dom = {:e}\ntol_mp = {:e}\ntol_mass = {:e}\ntol_mass_total = {:e}\ntol_neg = {:e}\n",
            self.nx,
            self.ny,
            self.lx,
            self.ly,
            self.phys.gamma,
            self.phys.mu,
            self.phys.lambda,
            self.domination.lower,
            self.domination.upper,
            self.reg.eps,
            self.reg.delta,
            self.reg.beta,
            self.eps_init,
            self.t_end,
            self.dt,
            self.out_every,
            self.u_b,
            self.rho_b,
            self.b_b,
            init_s(&self.rho0),
            init_s(&self.b0),
            init_v,
            self.reg.picard_tol,
            self.reg.picard_max,
            self.reg.tol_lin,
            self.reg.max_lin,
            self.tol.tol_energy,
            self.tol.tol_dom,
            self.tol.tol_mp,
            self.tol.tol_mass,
            self.tol_mass_total,
            self.tol.tol_neg,
        )
    }

    /// Grid, boundary data and parameters, without touching initial data.
    pub fn problem(&self) -> Result<Problem> {
        let g0 = Grid::build(self.nx, self.ny, self.lx, self.ly)?;
        let (grid, boundary) = BoundaryData::setup(
            &g0,
            |x, y| self.u_b.value(x, y),
            |x, y| self.rho_b.value(x, y),
            |x, y| self.b_b.value(x, y),
        );
        Ok(Problem {
            grid,
            boundary,
            phys: self.phys,
            reg: self.reg,
            domination: self.domination,
            tol: self.tol,
        })
    }

    /// Builds the problem and initial state, checking every hypothesis on
    /// the data. All violations are reported together.
    pub fn build(&self) -> Result<(Problem, State)> {
        let problem = self.problem()?;
        let grid = &problem.grid;
        let file_state = |p: &Path| -> Result<State> { read_fields(&self.base_dir.join(p), Some((self.nx, self.ny))) };
        let scalar = |d: &InitialData<ScalarExpr>, pick: fn(State) -> ScalarField| -> Result<ScalarField> {
            match d {
                InitialData::Expr(e) => Ok(ScalarField::from_fn(grid, |x, y| e.value(x, y))),
                InitialData::File(p) => Ok(pick(file_state(p)?)),
            }
        };
        let rho = scalar(&self.rho0, |s| s.rho)?;
        let b = scalar(&self.b0, |s| s.b)?;
        let u = match &self.u0 {
            InitialData::Expr(e) => VectorField::from_fn(grid, |x, y| e.value(x, y)),
            InitialData::File(p) => file_state(p)?.u,
        };
        let state = State { time: 0.0, rho, b, u };
        let v = hypothesis_violations(&problem, &state, self);
        if v.is_empty() {
            Ok((problem, state))
        } else {
            Err(Error::Hypotheses(v))
        }
    }
}

fn worst_cell(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    let mut worst: Option<(usize, f64)> = None;
    for (k, v) in values.enumerate() {
        if v > 0.0 && worst.map_or(true, |(_, w)| v > w) {
            worst = Some((k, v));
        }
    }
    worst
}

fn cell_label(grid: &Grid, k: usize) -> String {
    format!("cell {k} (i = {}, j = {})", k % grid.nx, k / grid.nx)
}

/// Every hypothesis on parameters and data, one named check each.
pub fn hypothesis_violations(p: &Problem, s: &State, cfg: &Config) -> Vec<String> {
    let mut out = Vec::new();
    out.extend(p.phys.validate());
    out.extend(p.reg.validate());
    out.extend(p.tol.validate());
    out.extend(p.domination.validate());
    if !(cfg.t_end > 0.0) || !(cfg.dt > 0.0) {
        out.push(format!("time step and horizon must be positive, got dt = {}, t_end = {}", cfg.dt, cfg.t_end));
    }
    if cfg.out_every == 0 {
        out.push("out_every must be at least 1".into());
    }
    if !(cfg.eps_init >= 0.0) {
        out.push(format!("initial mollification must be nonnegative, got {}", cfg.eps_init));
    }
    if !(cfg.tol_mass_total > 0.0) {
        out.push(format!("tol_mass_total must be positive, got {}", cfg.tol_mass_total));
    }
    let g = &p.grid;
    let (lo, hi) = (p.domination.lower, p.domination.upper);
    out.extend(p.boundary.inflow_violations(lo, hi));
    if let Some((k, v)) = worst_cell(s.rho.values.iter().map(|r| -r)) {
        out.push(format!("nonnegative initial density: {} has {:e}", cell_label(g, k), -v));
    }
    if let Some((k, v)) = worst_cell(s.b.values.iter().map(|r| -r)) {
        out.push(format!("nonnegative initial magnetic field: {} has {:e}", cell_label(g, k), -v));
    }
    if let Some((k, v)) = worst_cell(s.rho.values.iter().zip(&s.b.values).map(|(r, b)| lo * r - b)) {
        out.push(format!("lower domination: worst {}, c_lower rho0 - b0 = {v:e}", cell_label(g, k)));
    }
    if let Some((k, v)) = worst_cell(s.rho.values.iter().zip(&s.b.values).map(|(r, b)| b - hi * r)) {
        out.push(format!("upper domination: worst {}, b0 - c_upper rho0 = {v:e}", cell_label(g, k)));
    }
    let finite = s.is_finite() && {
        let e = energy(g, &p.boundary, &s.rho, &s.b, &s.u, &p.phys, &p.reg);
        e.total().is_finite()
    };
    if !finite {
        out.push("finite initial energy: initial data produce a non-finite energy".into());
    }
    out
}
