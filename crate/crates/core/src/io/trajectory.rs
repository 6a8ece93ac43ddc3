//! A run on disk: `config.ini`, `state_NNNNN.tsv` snapshots named by step
//! count, `steps.tsv` with one row per step, and a summary `report.txt`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::diagnostics::StepBudget;
use crate::error::{Error, Result};
use crate::io::config::{load_config_unchecked, Config};
use crate::io::fieldfile::{read_fields, write_fields};
use crate::io::report::Report;
use crate::solver::{Problem, StepReport, Trajectory};
use crate::transport::DominationReport;

pub const CONFIG_FILE: &str = "config.ini";
pub const STEPS_FILE: &str = "steps.tsv";
pub const REPORT_FILE: &str = "report.txt";

const STEP_COLUMNS: &[&str] = &[
    "step",
    "time",
    "dt",
    "substeps",
    "picard_iters",
    "picard_residual",
    "linear_iters",
    "mass_change",
    "mass_flux",
    "magnetic_change",
    "magnetic_flux",
    "div_norm",
    "energy_change",
    "dissipation",
    "eps_dissipation",
    "inflow_gap",
    "outflow",
    "viscous_forcing",
    "inflow_supply",
    "convective_forcing",
    "pressure_forcing",
    "eps_forcing",
    "body_forcing",
    "budget_scale",
    "dom_lower",
    "dom_upper",
    "dom_cell",
    "dom_outflow_lower",
    "dom_outflow_upper",
    "dom_face",
];

pub fn state_file_name(step: usize) -> String {
    format!("state_{step:05}.tsv")
}

fn opt_index(v: Option<usize>) -> String {
    v.map_or_else(|| "-".to_string(), |i| i.to_string())
}

fn step_row(step: usize, r: &StepReport) -> String {
    let b = &r.budget;
    let d = &r.domination;
    let nums = [
        r.time,
        r.dt,
        r.substeps as f64,
        r.picard_iters as f64,
        r.picard_residual,
        r.linear_iters as f64,
        r.mass_change,
        r.mass_flux,
        r.magnetic_change,
        r.magnetic_flux,
        r.div_norm,
        b.energy_change,
        b.dissipation,
        b.eps_dissipation,
        b.inflow_gap,
        b.outflow,
        b.viscous_forcing,
        b.inflow_supply,
        b.convective_forcing,
        b.pressure_forcing,
        b.eps_forcing,
        b.body_forcing,
        b.scale,
        d.lower_violation,
        d.upper_violation,
    ];
    let mut s = step.to_string();
    for (i, v) in nums.iter().enumerate() {
        // counters are written as integers
        if matches!(i, 2 | 3 | 5) {
            write!(s, "\t{}", *v as usize).unwrap();
        } else {
            write!(s, "\t{v:.16e}").unwrap();
        }
    }
    write!(
        s,
        "\t{}\t{:.16e}\t{:.16e}\t{}",
        opt_index(d.worst_cell),
        d.outflow_lower_violation,
        d.outflow_upper_violation,
        opt_index(d.worst_face)
    )
    .unwrap();
    s
}

pub fn steps_string(traj: &Trajectory) -> String {
    let mut s = STEP_COLUMNS.join("\t");
    s.push('\n');
    for (n, r) in traj.reports.iter().enumerate() {
        s.push_str(&step_row(n + 1, r));
        s.push('\n');
    }
    s
}

fn parse_step_row(line: &str, lineno: usize) -> Result<StepReport> {
    let t: Vec<&str> = line.split('\t').collect();
    if t.len() != STEP_COLUMNS.len() {
        return Err(Error::DimensionMismatch {
            what: "steps.tsv columns",
            expected: STEP_COLUMNS.len(),
            found: t.len(),
        });
    }
    let bad = |c: usize| Error::Parse {
        line: lineno,
        column: c + 1,
        message: format!("bad value for {}", STEP_COLUMNS[c]),
    };
    let f = |c: usize| t[c].parse::<f64>().map_err(|_| bad(c));
    let u = |c: usize| t[c].parse::<usize>().map_err(|_| bad(c));
    let idx = |c: usize| match t[c] {
        "-" => Ok(None),
        v => v.parse::<usize>().map(Some).map_err(|_| bad(c)),
    };
    Ok(StepReport {
        time: f(1)?,
        dt: f(2)?,
        substeps: u(3)?,
        picard_iters: u(4)?,
        picard_residual: f(5)?,
        linear_iters: u(6)?,
        mass_change: f(7)?,
        mass_flux: f(8)?,
        magnetic_change: f(9)?,
        magnetic_flux: f(10)?,
        div_norm: f(11)?,
        budget: StepBudget {
            energy_change: f(12)?,
            dissipation: f(13)?,
            eps_dissipation: f(14)?,
            inflow_gap: f(15)?,
            outflow: f(16)?,
            viscous_forcing: f(17)?,
            inflow_supply: f(18)?,
            convective_forcing: f(19)?,
            pressure_forcing: f(20)?,
            eps_forcing: f(21)?,
            body_forcing: f(22)?,
            scale: f(23)?,
        },
        domination: DominationReport {
            lower_violation: f(24)?,
            upper_violation: f(25)?,
            worst_cell: idx(26)?,
            outflow_lower_violation: f(27)?,
            outflow_upper_violation: f(28)?,
            worst_face: idx(29)?,
        },
        max_principle: None,
    })
}

/// Parses `steps.tsv`. Max-principle bounds are not stored; they are
/// recomputed from the snapshots.
pub fn parse_steps(text: &str) -> Result<Vec<StepReport>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.split('\t').eq(STEP_COLUMNS.iter().copied()) => {}
        _ => return Err(Error::Format("steps.tsv: unexpected header".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let r = parse_step_row(line, i + 1)?;
        let step: usize = line.split('\t').next().and_then(|s| s.parse().ok()).unwrap_or(0);
        if step != out.len() + 1 {
            return Err(Error::Parse {
                line: i + 1,
                column: 1,
                message: format!("expected step {}, found {step}", out.len() + 1),
            });
        }
        out.push(r);
    }
    Ok(out)
}

/// Writes a run. Snapshots are kept every `cfg.out_every` steps, plus the
/// initial and final states.
pub fn write_trajectory_dir(dir: &Path, cfg: &Config, traj: &Trajectory, report: &Report) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(CONFIG_FILE), cfg.to_text())?;
    let grid = cfg.problem()?.grid;
    let every = cfg.out_every.max(1);
    let last = traj.states.len() - 1;
    for (i, (s, &step)) in traj.states.iter().zip(&traj.steps).enumerate() {
        if i == 0 || i == last || step % every == 0 {
            write_fields(&grid, s, &dir.join(state_file_name(step)))?;
        }
    }
    std::fs::write(dir.join(STEPS_FILE), steps_string(traj))?;
    report.write(&dir.join(REPORT_FILE))
}

fn snapshot_steps(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(step) = name
            .strip_prefix("state_")
            .and_then(|r| r.strip_suffix(".tsv"))
            .and_then(|n| n.parse::<usize>().ok())
        {
            out.push((step, path));
        }
    }
    out.sort();
    Ok(out)
}

/// Reads a run written by [`write_trajectory_dir`].
pub fn read_trajectory_dir(dir: &Path) -> Result<(Config, Problem, Trajectory)> {
    let cfg = load_config_unchecked(&dir.join(CONFIG_FILE))?;
    let problem = cfg.problem()?;
    let reports = parse_steps(&std::fs::read_to_string(dir.join(STEPS_FILE))?)?;
    let snaps = snapshot_steps(dir)?;
    if snaps.first().map(|s| s.0) != Some(0) {
        return Err(Error::Format(format!("{}: no initial snapshot", dir.display())));
    }
    let mut states = Vec::with_capacity(snaps.len());
    let mut steps = Vec::with_capacity(snaps.len());
    for (step, path) in snaps {
        if step > reports.len() {
            return Err(Error::DimensionMismatch {
                what: "snapshot step",
                expected: reports.len(),
                found: step,
            });
        }
        states.push(read_fields(&path, Some((cfg.nx, cfg.ny)))?);
        steps.push(step);
    }
    let traj = Trajectory {
        mass_flux_total: reports.iter().map(|r| r.mass_flux).sum(),
        magnetic_flux_total: reports.iter().map(|r| r.magnetic_flux).sum(),
        states,
        steps,
        reports,
    };
    Ok((cfg, problem, traj))
}
