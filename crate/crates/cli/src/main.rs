use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mhd_core::diagnostics::relative::restrict_state;
use mhd_core::diagnostics::{energy_budget, gronwall_fit, relative_energy, verify, Verdict};
use mhd_core::io::trajectory::state_file_name;
use mhd_core::io::vtk::write_vtk;
use mhd_core::io::{load_config, read_trajectory_dir, write_trajectory_dir, Config, Report};
use mhd_core::solver::{continuation, run_simulation, Problem, State, Trajectory};

const PASS: u8 = 0;
const VERDICT_FAILURE: u8 = 1;
const USAGE: u8 = 2;
const SOLVER_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "mhd", version, about = "Regularized compressible MHD solver and run checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config and write the trajectory directory.
    Run {
        config: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        /// Also write a VTK file next to every snapshot.
        #[arg(long)]
        vtk: bool,
    },
    /// Re-check every invariant on a stored trajectory.
    Verify { dir: PathBuf },
    /// Relative energy between two runs, with a growth fit.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Added to the series before taking logs in the fit.
        #[arg(long, default_value = "1e-300")]
        floor: f64,
        /// Absolute slack allowed on top of the initial value.
        #[arg(long, default_value = "1e-12")]
        slack: f64,
    },
    /// Run a family of (eps, delta) pairs and report how consecutive runs approach each other.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0])]
        delta: Vec<f64>,
        /// Write each run below this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with an exit code and a message for stderr.
struct Fail(u8, String);

type CmdResult = Result<u8, Fail>;

fn usage(e: impl std::fmt::Display) -> Fail {
    Fail(USAGE, e.to_string())
}

fn print_verdicts(verdicts: &[Verdict]) -> u8 {
    for v in verdicts {
        println!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.pass).map(|v| v.name.as_str()).collect();
    if failed.is_empty() {
        PASS
    } else {
        eprintln!("{} check(s) failed: {}", failed.len(), failed.join(", "));
        VERDICT_FAILURE
    }
}

fn run_report(p: &Problem, traj: &Trajectory, verdicts: &[Verdict]) -> Report {
    let e = energy_budget(p, traj);
    let mut r = Report::new();
    r.int("steps", traj.reports.len())
        .num("final_time", traj.last().time)
        .num("energy", e.total())
        .num("dissipation", e.dissipation)
        .num("eps_dissipation", e.eps_dissipation)
        .num("boundary_out", e.boundary_out)
        .num("boundary_in", e.boundary_in)
        .num("forcing", e.forcing)
        .num("energy_residual", e.inequality_residual)
        .num("energy_scale", e.scale)
        .num("mass_flux_total", traj.mass_flux_total)
        .num("magnetic_flux_total", traj.magnetic_flux_total);
    for v in verdicts {
        let key = v.name.replace(' ', "_");
        r.text(&key, if v.pass { "pass" } else { "fail" });
        r.text(&format!("{key}_detail"), &v.detail);
    }
    r
}

fn write_run(dir: &Path, cfg: &Config, p: &Problem, traj: &Trajectory, vtk: bool) -> Result<Vec<Verdict>, Fail> {
    let verdicts = verify(p, traj, cfg.tol_mass_total);
    write_trajectory_dir(dir, cfg, traj, &run_report(p, traj, &verdicts)).map_err(usage)?;
    if vtk {
        for (s, step) in traj.states.iter().zip(&traj.steps) {
            let name = state_file_name(*step).replace(".tsv", ".vtk");
            if dir.join(state_file_name(*step)).exists() {
                write_vtk(&p.grid, s, &dir.join(name)).map_err(usage)?;
            }
        }
    }
    Ok(verdicts)
}

fn cmd_run(config: &Path, out: &Path, vtk: bool) -> CmdResult {
    let cfg = load_config(config).map_err(usage)?;
    let (p, s0) = cfg.build().map_err(usage)?;
    let traj = run_simulation(&p, &s0, &cfg.schedule()).map_err(|e| Fail(SOLVER_FAILURE, e.to_string()))?;
    let verdicts = write_run(out, &cfg, &p, &traj, vtk)?;
    Ok(print_verdicts(&verdicts))
}

fn cmd_verify(dir: &Path) -> CmdResult {
    let (cfg, p, traj) = read_trajectory_dir(dir).map_err(usage)?;
    Ok(print_verdicts(&verify(&p, &traj, cfg.tol_mass_total)))
}

/// Brings `fine` onto the grid of `coarse` when the sizes differ by an integer factor.
fn match_grid(coarse: (usize, usize), fine: (usize, usize)) -> Result<usize, Fail> {
    let ok = fine.0 % coarse.0 == 0 && fine.1 % coarse.1 == 0 && fine.0 / coarse.0 == fine.1 / coarse.1;
    if ok {
        Ok(fine.0 / coarse.0)
    } else {
        Err(usage(format!(
            "grids {}x{} and {}x{} are not related by an integer refinement factor",
            coarse.0, coarse.1, fine.0, fine.1
        )))
    }
}

fn cmd_compare(a: &Path, b: &Path, floor: f64, slack: f64) -> CmdResult {
    let (ca, pa, ta) = read_trajectory_dir(a).map_err(usage)?;
    let (cb, pb, tb) = read_trajectory_dir(b).map_err(usage)?;
    let swap = cb.nx < ca.nx;
    let (coarse_cfg, fine_cfg) = if swap { (&cb, &ca) } else { (&ca, &cb) };
    let factor = match_grid((coarse_cfg.nx, coarse_cfg.ny), (fine_cfg.nx, fine_cfg.ny))?;
    let grid = if swap { pb.grid } else { pa.grid };
    let (coarse, fine) = if swap { (&tb, &ta) } else { (&ta, &tb) };
    let onto = |s: &State| if factor == 1 { s.clone() } else { restrict_state(s, factor) };

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut report = Report::new();
    report.int("refinement_factor", factor);
    for s in &coarse.states {
        let tol = 1e-9 * s.time.abs().max(1.0);
        let Some(f) = fine.states.iter().find(|f| (f.time - s.time).abs() <= tol) else {
            continue;
        };
        let r = relative_energy(&grid, &onto(f), s, coarse_cfg.phys.gamma);
        times.push(s.time);
        values.push(r.value);
        let n = times.len() - 1;
        report
            .num(&format!("time_{n}"), s.time)
            .num(&format!("relative_energy_{n}"), r.value)
            .num(&format!("kinetic_gap_{n}"), r.kinetic_gap)
            .num(&format!("bregman_gap_{n}"), r.bregman_gap)
            .num(&format!("magnetic_gap_{n}"), r.magnetic_gap);
    }
    if times.is_empty() {
        return Err(usage("the two runs share no snapshot times"));
    }
    report.int("samples", times.len());
    report.num("max_relative_energy", values.iter().cloned().fold(0.0, f64::max));
    let code = if times.len() >= 3 {
        let fit = gronwall_fit(&times, &values, floor, slack).map_err(usage)?;
        report
            .num("fitted_gronwall_c", fit.c)
            .num("worst_ratio", fit.worst_ratio)
            .text("gronwall", if fit.pass { "pass" } else { "fail" });
        if fit.pass {
            PASS
        } else {
            VERDICT_FAILURE
        }
    } else {
        report.text("gronwall", "skipped: fewer than 3 shared snapshots");
        PASS
    };
    print!("{}", report.render());
    Ok(code)
}

fn cmd_sweep(config: &Path, eps: &[f64], delta: &[f64], out: Option<&Path>) -> CmdResult {
    let cfg = load_config(config).map_err(usage)?;
    let (p, s0) = cfg.build().map_err(usage)?;
    let family = continuation(&p, &s0, &cfg.schedule(), eps, delta);
    let mut report = Report::new();
    let mut code = PASS;
    for (n, run) in family.runs.iter().enumerate() {
        report.num(&format!("eps_{n}"), run.eps).num(&format!("delta_{n}"), run.delta);
        match &run.result {
            Ok(traj) => {
                report.text(&format!("status_{n}"), "ok");
                if let Some(root) = out {
                    let mut c = cfg.clone();
                    c.reg.eps = run.eps;
                    c.reg.delta = run.delta;
                    let mut q = p.clone();
                    q.reg = c.reg;
                    let verdicts = write_run(&root.join(format!("run_{n:02}")), &c, &q, traj, false)?;
                    if verdicts.iter().any(|v| !v.pass) {
                        code = code.max(VERDICT_FAILURE);
                    }
                }
            }
            Err(e) => {
                report.text(&format!("status_{n}"), &format!("failed: {e}"));
                code = SOLVER_FAILURE;
            }
        }
    }
    for (n, d) in family.distances.iter().enumerate() {
        report.num(&format!("distance_{n}"), *d);
    }
    for (n, z) in family.zeta_gaps.iter().enumerate() {
        report.num(&format!("zeta_gap_{n}"), *z);
    }
    print!("{}", report.render());
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, out, vtk } => cmd_run(config, out, *vtk),
        Command::Verify { dir } => cmd_verify(dir),
        Command::Compare { a, b, floor, slack } => cmd_compare(a, b, *floor, *slack),
        Command::Sweep { config, eps, delta, out } => cmd_sweep(config, eps, delta, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
