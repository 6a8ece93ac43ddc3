//! Energies, weak residuals, ratio fields and pass/fail verdicts.

pub mod energy;
pub mod relative;
pub mod weak;
pub mod zeta;

pub use energy::{convexity_gap, energy, quadratic_gap, EnergyReport, StepBudget};
pub use relative::{gronwall_fit, relative_energy, GronwallFit, RelativeEnergyReport};
pub use weak::{weak_residual_continuity, weak_residual_magnetic, weak_residual_momentum};
pub use zeta::{zeta, zeta_gap, ZetaField};

use crate::fields::integrate;
use crate::solver::{Problem, Trajectory};
use crate::transport::{bounds_report, domination_check, max_principle_constants};

/// Sums the per-step balances stored in `traj`. The energy scale uses the
/// stored snapshots only.
pub fn energy_budget(p: &Problem, traj: &Trajectory) -> EnergyReport {
    let e = |n: usize| {
        let s = &traj.states[n];
        energy(&p.grid, &p.boundary, &s.rho, &s.b, &s.u, &p.phys, &p.reg)
    };
    let mut out = e(traj.states.len() - 1);
    let peak = (0..traj.states.len()).map(|n| e(n).total()).fold(0.0_f64, f64::max);
    let mut cumulative = 0.0;
    let mut magnitude = 0.0;
    for (n, r) in traj.reports.iter().enumerate() {
        let b = &r.budget;
        out.dissipation += b.dissipation;
        out.eps_dissipation += b.eps_dissipation;
        out.boundary_out += b.outflow;
        out.boundary_in += b.inflow_gap - b.inflow_supply;
        out.forcing += b.forcing();
        cumulative += b.residual();
        out.worst_prefix_residual = if n == 0 { cumulative } else { out.worst_prefix_residual.max(cumulative) };
        magnitude += b.magnitude();
    }
    out.inequality_residual = cumulative;
    out.scale = 1.0 + peak + magnitude;
    out
}

/// A named check with its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, pass: bool, detail: String) -> Verdict {
        Verdict {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

/// Mass scale used by the ledger checks: `1 + max int c + sum |fluxes|`.
fn ledger_scale(traj: &Trajectory, p: &Problem, magnetic: bool) -> f64 {
    let peak = traj
        .states
        .iter()
        .map(|s| integrate(&p.grid, if magnetic { &s.b } else { &s.rho }))
        .fold(0.0_f64, f64::max);
    let flux: f64 = traj
        .reports
        .iter()
        .map(|r| if magnetic { r.magnetic_flux.abs() } else { r.mass_flux.abs() })
        .sum();
    1.0 + peak + flux
}

fn domination_verdict(p: &Problem, traj: &Trajectory) -> Verdict {
    let mut worst = 0.0_f64;
    let mut at = None;
    for (i, s) in traj.states.iter().enumerate() {
        let r = domination_check(&p.grid, &p.boundary, &s.rho, &s.b, p.domination.lower, p.domination.upper);
        let scale = s.rho.max_abs().max(s.b.max_abs()).max(1.0);
        let v = r.worst() / scale;
        if v > worst {
            worst = v;
            at = Some((traj.steps[i], r));
        }
    }
    let detail = match at {
        Some((step, r)) if worst > p.tol.tol_dom => {
            let cell_worst = r.lower_violation.max(r.upper_violation);
            let face_worst = r.outflow_lower_violation.max(r.outflow_upper_violation);
            let place = match (r.worst_cell, r.worst_face) {
                (Some(c), _) if cell_worst >= face_worst => {
                    format!("cell {c} (i = {}, j = {})", c % p.grid.nx, c / p.grid.nx)
                }
                (_, Some(f)) => format!("outflow face {f}"),
                (Some(c), None) => format!("cell {c}"),
                (None, None) => "unknown location".into(),
            };
            format!("relative violation {worst:.3e} at step {step}, {place}")
        }
        _ => format!("worst relative violation {worst:.3e}"),
    };
    Verdict::new("domination", worst <= p.tol.tol_dom, detail)
}

fn max_principle_verdict(p: &Problem, traj: &Trajectory) -> Verdict {
    let s0 = &traj.states[0];
    let bd = &p.boundary;
    let consts = [
        max_principle_constants(&p.grid, bd, &s0.rho, &bd.rho_b),
        max_principle_constants(&p.grid, bd, &s0.b, &bd.b_b),
    ];
    let mut first_fail = None;
    let mut worst: f64 = 0.0;
    for (i, s) in traj.states.iter().enumerate().skip(1) {
        let div = traj.reports[..traj.steps[i]]
            .iter()
            .map(|r| r.div_norm)
            .fold(0.0_f64, f64::max);
        let horizon = s.time - s0.time;
        for (f, (field, (m, big_m))) in [&s.rho, &s.b].into_iter().zip(consts).enumerate() {
            let r = bounds_report(m, big_m, div, horizon, p.tol.tol_mp * big_m.max(1.0), std::iter::once(field));
            worst = worst.max(r.worst_violation / big_m.max(1.0));
            if (!r.lower_ok || !r.upper_ok) && first_fail.is_none() {
                first_fail = Some((traj.steps[i], if f == 0 { "density" } else { "magnetic field" }));
            }
        }
    }
    Verdict::new(
        "max principle",
        first_fail.is_none(),
        match first_fail {
            Some((step, f)) => format!("{f} leaves its bounds at step {step}; worst relative excess {worst:.3e}"),
            None => format!("worst relative excess {worst:.3e}"),
        },
    )
}

fn ledger_verdict(p: &Problem, traj: &Trajectory, magnetic: bool, accumulated_tol: f64) -> Verdict {
    let scale = ledger_scale(traj, p, magnetic);
    let field = |s: &crate::solver::State| integrate(&p.grid, if magnetic { &s.b } else { &s.rho });
    let flux = |r: &crate::solver::StepReport| if magnetic { r.magnetic_flux } else { r.mass_flux };
    let step_worst = traj
        .reports
        .iter()
        .map(|r| (if magnetic { r.magnetic_defect() } else { r.mass_defect() }).abs())
        .fold(0.0_f64, f64::max)
        / scale;
    let m0 = field(&traj.states[0]);
    let mut prefix_worst: f64 = 0.0;
    for (i, s) in traj.states.iter().enumerate() {
        let f: f64 = traj.reports[..traj.steps[i]].iter().map(flux).sum();
        prefix_worst = prefix_worst.max((field(s) - m0 + f).abs() / scale);
    }
    let name = if magnetic { "magnetic ledger" } else { "mass ledger" };
    Verdict::new(
        name,
        step_worst <= p.tol.tol_mass && prefix_worst <= accumulated_tol,
        format!("worst step defect {step_worst:.3e}, worst accumulated {prefix_worst:.3e}"),
    )
}

/// Runs every invariant check on a trajectory. `accumulated_mass_tol` bounds
/// the ledger defect summed over any prefix of the run.
pub fn verify(p: &Problem, traj: &Trajectory, accumulated_mass_tol: f64) -> Vec<Verdict> {
    let tol = &p.tol;
    let mut out = Vec::new();
    let bad = traj.reports.iter().position(|r| {
        !(r.picard_residual.is_finite()) || r.picard_residual > p.reg.picard_tol * (1.0 + r.dt.recip().max(1.0)) * 1e6
    });
    out.push(Verdict::new(
        "picard convergence",
        bad.is_none(),
        match bad {
            Some(n) => format!("step {} did not converge", n + 1),
            None => format!("{} steps converged", traj.reports.len()),
        },
    ));
    out.push(domination_verdict(p, traj));
    out.push(max_principle_verdict(p, traj));
    out.push(ledger_verdict(p, traj, false, accumulated_mass_tol));
    out.push(ledger_verdict(p, traj, true, accumulated_mass_tol));

    let budget = energy_budget(p, traj);
    let step_worst = traj
        .reports
        .iter()
        .map(|r| r.budget.residual() / r.budget.scale)
        .fold(f64::NEG_INFINITY, f64::max);
    let step_worst = if traj.reports.is_empty() { 0.0 } else { step_worst };
    let prefix = if traj.reports.is_empty() { 0.0 } else { budget.worst_prefix_residual / budget.scale };
    out.push(Verdict::new(
        "energy inequality",
        step_worst <= tol.tol_energy && prefix <= tol.tol_energy,
        format!("worst step residual {step_worst:.3e}, worst accumulated {prefix:.3e}"),
    ));
    out
}
