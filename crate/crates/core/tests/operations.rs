//! Worked examples for the time stepper, the drivers and the diagnostics.

mod common;

use mhd_core::diagnostics::energy::energy;
use mhd_core::diagnostics::relative::relative_energy;
use mhd_core::diagnostics::weak::{Bump, ConstantTest, VectorBump};
use mhd_core::diagnostics::{energy_budget, verify, weak_residual_continuity, weak_residual_magnetic, weak_residual_momentum};
use mhd_core::fields::{integrate, ScalarField, VectorField};
use mhd_core::solver::{advance_timestep, continuation, fixed_point_map, run_simulation, Schedule, State};
use mhd_core::transport::{renormalized_residual, Quadratic};
use mhd_core::Error;

fn uniform(n: usize) -> common::Setup {
    common::build(
        n,
        |_, _| [0.5, 0.0],
        |_, _| 1.0,
        |_, _| 1.0,
        |_, _| 1.0,
        |_, _| 1.0,
        |_, _| [0.5, 0.0],
        common::phys(1.4, 0.1, 0.0),
        common::reg(1e-3, 0.0),
    )
}

fn schedule(t_end: f64, dt: f64) -> Schedule {
    Schedule { t_end, dt, eps_init: 0.0 }
}

fn report_scale(s: &common::Setup) -> f64 {
    s.initial.u.sub(&s.problem.boundary.u_cells).max_abs() + 1.0
}

fn sup(a: &VectorField, b: &VectorField) -> f64 {
    a.sub(b).max_abs()
}

#[test]
fn uniform_state_is_a_fixed_point() {
    let s = uniform(8);
    let zero = VectorField::constant(&s.problem.grid, [0.0, 0.0]);
    let out = fixed_point_map(&s.problem, &s.initial, &zero, 0.01).unwrap();
    assert!(out.v.max_abs() <= 1e-12);
    let (next, report) = advance_timestep(&s.problem, &s.initial, 0.01).unwrap();
    assert_eq!(report.picard_iters, 1);
    assert!(sup(&next.u, &s.initial.u) <= 1e-12);
    assert!(next.rho.values.iter().all(|v| (v - 1.0).abs() <= 1e-12));
}

#[test]
fn map_contracts_for_small_steps() {
    let s = common::random_setup(2, 12);
    let p = &s.problem;
    let (next, _) = advance_timestep(p, &s.initial, 1e-3).unwrap();
    let v = next.u.sub(&p.boundary.u_cells);
    let bump = VectorField::from_fn(&p.grid, |x, y| [(3.0 * x).sin() * 1e-3, (2.0 * y).cos() * 1e-3]);
    let v2 = v.add(&bump);
    let a = fixed_point_map(p, &s.initial, &v, 1e-3).unwrap().v;
    let b = fixed_point_map(p, &s.initial, &v2, 1e-3).unwrap().v;
    assert!(sup(&a, &b) < sup(&v, &v2), "{} vs {}", sup(&a, &b), sup(&v, &v2));
}

#[test]
fn vacuum_patch_stays_finite() {
    let mut s = common::random_setup(4, 10);
    let g = s.problem.grid.clone();
    let hole = |x: f64, y: f64| (x - 0.5).hypot(y - 0.5) < 0.2;
    s.initial.rho = ScalarField::from_fn(&g, |x, y| if hole(x, y) { 0.0 } else { 1.0 });
    s.initial.b = s.initial.rho.clone();
    let v = VectorField::constant(&g, [0.0, 0.0]);
    let out = fixed_point_map(&s.problem, &s.initial, &v, 0.01).unwrap();
    assert!(out.v.is_finite() && out.rho.is_finite() && out.b.is_finite());
}

#[test]
fn smooth_step_converges_quickly() {
    let s = common::random_setup(7, 32);
    let (_, report) = advance_timestep(&s.problem, &s.initial, 1e-3).unwrap();
    assert!(report.picard_iters <= 10, "{} iterations", report.picard_iters);
    assert!(report.picard_residual <= s.problem.reg.picard_tol * (1.0 + report_scale(&s)));
}

#[test]
fn huge_step_is_split_or_fails_cleanly() {
    let mut s = common::random_setup(1, 8);
    s.problem.reg.picard_max = 15;
    match advance_timestep(&s.problem, &s.initial, 1e3) {
        Ok((next, report)) => {
            assert!(next.is_finite());
            assert!((next.time - 1e3).abs() <= 1e-9);
            assert!(report.substeps >= 1);
        }
        Err(e) => assert!(matches!(
            e,
            Error::Picard { .. } | Error::LinearSolver { .. } | Error::Negative { .. } | Error::NonFinite(_)
        )),
    }
    // a step that cannot converge in one iteration is halved
    s.problem.reg.picard_max = 1;
    let split = advance_timestep(&s.problem, &s.initial, 0.05);
    if let Ok((_, report)) = split {
        assert!(report.substeps > 1);
    }
}

#[test]
fn runs_are_deterministic() {
    let s = common::random_setup(9, 10);
    let a = run_simulation(&s.problem, &s.initial, &schedule(0.05, 0.01)).unwrap();
    let b = run_simulation(&s.problem, &s.initial, &schedule(0.05, 0.01)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_entry_continuation_is_a_plain_run() {
    let s = common::random_setup(6, 8);
    let sch = schedule(0.04, 0.01);
    let fam = continuation(&s.problem, &s.initial, &sch, &[s.problem.reg.eps], &[s.problem.reg.delta]);
    let plain = run_simulation(&s.problem, &s.initial, &sch).unwrap();
    assert_eq!(fam.runs.len(), 1);
    assert_eq!(fam.runs[0].result.as_ref().unwrap(), &plain);
    assert!(fam.distances.is_empty());
}

#[test]
fn artificial_pressure_energy_is_linear_in_delta() {
    let s = common::random_setup(8, 10);
    let sch = schedule(0.05, 0.01);
    let fam = continuation(&s.problem, &s.initial, &sch, &[s.problem.reg.eps], &[0.1, 0.01, 0.0]);
    let p = &s.problem;
    let split: Vec<f64> = fam
        .runs
        .iter()
        .map(|r| {
            let last = r.result.as_ref().unwrap().last();
            let mut reg = p.reg;
            reg.delta = r.delta;
            energy(&p.grid, &p.boundary, &last.rho, &last.b, &last.u, &p.phys, &reg).artificial
        })
        .collect();
    assert_eq!(split[2], 0.0);
    let per_delta = [split[0] / 0.1, split[1] / 0.01];
    assert!(per_delta[0] > 0.0 && (per_delta[0] / per_delta[1] - 1.0).abs() < 0.2, "{per_delta:?}");
}

#[test]
fn uniform_budget_closes() {
    let s = uniform(8);
    let traj = run_simulation(&s.problem, &s.initial, &schedule(0.1, 0.01)).unwrap();
    let e = energy_budget(&s.problem, &traj);
    assert!(e.inequality_residual.abs() <= 1e-10 * e.scale);
    assert!(verify(&s.problem, &traj, 1e-6).iter().all(|v| v.pass));
}

#[test]
fn closed_box_energy_does_not_grow() {
    let mut s = common::random_setup(12, 12);
    let g0 = mhd_core::grid::Grid::build(12, 12, 1.0, 1.0).unwrap();
    let (g, bd) = mhd_core::fields::BoundaryData::setup(&g0, |_, _| [0.0, 0.0], |_, _| 1.0, |_, _| 1.0);
    s.problem.grid = g;
    s.problem.boundary = bd;
    let gr = s.problem.grid.clone();
    s.initial.u = VectorField::from_fn(&gr, |x, y| {
        let b = (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin();
        [0.3 * b, -0.2 * b]
    });
    let traj = run_simulation(&s.problem, &s.initial, &schedule(0.1, 0.01)).unwrap();
    let p = &s.problem;
    let totals: Vec<f64> = traj
        .states
        .iter()
        .map(|st| energy(&p.grid, &p.boundary, &st.rho, &st.b, &st.u, &p.phys, &p.reg).total())
        .collect();
    for w in totals.windows(2) {
        assert!(w[1] <= w[0] + 1e-8 * (1.0 + w[0]), "{totals:?}");
    }
}

#[test]
fn constant_test_function_gives_the_mass_ledger() {
    let s = common::random_setup(5, 10);
    let p = &s.problem;
    let traj = run_simulation(p, &s.initial, &schedule(0.05, 0.01)).unwrap();
    let r = weak_residual_continuity(&p.grid, &p.boundary, &p.reg, &traj, &ConstantTest(1.0));
    let ledger = integrate(&p.grid, &traj.last().rho) - integrate(&p.grid, &traj.states[0].rho) + traj.mass_flux_total;
    assert!((r - ledger.abs()).abs() <= 1e-12, "{r:e} vs {ledger:e}");
    assert!(r <= 1e-10);
}

#[test]
fn bump_residuals_vanish_on_the_uniform_state() {
    let s = uniform(16);
    let p = &s.problem;
    let traj = run_simulation(p, &s.initial, &schedule(0.1, 0.01)).unwrap();
    let bump = Bump {
        center: [0.5, 0.5],
        radius: 0.3,
        rate: 1.0,
    };
    let scale = 1.0;
    assert!(weak_residual_continuity(&p.grid, &p.boundary, &p.reg, &traj, &bump) <= 1e-8 * scale);
    assert!(weak_residual_magnetic(&p.grid, &p.boundary, &p.reg, &traj, &bump) <= 1e-8 * scale);
    let vb = VectorBump {
        bump,
        direction: [0.6, 0.8],
    };
    assert!(weak_residual_momentum(&p.grid, &p.phys, &p.reg, &traj, &vb).unwrap() <= 1e-8 * scale);
}

#[test]
fn momentum_test_function_must_be_interior() {
    let s = uniform(8);
    let p = &s.problem;
    let traj = run_simulation(p, &s.initial, &schedule(0.02, 0.01)).unwrap();
    let vb = VectorBump {
        bump: Bump {
            center: [0.1, 0.5],
            radius: 0.3,
            rate: 0.0,
        },
        direction: [1.0, 0.0],
    };
    assert!(matches!(
        weak_residual_momentum(&p.grid, &p.phys, &p.reg, &traj, &vb),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn weak_residuals_decrease_under_refinement() {
    let bump = Bump {
        center: [0.45, 0.55],
        radius: 0.3,
        rate: 2.0,
    };
    let vb = VectorBump {
        bump,
        direction: [0.8, -0.6],
    };
    let mut res = [Vec::new(), Vec::new(), Vec::new()];
    for (n, dt) in [(8, 0.02), (16, 0.01), (32, 0.005)] {
        let s = common::random_setup(21, n);
        let p = &s.problem;
        let traj = run_simulation(p, &s.initial, &schedule(0.1, dt)).unwrap();
        res[0].push(weak_residual_continuity(&p.grid, &p.boundary, &p.reg, &traj, &bump));
        res[1].push(weak_residual_magnetic(&p.grid, &p.boundary, &p.reg, &traj, &bump));
        res[2].push(weak_residual_momentum(&p.grid, &p.phys, &p.reg, &traj, &vb).unwrap());
    }
    for r in &res {
        let orders = common::manufactured::orders(r);
        assert!(orders.iter().all(|&q| q >= 0.9), "{r:?} {orders:?}");
    }
}

#[test]
fn relative_energy_reduces_to_energy_against_near_vacuum() {
    let s = common::random_setup(3, 8);
    let p = &s.problem;
    let st = &s.initial;
    let reference = State {
        time: 0.0,
        rho: ScalarField::constant(&p.grid, 1e-8),
        b: ScalarField::constant(&p.grid, 0.0),
        u: p.boundary.u_cells.clone(),
    };
    let r = relative_energy(&p.grid, st, &reference, p.phys.gamma);
    let mut reg = p.reg;
    reg.delta = 0.0;
    let e = energy(&p.grid, &p.boundary, &st.rho, &st.b, &st.u, &p.phys, &reg);
    assert!((r.kinetic_gap - e.kinetic).abs() <= 1e-12);
    assert!((r.magnetic_gap - e.magnetic).abs() <= 1e-12);
    // the gap differs from the potential by the reference slope times the mass
    let g = p.phys.gamma;
    let slope = g * 1e-8f64.powf(g - 1.0) / (g - 1.0);
    let mass = integrate(&p.grid, &st.rho);
    let shift = r.bregman_gap - e.pressure_potential;
    assert!((shift + slope * mass).abs() <= 1e-10, "{shift:e} vs {:e}", -slope * mass);
}

#[test]
fn renormalization_with_linear_and_constant_potentials() {
    let s = common::random_setup(13, 10);
    let p = &s.problem;
    let traj = run_simulation(p, &s.initial, &schedule(0.05, 0.01)).unwrap();
    let rho: Vec<ScalarField> = traj.states.iter().map(|s| s.rho.clone()).collect();
    let dts: Vec<f64> = traj.reports.iter().map(|r| r.dt).collect();
    // the transporting velocity of each step is the committed end-of-step one
    let u: Vec<VectorField> = traj.states[1..].iter().map(|s| s.u.clone()).collect();
    let linear = Quadratic { a: 0.0, b: 1.0, c: 0.0 };
    let constant = Quadratic { a: 1.0, b: 0.0, c: 0.0 };
    let r1 = renormalized_residual(&p.grid, &p.boundary, &rho, &u, &p.boundary.rho_b, p.reg.eps, &dts, &linear);
    let r0 = renormalized_residual(&p.grid, &p.boundary, &rho, &u, &p.boundary.rho_b, p.reg.eps, &dts, &constant);
    assert!(r1 <= 1e-10, "{r1:e}");
    assert_eq!(r0, 0.0);
}
