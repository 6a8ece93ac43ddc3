//! Time marching by fixed-point iteration between transport and momentum.

use crate::diagnostics::energy::{step_budget, BudgetInput, StepBudget};
use crate::diagnostics::zeta::trajectory_zeta_gap;
use crate::error::{Error, Result};
use crate::fields::{integrate, BoundaryData, ScalarField, VectorField};
use crate::grid::Grid;
use crate::momentum::{solve_momentum, MomentumStep};
use crate::params::{check, Domination, PhysParams, RegParams, Tolerances};
use crate::transport::{
    advance_scalar, bounds_report, discrete_divergence, domination_check, max_principle_constants, mollify,
    DominationReport, MaxPrincipleReport, TransportProblem,
};

/// Maximum number of times a failing step is split in half.
pub const MAX_HALVINGS: u32 = 6;

/// Everything fixed over a run.
#[derive(Debug, Clone)]
pub struct Problem {
    /// Grid classified by the boundary velocity.
    pub grid: Grid,
    pub boundary: BoundaryData,
    pub phys: PhysParams,
    pub reg: RegParams,
    pub domination: Domination,
    pub tol: Tolerances,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        let mut errs = self.phys.validate();
        errs.extend(self.reg.validate());
        errs.extend(self.domination.validate());
        errs.extend(self.tol.validate());
        check(errs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub time: f64,
    pub rho: ScalarField,
    pub b: ScalarField,
    pub u: VectorField,
}

impl State {
    pub fn is_finite(&self) -> bool {
        self.time.is_finite() && self.rho.is_finite() && self.b.is_finite() && self.u.is_finite()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    /// Time at the end of the step.
    pub time: f64,
    pub dt: f64,
    /// Number of sub-steps actually taken (1 unless the step was split).
    pub substeps: usize,
    pub picard_iters: usize,
    pub picard_residual: f64,
    pub linear_iters: usize,
    /// `int rho_new - int rho_old`.
    pub mass_change: f64,
    /// `dt` times the net outward boundary flux of `rho`.
    pub mass_flux: f64,
    pub magnetic_change: f64,
    pub magnetic_flux: f64,
    pub budget: StepBudget,
    pub domination: DominationReport,
    /// Largest discrete `|div u|` of the transporting velocities.
    pub div_norm: f64,
    /// Bounds for `rho` and `b`, filled in by the run driver.
    pub max_principle: Option<[MaxPrincipleReport; 2]>,
}

impl StepReport {
    /// `(int rho_new - int rho_old + flux)` relative to the mass scale.
    pub fn mass_defect(&self) -> f64 {
        self.mass_change + self.mass_flux
    }

    pub fn magnetic_defect(&self) -> f64 {
        self.magnetic_change + self.magnetic_flux
    }

    fn absorb(&mut self, o: &StepReport) {
        self.time = o.time;
        self.dt += o.dt;
        self.substeps += o.substeps;
        self.picard_iters += o.picard_iters;
        self.picard_residual = self.picard_residual.max(o.picard_residual);
        self.linear_iters += o.linear_iters;
        self.mass_change += o.mass_change;
        self.mass_flux += o.mass_flux;
        self.magnetic_change += o.magnetic_change;
        self.magnetic_flux += o.magnetic_flux;
        let (a, b) = (&mut self.budget, &o.budget);
        a.energy_change += b.energy_change;
        a.dissipation += b.dissipation;
        a.eps_dissipation += b.eps_dissipation;
        a.inflow_gap += b.inflow_gap;
        a.outflow += b.outflow;
        a.viscous_forcing += b.viscous_forcing;
        a.inflow_supply += b.inflow_supply;
        a.convective_forcing += b.convective_forcing;
        a.pressure_forcing += b.pressure_forcing;
        a.eps_forcing += b.eps_forcing;
        a.body_forcing += b.body_forcing;
        a.scale = a.scale.max(b.scale);
        self.domination = o.domination;
        self.div_norm = self.div_norm.max(o.div_norm);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `states[0]` is the (possibly mollified) initial state.
    pub states: Vec<State>,
    /// Number of steps taken before each stored state.
    pub steps: Vec<usize>,
    /// `reports[n]` describes step `n + 1`.
    pub reports: Vec<StepReport>,
    /// Accumulated `dt` times boundary fluxes of `rho` and `b`.
    pub mass_flux_total: f64,
    pub magnetic_flux_total: f64,
}

impl Trajectory {
    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub t_end: f64,
    pub dt: f64,
    /// Pseudo-time of the initial diffusion sweep; 0 disables it.
    pub eps_init: f64,
}

impl Schedule {
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(0.0) as usize
    }
}

/// One evaluation of the fixed-point map.
#[derive(Debug, Clone)]
pub struct MapOutput {
    /// New velocity deviation `u - u_b`.
    pub v: VectorField,
    pub rho: ScalarField,
    pub b: ScalarField,
    pub u: VectorField,
    pub linear_iters: usize,
    pub div_norm: f64,
}

/// Transports `rho` and `b` with `v_guess + u_b`, then solves momentum.
pub fn fixed_point_map(p: &Problem, state: &State, v_guess: &VectorField, dt: f64) -> Result<MapOutput> {
    fixed_point_map_forced(p, state, v_guess, dt, None)
}

pub fn fixed_point_map_forced(
    p: &Problem,
    state: &State,
    v_guess: &VectorField,
    dt: f64,
    body_force: Option<&VectorField>,
) -> Result<MapOutput> {
    let g = &p.grid;
    let bd = &p.boundary;
    let u_guess = v_guess.add(&bd.u_cells);
    let transport = |c_old: &ScalarField, c_b: &[f64]| {
        let tp = TransportProblem {
            grid: g,
            boundary: bd,
            c_old,
            velocity: &u_guess,
            c_b,
            eps: p.reg.eps,
            dt,
            source: None,
        };
        advance_scalar(&tp, p.reg.tol_lin, p.reg.max_lin, p.tol.tol_neg)
    };
    let rho = transport(&state.rho, &bd.rho_b)?;
    let b = transport(&state.b, &bd.b_b)?;
    let mom = solve_momentum(&MomentumStep {
        grid: g,
        boundary: bd,
        rho_old: &state.rho,
        u_old: &state.u,
        rho: &rho.c,
        b: &b.c,
        u_guess: &u_guess,
        dt,
        phys: &p.phys,
        reg: &p.reg,
        body_force,
    })?;
    Ok(MapOutput {
        v: mom.u.sub(&bd.u_cells),
        u: mom.u,
        rho: rho.c,
        b: b.c,
        linear_iters: rho.stats.iterations + b.stats.iterations + mom.stats.iterations,
        div_norm: discrete_divergence(g, bd, &u_guess).max_abs(),
    })
}

/// One step with a single Picard solve at the given `dt`.
fn picard_step(p: &Problem, state: &State, dt: f64, body_force: Option<&VectorField>) -> Result<(State, StepReport)> {
    let bd = &p.boundary;
    let mut v = state.u.sub(&bd.u_cells);
    let mut linear_iters = 0;
    let mut last_update = f64::INFINITY;
    for it in 1..=p.reg.picard_max {
        let out = fixed_point_map_forced(p, state, &v, dt, body_force)?;
        linear_iters += out.linear_iters;
        if !out.v.is_finite() {
            return Err(Error::NonFinite("fixed-point iterate"));
        }
        let update = out.v.sub(&v).max_abs();
        last_update = update;
        if update <= p.reg.picard_tol * (1.0 + v.max_abs()) {
            let u_transport = v.add(&bd.u_cells);
            let next = State {
                time: state.time + dt,
                rho: out.rho,
                b: out.b,
                u: out.u,
            };
            let report = step_report(p, state, &next, &u_transport, dt, body_force, it, update, linear_iters, out.div_norm);
            return Ok((next, report));
        }
        v = out.v;
    }
    Err(Error::Picard {
        iterations: p.reg.picard_max,
        update: last_update,
        dt,
    })
}

#[allow(clippy::too_many_arguments)]
fn step_report(
    p: &Problem,
    old: &State,
    new: &State,
    u_transport: &VectorField,
    dt: f64,
    body_force: Option<&VectorField>,
    picard_iters: usize,
    picard_residual: f64,
    linear_iters: usize,
    div_norm: f64,
) -> StepReport {
    let g = &p.grid;
    let bd = &p.boundary;
    let budget = step_budget(&BudgetInput {
        grid: g,
        boundary: bd,
        phys: &p.phys,
        reg: &p.reg,
        dt,
        rho_old: &old.rho,
        b_old: &old.b,
        u_old: &old.u,
        rho: &new.rho,
        b: &new.b,
        u: &new.u,
        u_transport,
        body_force,
    });
    StepReport {
        time: new.time,
        dt,
        substeps: 1,
        picard_iters,
        picard_residual,
        linear_iters,
        mass_change: integrate(g, &new.rho) - integrate(g, &old.rho),
        mass_flux: dt * boundary_flux(g, bd, &new.rho, &bd.rho_b),
        magnetic_change: integrate(g, &new.b) - integrate(g, &old.b),
        magnetic_flux: dt * boundary_flux(g, bd, &new.b, &bd.b_b),
        budget,
        domination: domination_check(g, bd, &new.rho, &new.b, p.domination.lower, p.domination.upper),
        div_norm,
        max_principle: None,
    }
}

/// Net outward flux `sum |f| c_face (u_b . n)` with inflow data and outflow
/// cell values.
pub fn boundary_flux(grid: &Grid, bd: &BoundaryData, c: &ScalarField, c_b: &[f64]) -> f64 {
    use crate::grid::FaceTag;
    grid.boundary_faces
        .iter()
        .map(|f| {
            let gn = bd.normal_speed[f.index];
            match bd.tags[f.index] {
                FaceTag::Inflow => f.length * c_b[f.index] * gn,
                FaceTag::Outflow => f.length * c.values[f.cell] * gn,
                FaceTag::Characteristic => 0.0,
            }
        })
        .sum()
}

/// Advances by `dt`, splitting the step in halves when the fixed-point
/// iteration does not converge.
pub fn advance_timestep(p: &Problem, state: &State, dt: f64) -> Result<(State, StepReport)> {
    advance_forced(p, state, dt, None)
}

pub fn advance_forced(
    p: &Problem,
    state: &State,
    dt: f64,
    body_force: Option<&VectorField>,
) -> Result<(State, StepReport)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    split_step(p, state, dt, body_force, 0)
}

fn split_step(
    p: &Problem,
    state: &State,
    dt: f64,
    body_force: Option<&VectorField>,
    level: u32,
) -> Result<(State, StepReport)> {
    match picard_step(p, state, dt, body_force) {
        Ok(r) => Ok(r),
        Err(Error::Picard { .. } | Error::LinearSolver { .. } | Error::Negative { .. } | Error::NonFinite(_))
            if level < MAX_HALVINGS =>
        {
            let (mid, mut report) = split_step(p, state, 0.5 * dt, body_force, level + 1)?;
            let (end, second) = split_step(p, &mid, 0.5 * dt, body_force, level + 1)?;
            report.absorb(&second);
            Ok((end, report))
        }
        Err(e) => Err(e),
    }
}

/// Marches `initial` to `schedule.t_end`, keeping every state.
pub fn run_simulation(p: &Problem, initial: &State, schedule: &Schedule) -> Result<Trajectory> {
    run_simulation_forced(p, initial, schedule, None)
}

pub fn run_simulation_forced(
    p: &Problem,
    initial: &State,
    schedule: &Schedule,
    body_force: Option<&VectorField>,
) -> Result<Trajectory> {
    p.validate()?;
    if !(schedule.dt > 0.0) || !(schedule.t_end >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "schedule needs dt > 0 and t_end >= 0, got dt = {}, t_end = {}",
            schedule.dt, schedule.t_end
        )));
    }
    if !initial.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    let g = &p.grid;
    let bd = &p.boundary;
    let mut s0 = initial.clone();
    if schedule.eps_init > 0.0 {
        s0.rho = mollify(g, &s0.rho, schedule.eps_init, p.reg.tol_lin, p.reg.max_lin)?;
        s0.b = mollify(g, &s0.b, schedule.eps_init, p.reg.tol_lin, p.reg.max_lin)?;
    }
    let (rho_m, rho_big) = max_principle_constants(g, bd, &s0.rho, &bd.rho_b);
    let (b_m, b_big) = max_principle_constants(g, bd, &s0.b, &bd.b_b);
    let mut traj = Trajectory {
        states: vec![s0],
        steps: vec![0],
        reports: Vec::new(),
        mass_flux_total: 0.0,
        magnetic_flux_total: 0.0,
    };
    let mut div_norm: f64 = 0.0;
    let n = schedule.steps();
    for step in 0..n {
        let cur = traj.last();
        let dt = if step + 1 == n {
            (schedule.t_end - cur.time).max(0.5 * schedule.dt).min(schedule.dt)
        } else {
            schedule.dt
        };
        let (next, mut report) = advance_forced(p, cur, dt, body_force).map_err(|e| Error::Step {
            time: cur.time,
            source: Box::new(e),
        })?;
        div_norm = div_norm.max(report.div_norm);
        let horizon = next.time - traj.states[0].time;
        let tol = p.tol.tol_mp;
        report.max_principle = Some([
            bounds_report(rho_m, rho_big, div_norm, horizon, tol * rho_big.max(1.0), std::iter::once(&next.rho)),
            bounds_report(b_m, b_big, div_norm, horizon, tol * b_big.max(1.0), std::iter::once(&next.b)),
        ]);
        traj.mass_flux_total += report.mass_flux;
        traj.magnetic_flux_total += report.magnetic_flux;
        traj.states.push(next);
        traj.steps.push(step + 1);
        traj.reports.push(report);
    }
    Ok(traj)
}

#[derive(Debug, Clone)]
pub struct ContinuationRun {
    pub eps: f64,
    pub delta: f64,
    pub result: std::result::Result<Trajectory, String>,
}

#[derive(Debug, Clone)]
pub struct ContinuationReport {
    /// Runs in order: `eps` outer, `delta` inner.
    pub runs: Vec<ContinuationRun>,
    /// Distances between the final states of consecutive successful runs.
    pub distances: Vec<f64>,
    /// `zeta_gap` between consecutive successful runs.
    pub zeta_gaps: Vec<f64>,
}

/// `L^2` distance between two states: `rho`, `b` and `u` together.
pub fn state_distance(grid: &Grid, a: &State, b: &State) -> f64 {
    let mut s = 0.0;
    for k in 0..grid.num_cells() {
        let dr = a.rho.values[k] - b.rho.values[k];
        let db = a.b.values[k] - b.b.values[k];
        let du = [a.u.values[k][0] - b.u.values[k][0], a.u.values[k][1] - b.u.values[k][1]];
        s += dr * dr + db * db + du[0] * du[0] + du[1] * du[1];
    }
    (s * grid.cell_area()).sqrt()
}

/// Runs the problem for every `(eps, delta)` pair concurrently.
pub fn continuation(
    p: &Problem,
    initial: &State,
    schedule: &Schedule,
    eps_list: &[f64],
    delta_list: &[f64],
) -> ContinuationReport {
    let pairs: Vec<(f64, f64)> = eps_list
        .iter()
        .flat_map(|&e| delta_list.iter().map(move |&d| (e, d)))
        .collect();
    let runs: Vec<ContinuationRun> = std::thread::scope(|scope| {
        let handles: Vec<_> = pairs
            .iter()
            .map(|&(eps, delta)| {
                scope.spawn(move || {
                    let mut q = p.clone();
                    q.reg.eps = eps;
                    q.reg.delta = delta;
                    let result = run_simulation(&q, initial, schedule).map_err(|e| e.to_string());
                    ContinuationRun { eps, delta, result }
                })
            })
            .collect();
        handles
            .into_iter()
            .zip(&pairs)
            .map(|(h, &(eps, delta))| {
                h.join().unwrap_or_else(|_| ContinuationRun {
                    eps,
                    delta,
                    result: Err("run panicked".into()),
                })
            })
            .collect()
    });
    let ok: Vec<&Trajectory> = runs.iter().filter_map(|r| r.result.as_ref().ok()).collect();
    let mut distances = Vec::new();
    let mut zeta_gaps = Vec::new();
    for w in ok.windows(2) {
        distances.push(state_distance(&p.grid, w[0].last(), w[1].last()));
        zeta_gaps.push(trajectory_zeta_gap(&p.grid, &p.boundary, &p.domination, w[1], w[0]));
    }
    ContinuationReport {
        runs,
        distances,
        zeta_gaps,
    }
}
