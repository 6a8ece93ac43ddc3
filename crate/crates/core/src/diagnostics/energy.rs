//! Total energy and its discrete balance.
//!
//! Over one implicit step the balance reads, with every rate term already
//! multiplied by `dt`,
//!
//! ```text
//! [E]_old^new + dissipation + eps_dissipation + inflow_gap + outflow
//!     = viscous_forcing + inflow_supply + convective_forcing
//!       + pressure_forcing + eps_forcing + body_forcing
//! ```
//!
//! The scheme drops only nonnegative remainders (upwind jumps, the time
//! difference `rho_old |v - v_old|^2 / 2`, Bregman gaps in time), so
//! `lhs - rhs <= 0` up to the fixed-point and linear tolerances.

use crate::fields::{integrate, BoundaryData, ScalarField, VectorField};
use crate::grid::{FaceTag, Grid};
use crate::momentum::{gauss_gradient, integrated_divergence, pressure_at, viscous_form, WithTrace};
use crate::params::{PhysParams, RegParams};
use crate::transport::{face_speed, mass_fluxes};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyReport {
    /// `int rho |u - u_b|^2 / 2`.
    pub kinetic: f64,
    /// `int rho^gamma / (gamma - 1)`.
    pub pressure_potential: f64,
    /// `int b^2 / 2`.
    pub magnetic: f64,
    /// `int delta (rho + b)^beta / (beta - 1)`.
    pub artificial: f64,
    /// Time-integrated viscous dissipation.
    pub dissipation: f64,
    /// Time-integrated artificial-diffusion dissipation.
    pub eps_dissipation: f64,
    /// Time-integrated outflow of potential energy.
    pub boundary_out: f64,
    /// Time-integrated inflow convexity gaps minus the supplied potential.
    pub boundary_in: f64,
    /// Time-integrated terms driven by the boundary velocity.
    pub forcing: f64,
    /// Accumulated `lhs - rhs`.
    pub inequality_residual: f64,
    /// Largest accumulated residual over all prefixes.
    pub worst_prefix_residual: f64,
    /// Magnitude the residual is compared against.
    pub scale: f64,
}

impl EnergyReport {
    pub fn total(&self) -> f64 {
        self.kinetic + self.pressure_potential + self.magnetic + self.artificial
    }
}

/// Potential energy density `H(rho) + b^2/2 + delta Q(rho + b)`.
#[derive(Debug, Clone, Copy)]
pub struct Potentials {
    pub gamma: f64,
    pub delta: f64,
    pub beta: f64,
}

impl Potentials {
    pub fn new(phys: &PhysParams, reg: &RegParams) -> Potentials {
        Potentials {
            gamma: phys.gamma,
            delta: reg.delta,
            beta: reg.beta,
        }
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        rho.max(0.0).powf(self.gamma) / (self.gamma - 1.0)
    }

    pub fn pressure_slope(&self, rho: f64) -> f64 {
        self.gamma * rho.max(0.0).powf(self.gamma - 1.0) / (self.gamma - 1.0)
    }

    pub fn artificial(&self, s: f64) -> f64 {
        if self.delta == 0.0 {
            return 0.0;
        }
        self.delta * s.max(0.0).powf(self.beta) / (self.beta - 1.0)
    }

    pub fn artificial_slope(&self, s: f64) -> f64 {
        if self.delta == 0.0 {
            return 0.0;
        }
        self.delta * self.beta * s.max(0.0).powf(self.beta - 1.0) / (self.beta - 1.0)
    }

    pub fn total(&self, rho: f64, b: f64) -> f64 {
        self.pressure(rho) + 0.5 * b * b + self.artificial(rho + b)
    }

    /// Sum of the Bregman gaps `Phi(a) - Phi(r) - Phi'(r)(a - r)` of the three
    /// potentials, at `a = (rho_a, b_a)` around `r = (rho_r, b_r)`.
    pub fn gap(&self, rho_a: f64, b_a: f64, rho_r: f64, b_r: f64) -> f64 {
        let (sa, sr) = (rho_a + b_a, rho_r + b_r);
        (self.pressure(rho_a) - self.pressure(rho_r) - self.pressure_slope(rho_r) * (rho_a - rho_r))
            + 0.5 * (b_a - b_r) * (b_a - b_r)
            + (self.artificial(sa) - self.artificial(sr) - self.artificial_slope(sr) * (sa - sr))
    }
}

/// Instantaneous energy components of `(rho, b, u)`.
pub fn energy(
    grid: &Grid,
    bd: &BoundaryData,
    rho: &ScalarField,
    b: &ScalarField,
    u: &VectorField,
    phys: &PhysParams,
    reg: &RegParams,
) -> EnergyReport {
    let pot = Potentials::new(phys, reg);
    let area = grid.cell_area();
    let mut r = EnergyReport::default();
    for k in 0..grid.num_cells() {
        let v = [u.values[k][0] - bd.u_cells.values[k][0], u.values[k][1] - bd.u_cells.values[k][1]];
        let (p, m) = (rho.values[k], b.values[k]);
        r.kinetic += 0.5 * p * (v[0] * v[0] + v[1] * v[1]);
        r.pressure_potential += pot.pressure(p);
        r.magnetic += 0.5 * m * m;
        r.artificial += pot.artificial(p + m);
    }
    r.kinetic *= area;
    r.pressure_potential *= area;
    r.magnetic *= area;
    r.artificial *= area;
    r.scale = r.total();
    r
}

/// Inputs of one step of the discrete balance.
#[derive(Debug, Clone, Copy)]
pub struct BudgetInput<'a> {
    pub grid: &'a Grid,
    pub boundary: &'a BoundaryData,
    pub phys: &'a PhysParams,
    pub reg: &'a RegParams,
    pub dt: f64,
    pub rho_old: &'a ScalarField,
    pub b_old: &'a ScalarField,
    pub u_old: &'a VectorField,
    pub rho: &'a ScalarField,
    pub b: &'a ScalarField,
    pub u: &'a VectorField,
    /// Velocity that transported `rho_old -> rho`.
    pub u_transport: &'a VectorField,
    pub body_force: Option<&'a VectorField>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepBudget {
    pub energy_change: f64,
    pub dissipation: f64,
    pub eps_dissipation: f64,
    pub inflow_gap: f64,
    pub outflow: f64,
    pub viscous_forcing: f64,
    pub inflow_supply: f64,
    pub convective_forcing: f64,
    pub pressure_forcing: f64,
    pub eps_forcing: f64,
    pub body_forcing: f64,
    pub scale: f64,
}

impl StepBudget {
    pub fn lhs(&self) -> f64 {
        self.energy_change + self.dissipation + self.eps_dissipation + self.inflow_gap + self.outflow
    }

    pub fn rhs(&self) -> f64 {
        self.viscous_forcing
            + self.inflow_supply
            + self.convective_forcing
            + self.pressure_forcing
            + self.eps_forcing
            + self.body_forcing
    }

    pub fn residual(&self) -> f64 {
        self.lhs() - self.rhs()
    }

    /// Sum of the absolute values of all rate terms.
    pub fn magnitude(&self) -> f64 {
        [
            self.dissipation,
            self.eps_dissipation,
            self.inflow_gap,
            self.outflow,
            self.viscous_forcing,
            self.inflow_supply,
            self.convective_forcing,
            self.pressure_forcing,
            self.eps_forcing,
            self.body_forcing,
        ]
        .iter()
        .map(|t| t.abs())
        .sum()
    }

    /// Boundary-driven part of the right-hand side.
    pub fn forcing(&self) -> f64 {
        self.rhs() - self.inflow_supply
    }
}

/// `mu sum |K| (grad u^T : grad u - (tr grad u)^2)`, the boundary part that
/// turns the compact viscous form into `int S(grad u) : grad u`.
fn stress_correction(grid: &Grid, bd: &BoundaryData, u: &VectorField, mu: f64) -> f64 {
    let g = gauss_gradient(grid, u, &bd.u_faces);
    let s: f64 = g
        .iter()
        .map(|g| {
            let tr = g[0][0] + g[1][1];
            g[0][0] * g[0][0] + 2.0 * g[0][1] * g[1][0] + g[1][1] * g[1][1] - tr * tr
        })
        .sum();
    mu * s * grid.cell_area()
}

/// Discrete `int S(grad u) : grad u` with boundary values `u_b`.
pub fn dissipation_rate(grid: &Grid, bd: &BoundaryData, u: &VectorField, phys: &PhysParams) -> f64 {
    let tr = WithTrace {
        cells: u,
        faces: &bd.u_faces,
        normal: &bd.normal_speed,
    };
    viscous_form(grid, phys, tr, tr) + stress_correction(grid, bd, u, phys.mu)
}

pub fn step_budget(inp: &BudgetInput) -> StepBudget {
    let g = inp.grid;
    let bd = inp.boundary;
    let pot = Potentials::new(inp.phys, inp.reg);
    let eps = inp.reg.eps;
    let dt = inp.dt;
    let area = g.cell_area();
    let n = g.num_cells();
    let (rho, b) = (&inp.rho.values, &inp.b.values);
    let ub = &bd.u_cells.values;
    let v: Vec<[f64; 2]> = (0..n)
        .map(|k| [inp.u.values[k][0] - ub[k][0], inp.u.values[k][1] - ub[k][1]])
        .collect();
    let dot = |a: [f64; 2], c: [f64; 2]| a[0] * c[0] + a[1] * c[1];

    let e_new = energy(g, bd, inp.rho, inp.b, inp.u, inp.phys, inp.reg);
    let e_old = energy(g, bd, inp.rho_old, inp.b_old, inp.u_old, inp.phys, inp.reg);
    let mut s = StepBudget {
        energy_change: e_new.total() - e_old.total(),
        ..StepBudget::default()
    };

    // viscous terms
    let zeros_faces = vec![[0.0; 2]; g.boundary_faces.len()];
    let zeros_normal = vec![0.0; g.boundary_faces.len()];
    let dev = VectorField {
        nx: g.nx,
        ny: g.ny,
        values: v.clone(),
    };
    let u_tr = WithTrace {
        cells: inp.u,
        faces: &bd.u_faces,
        normal: &bd.normal_speed,
    };
    let v_tr = WithTrace {
        cells: &dev,
        faces: &zeros_faces,
        normal: &zeros_normal,
    };
    let rate = dissipation_rate(g, bd, inp.u, inp.phys);
    s.dissipation = dt * rate;
    s.viscous_forcing = dt * (rate - viscous_form(g, inp.phys, u_tr, v_tr));

    // eps dissipation and forcing
    let mut eps_diss = 0.0;
    let mut eps_force = 0.0;
    for f in &g.interior_faces {
        let (l, r) = (f.left, f.right);
        let w = eps * f.length / f.distance;
        let (sl, sr) = (rho[l] + b[l], rho[r] + b[r]);
        eps_diss += w
            * ((rho[r] - rho[l]) * (pot.pressure_slope(rho[r]) - pot.pressure_slope(rho[l]))
                + (b[r] - b[l]) * (b[r] - b[l])
                + (sr - sl) * (pot.artificial_slope(sr) - pot.artificial_slope(sl)));
        let avg = [0.5 * (ub[l][0] + ub[r][0]), 0.5 * (ub[l][1] + ub[r][1])];
        let dv = [v[r][0] - v[l][0], v[r][1] - v[l][1]];
        eps_force += w * (rho[r] - rho[l]) * dot(dv, avg);
    }
    s.eps_dissipation = dt * eps_diss;
    s.eps_forcing = dt * eps_force;

    // boundary potential fluxes
    for f in &g.boundary_faces {
        let gn = bd.normal_speed[f.index];
        let k = f.cell;
        match bd.tags[f.index] {
            FaceTag::Outflow => s.outflow += dt * f.length * gn * pot.total(rho[k], b[k]),
            FaceTag::Inflow => {
                let (rb, bb) = (bd.rho_b[f.index], bd.b_b[f.index]);
                s.inflow_gap += dt * f.length * gn.abs() * pot.gap(rb, bb, rho[k], b[k]);
                s.inflow_supply -= dt * f.length * gn * pot.total(rb, bb);
            }
            FaceTag::Characteristic => {}
        }
    }

    // convective forcing from the mass fluxes that moved rho
    let fl = mass_fluxes(g, bd, inp.rho, inp.u_transport, &bd.rho_b);
    let mut conv = 0.0;
    for (fi, f) in g.interior_faces.iter().enumerate() {
        let (l, r) = (f.left, f.right);
        let flux = fl.interior[fi];
        let up = if face_speed(inp.u_transport, f) >= 0.0 { l } else { r };
        let dl = [ub[l][0] - ub[up][0], ub[l][1] - ub[up][1]];
        let dr = [ub[r][0] - ub[up][0], ub[r][1] - ub[up][1]];
        conv += flux * dot(v[l], dl) - flux * dot(v[r], dr);
    }
    for f in &g.boundary_faces {
        if bd.tags[f.index] == FaceTag::Inflow {
            let k = f.cell;
            let uf = bd.u_faces[f.index];
            conv += fl.boundary[f.index] * dot(v[k], [ub[k][0] - uf[0], ub[k][1] - uf[1]]);
        }
    }
    s.convective_forcing = dt * conv;

    // pressure work of the boundary extension
    let ext = integrated_divergence(g, &bd.u_cells, &bd.normal_speed);
    s.pressure_forcing = -dt
        * (0..n)
            .map(|k| pressure_at(rho[k], b[k], inp.phys, inp.reg) * ext[k])
            .sum::<f64>();

    if let Some(force) = inp.body_force {
        s.body_forcing = dt * area * (0..n).map(|k| dot(force.values[k], v[k])).sum::<f64>();
    }

    s.scale = 1.0 + e_old.total().max(e_new.total()) + s.magnitude();
    s
}

/// Bregman gap of `z^gamma / (gamma - 1)` at `a` around `r`.
pub fn convexity_gap(a: f64, r: f64, gamma: f64) -> f64 {
    (a.powf(gamma) - r.powf(gamma) - gamma * r.powf(gamma - 1.0) * (a - r)) / (gamma - 1.0)
}

/// Bregman gap of `z^2 / 2`.
pub fn quadratic_gap(a: f64, r: f64) -> f64 {
    0.5 * (a - r) * (a - r)
}

/// Mass `int c` of a field.
pub fn mass(grid: &Grid, c: &ScalarField) -> f64 {
    integrate(grid, c)
}
