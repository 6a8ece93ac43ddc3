//! Space-time weak-form residuals against analytic test functions.
//!
//! Space integrals use the cell-center rule, boundary integrals the face
//! midpoints, and time integrals the end-of-step values that the implicit
//! scheme is built on.

use crate::error::{Error, Result};
use crate::fields::{gradient, velocity_gradient, BoundaryData, ScalarField};
use crate::grid::{FaceTag, Grid};
use crate::momentum::{total_pressure, viscous_stress};
use crate::params::{PhysParams, RegParams};
use crate::solver::{State, Trajectory};

pub trait ScalarTest {
    fn value(&self, t: f64, x: f64, y: f64) -> f64;
    fn gradient(&self, t: f64, x: f64, y: f64) -> [f64; 2];
    fn time_derivative(&self, t: f64, x: f64, y: f64) -> f64;
}

pub trait VectorTest {
    fn value(&self, t: f64, x: f64, y: f64) -> [f64; 2];
    /// `g[a][b] = d phi_a / d x_b`.
    fn gradient(&self, t: f64, x: f64, y: f64) -> [[f64; 2]; 2];
    fn time_derivative(&self, t: f64, x: f64, y: f64) -> [f64; 2];
    /// Closed bounding box `[xmin, xmax, ymin, ymax]` of the support.
    fn support(&self) -> [f64; 4];
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantTest(pub f64);

impl ScalarTest for ConstantTest {
    fn value(&self, _t: f64, _x: f64, _y: f64) -> f64 {
        self.0
    }
    fn gradient(&self, _t: f64, _x: f64, _y: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn time_derivative(&self, _t: f64, _x: f64, _y: f64) -> f64 {
        0.0
    }
}

/// Smooth bump `(1 + rate t) exp(1 - 1 / (1 - r^2 / R^2))`, zero for `r >= R`.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
    pub rate: f64,
}

impl Bump {
    fn shape(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let r2 = self.radius * self.radius;
        let s = (dx * dx + dy * dy) / r2;
        if s >= 1.0 {
            return (0.0, [0.0, 0.0]);
        }
        let f = (1.0 - 1.0 / (1.0 - s)).exp();
        let ds = -f / ((1.0 - s) * (1.0 - s));
        (f, [ds * 2.0 * dx / r2, ds * 2.0 * dy / r2])
    }
}

impl ScalarTest for Bump {
    fn value(&self, t: f64, x: f64, y: f64) -> f64 {
        (1.0 + self.rate * t) * self.shape(x, y).0
    }
    fn gradient(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let g = self.shape(x, y).1;
        [(1.0 + self.rate * t) * g[0], (1.0 + self.rate * t) * g[1]]
    }
    fn time_derivative(&self, _t: f64, x: f64, y: f64) -> f64 {
        self.rate * self.shape(x, y).0
    }
}

/// A bump times a fixed direction.
#[derive(Debug, Clone, Copy)]
pub struct VectorBump {
    pub bump: Bump,
    pub direction: [f64; 2],
}

impl VectorTest for VectorBump {
    fn value(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let f = self.bump.value(t, x, y);
        [f * self.direction[0], f * self.direction[1]]
    }
    fn gradient(&self, t: f64, x: f64, y: f64) -> [[f64; 2]; 2] {
        let g = ScalarTest::gradient(&self.bump, t, x, y);
        let d = self.direction;
        [[d[0] * g[0], d[0] * g[1]], [d[1] * g[0], d[1] * g[1]]]
    }
    fn time_derivative(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let f = self.bump.time_derivative(t, x, y);
        [f * self.direction[0], f * self.direction[1]]
    }
    fn support(&self) -> [f64; 4] {
        let (c, r) = (self.bump.center, self.bump.radius);
        [c[0] - r, c[0] + r, c[1] - r, c[1] + r]
    }
}

fn scalar_residual(
    grid: &Grid,
    bd: &BoundaryData,
    traj: &Trajectory,
    eps: f64,
    field: fn(&State) -> &ScalarField,
    c_b: &[f64],
    phi: &dyn ScalarTest,
) -> f64 {
    let area = grid.cell_area();
    let centers = &grid.cell_centers;
    let pair = |n: usize, t: f64| -> f64 {
        let c = field(&traj.states[n]);
        centers
            .iter()
            .enumerate()
            .map(|(k, x)| c.values[k] * phi.value(t, x[0], x[1]))
            .sum::<f64>()
            * area
    };
    let last = traj.states.len() - 1;
    let mut r = pair(last, traj.states[last].time) - pair(0, traj.states[0].time);
    for n in 1..=last {
        let s = &traj.states[n];
        let dt = s.time - traj.states[n - 1].time;
        let t = s.time;
        let c = field(&traj.states[n]);
        let grad_c = gradient(grid, c);
        let mut vol = 0.0;
        for (k, x) in centers.iter().enumerate() {
            let g = phi.gradient(t, x[0], x[1]);
            let u = s.u.values[k];
            let gc = grad_c.values[k];
            vol += c.values[k] * phi.time_derivative(t, x[0], x[1]) + c.values[k] * (u[0] * g[0] + u[1] * g[1])
                - eps * (gc[0] * g[0] + gc[1] * g[1]);
        }
        let mut bnd = 0.0;
        for f in &grid.boundary_faces {
            let trace = match bd.tags[f.index] {
                FaceTag::Inflow => c_b[f.index],
                FaceTag::Outflow => c.values[f.cell],
                FaceTag::Characteristic => continue,
            };
            bnd += f.length * bd.normal_speed[f.index] * trace * phi.value(t, f.midpoint[0], f.midpoint[1]);
        }
        r += dt * (bnd - area * vol);
    }
    r.abs()
}

/// Residual of the weak continuity equation over the whole trajectory.
pub fn weak_residual_continuity(grid: &Grid, bd: &BoundaryData, reg: &RegParams, traj: &Trajectory, phi: &dyn ScalarTest) -> f64 {
    scalar_residual(grid, bd, traj, reg.eps, |s| &s.rho, &bd.rho_b, phi)
}

/// Residual of the weak magnetic transport equation.
pub fn weak_residual_magnetic(grid: &Grid, bd: &BoundaryData, reg: &RegParams, traj: &Trajectory, phi: &dyn ScalarTest) -> f64 {
    scalar_residual(grid, bd, traj, reg.eps, |s| &s.b, &bd.b_b, phi)
}

/// Residual of the weak momentum balance. The test function must be
/// supported strictly inside the domain.
pub fn weak_residual_momentum(
    grid: &Grid,
    phys: &PhysParams,
    reg: &RegParams,
    traj: &Trajectory,
    phi: &dyn VectorTest,
) -> Result<f64> {
    let s = phi.support();
    if !(s[0] > 0.0 && s[1] < grid.lx && s[2] > 0.0 && s[3] < grid.ly) {
        return Err(Error::InvalidParameter(format!(
            "momentum test function support [{}, {}] x [{}, {}] is not inside the domain",
            s[0], s[1], s[2], s[3]
        )));
    }
    let area = grid.cell_area();
    let centers = &grid.cell_centers;
    let momentum = |n: usize| -> f64 {
        let st = &traj.states[n];
        centers
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let p = phi.value(st.time, x[0], x[1]);
                st.rho.values[k] * (st.u.values[k][0] * p[0] + st.u.values[k][1] * p[1])
            })
            .sum::<f64>()
            * area
    };
    let last = traj.states.len() - 1;
    let mut r = momentum(last) - momentum(0);
    for n in 1..=last {
        let st = &traj.states[n];
        let dt = st.time - traj.states[n - 1].time;
        let t = st.time;
        let p = total_pressure(&st.rho, &st.b, phys, reg);
        let stress = viscous_stress(grid, &st.u, phys);
        let grad_u = velocity_gradient(grid, &st.u);
        let grad_rho = gradient(grid, &st.rho);
        let mut vol = 0.0;
        for (k, x) in centers.iter().enumerate() {
            let g = phi.gradient(t, x[0], x[1]);
            let v = phi.value(t, x[0], x[1]);
            let dtp = phi.time_derivative(t, x[0], x[1]);
            let u = st.u.values[k];
            let rho = st.rho.values[k];
            let sk = stress[k];
            let sm = [[sk[0], sk[1]], [sk[1], sk[2]]];
            let mut conv = 0.0;
            let mut visc = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    conv += u[a] * u[b] * g[a][b];
                    visc += sm[a][b] * g[a][b];
                }
            }
            let gr = grad_rho.values[k];
            let gu = grad_u[k];
            let corr: f64 = (0..2).map(|a| v[a] * (gr[0] * gu[a][0] + gr[1] * gu[a][1])).sum();
            vol += rho * (u[0] * dtp[0] + u[1] * dtp[1]) + rho * conv + p.values[k] * (g[0][0] + g[1][1])
                - visc
                - reg.eps * corr;
        }
        r -= dt * area * vol;
    }
    Ok(r.abs())
}
