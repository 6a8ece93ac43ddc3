//! Manufactured steady problems and their discretization errors.

use std::f64::consts::PI;

use mhd_core::fields::{BoundaryData, ScalarField, VectorField};
use mhd_core::grid::Grid;
use mhd_core::momentum::{solve_momentum, MomentumStep};
use mhd_core::params::{PhysParams, RegParams};
use mhd_core::transport::{advance_scalar, TransportProblem};

/// Effectively steady: one backward-Euler step of this length.
const STEADY_DT: f64 = 1e10;

pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Cell-average `L^1` error.
fn l1(grid: &Grid, a: &[f64], exact: impl Fn(f64, f64) -> f64) -> f64 {
    grid.cell_centers
        .iter()
        .zip(a)
        .map(|(c, v)| (v - exact(c[0], c[1])).abs())
        .sum::<f64>()
        * grid.cell_area()
}

/// Steady `div(c u) - eps lap c = s` with a constant stream entering
/// through the left and bottom edges. The solution has zero normal
/// derivative on every edge, so it satisfies both the inflow flux condition
/// with `c_b = c` and the no-diffusive-flux outflow condition.
pub fn transport_errors(sizes: &[usize]) -> Vec<f64> {
    let u = [1.0, 0.5];
    let eps = 0.01;
    let exact = |x: f64, y: f64| 1.0 + 0.5 * (PI * x).cos() * (PI * y).cos();
    let source = |x: f64, y: f64| {
        let dx = -0.5 * PI * (PI * x).sin() * (PI * y).cos();
        let dy = -0.5 * PI * (PI * x).cos() * (PI * y).sin();
        let lap = -2.0 * PI * PI * 0.5 * (PI * x).cos() * (PI * y).cos();
        u[0] * dx + u[1] * dy - eps * lap
    };
    sizes
        .iter()
        .map(|&n| {
            let g0 = Grid::build(n, n, 1.0, 1.0).unwrap();
            let (g, bd) = BoundaryData::setup(&g0, |_, _| u, exact, exact);
            let c_old = ScalarField::from_fn(&g, exact);
            let s = ScalarField::from_fn(&g, source);
            let vel = VectorField::constant(&g, u);
            let p = TransportProblem {
                grid: &g,
                boundary: &bd,
                c_old: &c_old,
                velocity: &vel,
                c_b: &bd.rho_b,
                eps,
                dt: STEADY_DT,
                source: Some(&s),
            };
            let c = advance_scalar(&p, 1e-13, 5000, 1e-12).unwrap().c;
            l1(&g, &c.values, exact)
        })
        .collect()
}

/// `-mu lap u - (mu + lambda) grad div u = f` with `u = 0` on the walls.
pub fn momentum_errors(sizes: &[usize]) -> Vec<f64> {
    let phys = PhysParams {
        gamma: 1.4,
        mu: 0.7,
        lambda: 0.3,
    };
    let reg = RegParams {
        eps: 0.0,
        delta: 0.0,
        tol_lin: 1e-13,
        max_lin: 20000,
        ..RegParams::default()
    };
    let exact = |x: f64, y: f64| [(PI * x).sin() * (PI * y).sin(), (PI * x).sin() * (2.0 * PI * y).sin()];
    let force = |x: f64, y: f64| {
        let (sx, cx) = ((PI * x).sin(), (PI * x).cos());
        let (sy, cy) = ((PI * y).sin(), (PI * y).cos());
        let (s2y, c2y) = ((2.0 * PI * y).sin(), (2.0 * PI * y).cos());
        let lap = [-2.0 * PI * PI * sx * sy, -5.0 * PI * PI * sx * s2y];
        // div u = pi cx sy + 2 pi sx c2y
        let grad_div = [
            -PI * PI * sx * sy + 2.0 * PI * PI * cx * c2y,
            PI * PI * cx * cy - 4.0 * PI * PI * sx * s2y,
        ];
        let b = phys.mu + phys.lambda;
        [-phys.mu * lap[0] - b * grad_div[0], -phys.mu * lap[1] - b * grad_div[1]]
    };
    sizes
        .iter()
        .map(|&n| {
            let g0 = Grid::build(n, n, 1.0, 1.0).unwrap();
            let (g, bd) = BoundaryData::setup(&g0, |_, _| [0.0, 0.0], |_, _| 1.0, |_, _| 0.0);
            let one = ScalarField::constant(&g, 1.0);
            let zero = ScalarField::constant(&g, 0.0);
            let still = VectorField::constant(&g, [0.0, 0.0]);
            let u_old = VectorField::from_fn(&g, exact);
            let f = VectorField::from_fn(&g, force);
            let step = MomentumStep {
                grid: &g,
                boundary: &bd,
                rho_old: &one,
                u_old: &u_old,
                rho: &one,
                b: &zero,
                u_guess: &still,
                dt: STEADY_DT,
                phys: &phys,
                reg: &reg,
                body_force: Some(&f),
            };
            let u = solve_momentum(&step).unwrap().u;
            (0..2)
                .map(|c| {
                    let vals: Vec<f64> = u.values.iter().map(|v| v[c]).collect();
                    l1(&g, &vals, |x, y| exact(x, y)[c])
                })
                .sum()
        })
        .collect()
}

