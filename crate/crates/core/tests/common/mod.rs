#![allow(dead_code)]

pub mod manufactured;
pub mod oracle;

use mhd_core::expr::{ScalarExpr, VectorExpr};
use mhd_core::fields::{BoundaryData, ScalarField, VectorField};
use mhd_core::grid::Grid;
use mhd_core::params::{Domination, PhysParams, RegParams, Tolerances};
use mhd_core::solver::{Problem, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub struct Setup {
    pub problem: Problem,
    pub initial: State,
}

pub fn phys(gamma: f64, mu: f64, lambda: f64) -> PhysParams {
    PhysParams { gamma, mu, lambda }
}

pub fn reg(eps: f64, delta: f64) -> RegParams {
    RegParams {
        eps,
        delta,
        ..RegParams::default()
    }
}

pub fn dominance() -> Domination {
    Domination { lower: 0.5, upper: 2.0 }
}

/// Builds a problem on the unit square from closed-form data.
#[allow(clippy::too_many_arguments)]
pub fn build(
    n: usize,
    u_b: impl Fn(f64, f64) -> [f64; 2],
    rho_b: impl Fn(f64, f64) -> f64,
    b_b: impl Fn(f64, f64) -> f64,
    rho0: impl Fn(f64, f64) -> f64,
    b0: impl Fn(f64, f64) -> f64,
    u0: impl Fn(f64, f64) -> [f64; 2],
    phys: PhysParams,
    reg: RegParams,
) -> Setup {
    let g0 = Grid::build(n, n, 1.0, 1.0).unwrap();
    let (grid, boundary) = BoundaryData::setup(&g0, u_b, rho_b, b_b);
    let initial = State {
        time: 0.0,
        rho: ScalarField::from_fn(&grid, rho0),
        b: ScalarField::from_fn(&grid, b0),
        u: VectorField::from_fn(&grid, u0),
    };
    Setup {
        problem: Problem {
            grid,
            boundary,
            phys,
            reg,
            domination: dominance(),
            tol: Tolerances::default(),
        },
        initial,
    }
}

/// Divergence-free boundary velocity: a swirl plus a uniform drift.
pub fn random_velocity(rng: &mut ChaCha8Rng) -> VectorExpr {
    let (ux, uy) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    VectorExpr::Stream(ScalarExpr::Sum(vec![
        ScalarExpr::Trig {
            c0: 0.0,
            amp: rng.gen_range(0.02..0.08),
            kx: PI * rng.gen_range(1..3) as f64,
            ky: PI * rng.gen_range(1..3) as f64,
            px: rng.gen_range(0.0..PI),
            py: rng.gen_range(0.0..PI),
        },
        ScalarExpr::Affine {
            c0: 0.0,
            cx: -uy,
            cy: ux,
        },
    ]))
}

/// Smooth scalar with values in `[0.85, 1.2]`.
pub fn random_scalar(rng: &mut ChaCha8Rng) -> ScalarExpr {
    ScalarExpr::Trig {
        c0: rng.gen_range(0.95..1.1),
        amp: rng.gen_range(-0.1..0.1),
        kx: PI * rng.gen_range(1..4) as f64,
        ky: PI * rng.gen_range(1..4) as f64,
        px: rng.gen_range(0.0..PI),
        py: rng.gen_range(0.0..PI),
    }
}

/// One member of the randomized smooth suite. Density and field lie in
/// `[0.8, 1.25]`, so `b / rho` stays in `[0.5, 2]`.
pub fn random_setup(seed: u64, n: usize) -> Setup {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ub = random_velocity(&mut rng);
    let rho0 = random_scalar(&mut rng);
    let b0 = random_scalar(&mut rng);
    let rho_b = rng.gen_range(0.8..1.25);
    let b_b = rng.gen_range(0.8..1.25);
    let pert = rng.gen_range(-0.2..0.2);
    let phys = phys(rng.gen_range(1.4..2.0), rng.gen_range(0.2..1.0), 0.0);
    let reg = reg(rng.gen_range(1e-3..1e-2), 0.01);
    let ubc = ub.clone();
    build(
        n,
        move |x, y| ub.value(x, y),
        move |_, _| rho_b,
        move |_, _| b_b,
        move |x, y| rho0.value(x, y),
        move |x, y| b0.value(x, y),
        move |x, y| {
            let u = ubc.value(x, y);
            let s = pert * (PI * x).sin() * (PI * y).sin();
            [u[0] + s, u[1] - s]
        },
        phys,
        reg,
    )
}
