//! Single transport and momentum steps against dense direct solves.
//!
//! The discrete balances are rewritten here cell by cell from the grid
//! geometry alone (no face lists, no assembly code from the library). Each
//! balance is affine in the unknowns, so probing it with unit vectors gives
//! the dense matrix, which nalgebra factorizes.

use mhd_core::expr::VectorExpr;
use mhd_core::fields::{ScalarField, VectorField};
use mhd_core::momentum::{solve_momentum, MomentumStep};
use mhd_core::params::{PhysParams, RegParams};
use mhd_core::transport::{advance_scalar, TransportProblem};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Problem data sampled independently of the library's boundary handling.
pub struct Data {
    pub n: usize,
    pub h: f64,
    pub u_b: VectorExpr,
    pub rho_b: f64,
    pub b_b: f64,
}

/// A face of cell `(i, j)`: the neighbour (if any), unit normal, midpoint.
pub struct Side {
    pub nbr: Option<usize>,
    pub normal: [f64; 2],
    pub mid: [f64; 2],
}

impl Data {
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn sides(&self, k: usize) -> Vec<Side> {
        let (n, h) = (self.n, self.h);
        let (i, j) = (k % n, k / n);
        let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
        vec![
            Side {
                nbr: (i + 1 < n).then(|| self.idx(i + 1, j)),
                normal: [1.0, 0.0],
                mid: [x + 0.5 * h, y],
            },
            Side {
                nbr: (i > 0).then(|| self.idx(i - 1, j)),
                normal: [-1.0, 0.0],
                mid: [x - 0.5 * h, y],
            },
            Side {
                nbr: (j + 1 < n).then(|| self.idx(i, j + 1)),
                normal: [0.0, 1.0],
                mid: [x, y + 0.5 * h],
            },
            Side {
                nbr: (j > 0).then(|| self.idx(i, j - 1)),
                normal: [0.0, -1.0],
                mid: [x, y - 0.5 * h],
            },
        ]
    }

    /// Largest `|u_b|` over cell centres and boundary midpoints.
    pub fn max_speed(&self) -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..self.n * self.n {
            let (i, j) = (k % self.n, k / self.n);
            let c = self.u_b.value((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h);
            m = m.max(c[0].hypot(c[1]));
            for s in self.sides(k).iter().filter(|s| s.nbr.is_none()) {
                let u = self.u_b.value(s.mid[0], s.mid[1]);
                m = m.max(u[0].hypot(u[1]));
            }
        }
        m
    }

    /// `u_b . n` on a boundary side, zero inside the characteristic band.
    pub fn normal_speed(&self, s: &Side) -> f64 {
        let u = self.u_b.value(s.mid[0], s.mid[1]);
        let g = u[0] * s.normal[0] + u[1] * s.normal[1];
        if g.abs() <= 1e-12 * self.max_speed() {
            0.0
        } else {
            g
        }
    }
}

pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Dense matrix and right-hand side of an affine residual `R(x) = A x - r`.
pub fn linearize(dim: usize, residual: impl Fn(&[f64]) -> Vec<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let zero = vec![0.0; dim];
    let r0 = residual(&zero);
    let mut a = DMatrix::zeros(dim, dim);
    let mut e = zero.clone();
    for j in 0..dim {
        e[j] = 1.0;
        let rj = residual(&e);
        for i in 0..dim {
            a[(i, j)] = rj[i] - r0[i];
        }
        e[j] = 0.0;
    }
    (a, DVector::from_iterator(dim, r0.iter().map(|v| -v)))
}

pub fn dense_solve(a: DMatrix<f64>, rhs: DVector<f64>) -> Vec<f64> {
    a.lu().solve(&rhs).expect("oracle matrix is regular").iter().copied().collect()
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub struct Random {
    pub data: Data,
    pub setup: super::Setup,
    pub rho_old: ScalarField,
    pub rho: ScalarField,
    pub b: ScalarField,
    pub u_old: VectorField,
    pub u: VectorField,
}

pub fn random_case(seed: u64, n: usize) -> Random {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u_b = super::random_velocity(&mut rng);
    let rho_b = rng.gen_range(0.8..1.25);
    let b_b = rng.gen_range(0.8..1.25);
    let ub = u_b.clone();
    let setup = super::build(
        n,
        move |x, y| ub.value(x, y),
        move |_, _| rho_b,
        move |_, _| b_b,
        |_, _| 1.0,
        |_, _| 1.0,
        |_, _| [0.0, 0.0],
        super::phys(rng.gen_range(1.3..2.0), rng.gen_range(0.1..1.0), rng.gen_range(-0.1..0.5)),
        super::reg(rng.gen_range(1e-3..5e-2), rng.gen_range(0.0..0.2)),
    );
    let g = &setup.problem.grid;
    let mut scalar = |lo: f64, hi: f64| {
        ScalarField::from_values(g, (0..n * n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
    };
    let rho_old = scalar(0.5, 1.5);
    let rho = scalar(0.5, 1.5);
    let b = scalar(0.5, 1.5);
    let mut vector = || {
        VectorField::from_values(
            g,
            (0..n * n)
                .map(|_| [rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)])
                .collect(),
        )
        .unwrap()
    };
    let u_old = vector();
    let u = vector();
    Random {
        data: Data {
            n,
            h: 1.0 / n as f64,
            u_b,
            rho_b,
            b_b,
        },
        setup,
        rho_old,
        rho,
        b,
        u_old,
        u,
    }
}

/// Backward-Euler upwind transport balance of one cell.
pub fn transport_residual(d: &Data, c_old: &[f64], u: &[[f64; 2]], c_b: f64, eps: f64, dt: f64, c: &[f64]) -> Vec<f64> {
    let area = d.h * d.h;
    (0..d.n * d.n)
        .map(|k| {
            let mut r = area * (c[k] - c_old[k]) / dt;
            for s in d.sides(k) {
                match s.nbr {
                    Some(l) => {
                        let w = 0.5 * dot([u[k][0] + u[l][0], u[k][1] + u[l][1]], s.normal);
                        r += d.h * w * if w >= 0.0 { c[k] } else { c[l] };
                        r += eps * (c[k] - c[l]);
                    }
                    None => {
                        let g = d.normal_speed(&s);
                        r += d.h * g * if g > 0.0 { c[k] } else { c_b };
                    }
                }
            }
            r
        })
        .collect()
}

/// Largest deviation of both transported scalars from the dense solve.
pub fn transport_error(seed: u64, n: usize) -> f64 {
    let mut worst = 0.0f64;
    let case = random_case(seed, n);
    let p = &case.setup.problem;
    let (eps, dt) = (p.reg.eps, 0.05);
    for (c_old, c_b, bd_c) in [
        (&case.rho_old, case.data.rho_b, &p.boundary.rho_b),
        (&case.b, case.data.b_b, &p.boundary.b_b),
    ] {
        let (a, rhs) = linearize(n * n, |c| transport_residual(&case.data, &c_old.values, &case.u.values, c_b, eps, dt, c));
        let oracle = dense_solve(a, rhs);
        let tp = TransportProblem {
            grid: &p.grid,
            boundary: &p.boundary,
            c_old,
            velocity: &case.u,
            c_b: bd_c,
            eps,
            dt,
            source: None,
        };
        let got = advance_scalar(&tp, 1e-14, 1000, 1e-12).unwrap();
        worst = worst.max(sup_diff(&got.c.values, &oracle));
    }
    worst
}

/// Picard-linearized momentum balance of one cell and component, unknowns
/// `u` interleaved as `2k + c`.
pub fn momentum_residual(case: &Random, phys: &PhysParams, reg: &RegParams, dt: f64, x: &[f64]) -> Vec<f64> {
    let d = &case.data;
    let cells = d.n * d.n;
    let area = d.h * d.h;
    let rho = &case.rho.values;
    let at = |k: usize| [x[2 * k], x[2 * k + 1]];
    let guess = &case.u.values;
    let pressure = |k: usize| {
        let (r, b) = (rho[k], case.b.values[k]);
        r.powf(phys.gamma) + 0.5 * b * b + reg.delta * (r + b).powf(reg.beta)
    };

    // |M| div_h u with face-averaged velocities and u_b . n on the boundary
    let div: Vec<f64> = (0..cells)
        .map(|m| {
            d.sides(m)
                .iter()
                .map(|s| match s.nbr {
                    Some(l) => 0.5 * d.h * dot([at(m)[0] + at(l)[0], at(m)[1] + at(l)[1]], s.normal),
                    None => d.h * d.normal_speed(s),
                })
                .sum()
        })
        .collect();
    let bulk_term: Vec<f64> = (0..cells)
        .map(|m| (phys.mu + phys.lambda) / area * div[m] - pressure(m))
        .collect();

    let mut out = vec![0.0; 2 * cells];
    for k in 0..cells {
        let uk = at(k);
        for c in 0..2 {
            let mut r = area * (rho[k] * uk[c] - case.rho_old.values[k] * case.u_old.values[k][c]) / dt;
            for s in d.sides(k) {
                match s.nbr {
                    Some(l) => {
                        let w = 0.5 * dot([guess[k][0] + guess[l][0], guess[k][1] + guess[l][1]], s.normal);
                        let flux = d.h * w * if w >= 0.0 { rho[k] } else { rho[l] };
                        r += flux * if flux >= 0.0 { uk[c] } else { at(l)[c] };
                        r += 0.5 * reg.eps * (rho[l] - rho[k]) * (at(l)[c] - uk[c]);
                        r += phys.mu * (uk[c] - at(l)[c]);
                        // this face enters div_h here with +n and at the neighbour with -n
                        r += 0.5 * d.h * s.normal[c] * (bulk_term[k] - bulk_term[l]);
                    }
                    None => {
                        let g = d.normal_speed(&s);
                        let ub = d.u_b.value(s.mid[0], s.mid[1]);
                        if g > 0.0 {
                            r += d.h * g * rho[k] * uk[c];
                        } else if g < 0.0 {
                            r += d.h * g * d.rho_b * ub[c];
                        }
                        r += phys.mu * d.h / (0.5 * d.h) * (uk[c] - ub[c]);
                    }
                }
            }
            out[2 * k + c] = r;
        }
    }
    out
}

/// Deviation of one linearized momentum solve from the dense solve.
pub fn momentum_error(seed: u64, n: usize) -> f64 {
    let case = random_case(seed, n);
    let p = &case.setup.problem;
    let dt = 0.05;
    let mut reg = p.reg;
    reg.tol_lin = 1e-14;
    reg.max_lin = 2000;
    let (a, rhs) = linearize(2 * n * n, |x| momentum_residual(&case, &p.phys, &reg, dt, x));
    let oracle = dense_solve(a, rhs);
    let step = MomentumStep {
        grid: &p.grid,
        boundary: &p.boundary,
        rho_old: &case.rho_old,
        u_old: &case.u_old,
        rho: &case.rho,
        b: &case.b,
        u_guess: &case.u,
        dt,
        phys: &p.phys,
        reg: &reg,
        body_force: None,
    };
    let got: Vec<f64> = solve_momentum(&step).unwrap().u.values.iter().flat_map(|v| [v[0], v[1]]).collect();
    sup_diff(&got, &oracle)
}
