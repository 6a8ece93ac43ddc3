//! Relative energy between two states and a log-linear growth fit.

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::grid::Grid;
use crate::solver::State;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RelativeEnergyReport {
    pub value: f64,
    /// `int rho |u - u_ref|^2 / 2`.
    pub kinetic_gap: f64,
    /// `int H(rho) - H(rho_ref) - H'(rho_ref)(rho - rho_ref)`.
    pub bregman_gap: f64,
    /// `int |b - b_ref|^2 / 2`.
    pub magnetic_gap: f64,
    pub fitted_gronwall_c: Option<f64>,
}

pub fn relative_energy(grid: &Grid, state: &State, reference: &State, gamma: f64) -> RelativeEnergyReport {
    let h = |r: f64| r.max(0.0).powf(gamma) / (gamma - 1.0);
    let dh = |r: f64| gamma * r.max(0.0).powf(gamma - 1.0) / (gamma - 1.0);
    let mut r = RelativeEnergyReport::default();
    for k in 0..grid.num_cells() {
        let (p, pr) = (state.rho.values[k], reference.rho.values[k]);
        let du = [
            state.u.values[k][0] - reference.u.values[k][0],
            state.u.values[k][1] - reference.u.values[k][1],
        ];
        r.kinetic_gap += 0.5 * p * (du[0] * du[0] + du[1] * du[1]);
        r.bregman_gap += h(p) - h(pr) - dh(pr) * (p - pr);
        let db = state.b.values[k] - reference.b.values[k];
        r.magnetic_gap += 0.5 * db * db;
    }
    let a = grid.cell_area();
    r.kinetic_gap *= a;
    r.bregman_gap *= a;
    r.magnetic_gap *= a;
    r.value = r.kinetic_gap + r.bregman_gap + r.magnetic_gap;
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallFit {
    /// Least-squares growth rate of `log(E + floor)`.
    pub c: f64,
    pub pass: bool,
    /// Largest `E(t) / ((E(0) + slack) exp(C (t - t0)))`.
    pub worst_ratio: f64,
}

/// Fits `E(t) ~ E(0) exp(C t)` and checks `E(t) <= (E(0) + slack) exp(C t)`.
pub fn gronwall_fit(times: &[f64], values: &[f64], floor: f64, slack: f64) -> Result<GronwallFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            what: "relative energy series",
            expected: times.len(),
            found: values.len(),
        });
    }
    if values.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "growth fit needs at least 3 samples, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidParameter("relative energy series must be nonnegative".into()));
    }
    if values.iter().all(|&v| v == 0.0) {
        return Ok(GronwallFit {
            c: 0.0,
            pass: true,
            worst_ratio: 0.0,
        });
    }
    let ys: Vec<f64> = values.iter().map(|v| (v + floor).ln()).collect();
    let n = times.len() as f64;
    let tm = times.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = times.iter().map(|t| (t - tm).powi(2)).sum();
    let sxy: f64 = times.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let c = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let base = values[0] + slack;
    let mut worst: f64 = 0.0;
    for (t, v) in times.iter().zip(values) {
        let bound = base * (c * (t - times[0])).exp();
        worst = worst.max(if bound > 0.0 { v / bound } else { f64::INFINITY });
    }
    Ok(GronwallFit {
        c,
        pass: worst <= 1.0,
        worst_ratio: worst,
    })
}

/// Block average of a fine field onto a grid coarser by `factor` in each direction.
pub fn restrict(fine: &ScalarField, factor: usize) -> ScalarField {
    let (nx, ny) = (fine.nx / factor, fine.ny / factor);
    let mut values = vec![0.0; nx * ny];
    for j in 0..fine.ny {
        for i in 0..fine.nx {
            values[(j / factor) * nx + i / factor] += fine.values[j * fine.nx + i];
        }
    }
    let w = 1.0 / (factor * factor) as f64;
    ScalarField {
        nx,
        ny,
        values: values.into_iter().map(|v| v * w).collect(),
    }
}

pub fn restrict_state(fine: &State, factor: usize) -> State {
    let ux = restrict(&fine.u.component(0), factor);
    let uy = restrict(&fine.u.component(1), factor);
    State {
        time: fine.time,
        rho: restrict(&fine.rho, factor),
        b: restrict(&fine.b, factor),
        u: crate::fields::VectorField {
            nx: ux.nx,
            ny: ux.ny,
            values: ux.values.iter().zip(&uy.values).map(|(&a, &b)| [a, b]).collect(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::VectorField;

    fn state(g: &Grid, rho: f64, b: f64) -> State {
        State {
            time: 0.0,
            rho: ScalarField::constant(g, rho),
            b: ScalarField::constant(g, b),
            u: VectorField::constant(g, [0.2, 0.1]),
        }
    }

    #[test]
    fn examples() {
        let g = Grid::build(4, 4, 1.0, 1.0).unwrap();
        let a = state(&g, 1.0, 1.0);
        assert_eq!(relative_energy(&g, &a, &a, 2.0).value, 0.0);
        let r = relative_energy(&g, &a, &state(&g, 2.0, 1.0), 2.0);
        assert!((r.bregman_gap - 1.0).abs() < 1e-14 && (r.value - 1.0).abs() < 1e-14);
        let r = relative_energy(&g, &a, &state(&g, 1.0, 1.5), 2.0);
        assert!((r.magnetic_gap - 0.125).abs() < 1e-15);
    }

    #[test]
    fn fit_examples() {
        let t: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let f = gronwall_fit(&t, &vec![0.0; 11], 1e-30, 0.0).unwrap();
        assert_eq!(f.c, 0.0);
        assert!(f.pass);
        let e: Vec<f64> = t.iter().map(|t| 0.3 * (2.0 * t).exp()).collect();
        let f = gronwall_fit(&t, &e, 0.0, 1e-12).unwrap();
        assert!((f.c - 2.0).abs() < 1e-6);
        assert!(f.pass);
        assert!(gronwall_fit(&t[..2], &e[..2], 0.0, 0.0).is_err());
    }

    #[test]
    fn restriction_averages_blocks() {
        let g = Grid::build(4, 4, 1.0, 1.0).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| x + 2.0 * y);
        let c = restrict(&f, 2);
        let gc = Grid::build(2, 2, 1.0, 1.0).unwrap();
        let exact = ScalarField::from_fn(&gc, |x, y| x + 2.0 * y);
        for (a, b) in c.values.iter().zip(&exact.values) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
