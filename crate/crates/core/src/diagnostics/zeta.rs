//! The ratio `zeta = b / rho` and its weighted distance between runs.

use crate::fields::{BoundaryData, ScalarField};
use crate::grid::{FaceTag, Grid};
use crate::params::Domination;
use crate::solver::{State, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct ZetaField {
    pub values: Vec<f64>,
    /// Per boundary face: inflow data ratio on inflow faces, the adjacent
    /// cell value elsewhere.
    pub boundary: Vec<f64>,
}

pub fn zeta_value(rho: f64, b: f64, dom: &Domination) -> f64 {
    if rho > 0.0 {
        b / rho
    } else {
        dom.midpoint()
    }
}

pub fn zeta(grid: &Grid, bd: &BoundaryData, rho: &ScalarField, b: &ScalarField, dom: &Domination) -> ZetaField {
    let values: Vec<f64> = rho
        .values
        .iter()
        .zip(&b.values)
        .map(|(&r, &m)| zeta_value(r, m, dom))
        .collect();
    let boundary = grid
        .boundary_faces
        .iter()
        .map(|f| match bd.tags[f.index] {
            FaceTag::Inflow => zeta_value(bd.rho_b[f.index], bd.b_b[f.index], dom),
            _ => values[f.cell],
        })
        .collect();
    ZetaField { values, boundary }
}

/// `int rho |zeta - zeta_ref|^2` with `rho` and `zeta` from `state`.
pub fn zeta_gap(grid: &Grid, bd: &BoundaryData, dom: &Domination, state: &State, reference: &State) -> f64 {
    let z = zeta(grid, bd, &state.rho, &state.b, dom);
    let zr = zeta(grid, bd, &reference.rho, &reference.b, dom);
    let s: f64 = (0..grid.num_cells())
        .map(|k| state.rho.values[k] * (z.values[k] - zr.values[k]).powi(2))
        .sum();
    s * grid.cell_area()
}

/// `sum_outflow |f| (u_b . n) rho |zeta - zeta_ref|^2` with cell traces.
pub fn outflow_zeta_gap(grid: &Grid, bd: &BoundaryData, dom: &Domination, state: &State, reference: &State) -> f64 {
    let z = zeta(grid, bd, &state.rho, &state.b, dom);
    let zr = zeta(grid, bd, &reference.rho, &reference.b, dom);
    grid.boundary_faces
        .iter()
        .filter(|f| bd.tags[f.index] == FaceTag::Outflow)
        .map(|f| {
            let k = f.cell;
            f.length * bd.normal_speed[f.index] * state.rho.values[k] * (z.values[k] - zr.values[k]).powi(2)
        })
        .sum()
}

/// Interior gap at the final paired time plus the time-integrated outflow gap
/// over paired steps.
pub fn trajectory_zeta_gap(grid: &Grid, bd: &BoundaryData, dom: &Domination, run: &Trajectory, reference: &Trajectory) -> f64 {
    let n = run.states.len().min(reference.states.len());
    if n == 0 {
        return 0.0;
    }
    let mut total = zeta_gap(grid, bd, dom, &run.states[n - 1], &reference.states[n - 1]);
    for i in 1..n {
        let dt = run.states[i].time - run.states[i - 1].time;
        total += dt * outflow_zeta_gap(grid, bd, dom, &run.states[i], &reference.states[i]);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::VectorField;

    #[test]
    fn ratio_and_vacuum() {
        let g0 = Grid::build(3, 3, 1.0, 1.0).unwrap();
        let (g, bd) = BoundaryData::setup(&g0, |_, _| [1.0, 0.0], |_, _| 1.0, |_, _| 1.0);
        let dom = Domination { lower: 0.5, upper: 2.0 };
        let z = zeta(&g, &bd, &ScalarField::constant(&g, 2.0), &ScalarField::constant(&g, 1.0), &dom);
        assert!(z.values.iter().all(|&v| v == 0.5));
        let mut rho = ScalarField::constant(&g, 1.0);
        rho.values[4] = 0.0;
        let z = zeta(&g, &bd, &rho, &ScalarField::constant(&g, 1.0), &dom);
        assert_eq!(z.values[4], 1.25);
        let s = State {
            time: 0.0,
            rho,
            b: ScalarField::constant(&g, 1.0),
            u: VectorField::constant(&g, [1.0, 0.0]),
        };
        assert_eq!(zeta_gap(&g, &bd, &dom, &s, &s), 0.0);
    }
}
