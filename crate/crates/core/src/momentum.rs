//! Picard-linearized implicit momentum step.
//!
//! The unknowns are the cell velocities `u = v + u_b`; the deviation `v`
//! vanishes on every boundary face, which is where `u_b` enters. Per cell
//! and component the discrete balance reads
//!
//! ```text
//! |K| (rho u - rho_old u_old) / dt                    time
//! + sum_f F_f u_up                                   convection, F from (rho, u_guess)
//! + eps sum_f |f|/d (rho_L - rho_K) (u_L - u_K) / 2  eps grad rho . grad u
//! + mu sum_f |f|/d (u_K - u_L)                       shear part
//! - (mu + lambda) |K| grad_h div_h u                 bulk part
//! = - |K| grad_h P + |K| f
//! ```
//!
//! where `grad_h` is minus the adjoint of the face-averaged divergence
//! `div_h`. That pairing, the upwind momentum flux built from the same mass
//! fluxes as the transport step, and the centered form of the eps term are
//! what make the discrete kinetic energy balance close.

use crate::error::{Error, Result};
use crate::fields::{strain_and_div, BoundaryData, ScalarField, SymTensor, VectorField};
use crate::grid::{FaceTag, Grid};
use crate::linalg::{bicgstab, CsrMatrix, SolveStats, Triplets};
use crate::params::{PhysParams, RegParams};
use crate::transport::{mass_fluxes, MassFluxes};

/// `rho^gamma + b^2 / 2 + delta (rho + b)^beta` per cell.
pub fn total_pressure(rho: &ScalarField, b: &ScalarField, phys: &PhysParams, reg: &RegParams) -> ScalarField {
    rho.zip_map(b, |r, m| pressure_at(r, m, phys, reg))
}

pub fn pressure_at(rho: f64, b: f64, phys: &PhysParams, reg: &RegParams) -> f64 {
    let (r, m) = (rho.max(0.0), b.max(0.0));
    let mut p = r.powf(phys.gamma) + 0.5 * m * m;
    if reg.delta > 0.0 {
        p += reg.delta * (r + m).powf(reg.beta);
    }
    p
}

/// `mu (grad u + grad u^T) + lambda div u I` from the centered stencils.
pub fn viscous_stress(grid: &Grid, u: &VectorField, phys: &PhysParams) -> Vec<SymTensor> {
    let (strain, div) = strain_and_div(grid, u);
    strain
        .iter()
        .zip(&div.values)
        .map(|(e, d)| {
            [
                2.0 * phys.mu * e[0] + phys.lambda * d,
                2.0 * phys.mu * e[1],
                2.0 * phys.mu * e[2] + phys.lambda * d,
            ]
        })
        .collect()
}

/// Coefficients of `|M| div_h` on the unknowns `2k + c`, one row per cell,
/// for fields that vanish on boundary faces.
pub fn divergence_rows(grid: &Grid) -> Vec<Vec<(usize, f64)>> {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); grid.num_cells()];
    for f in &grid.interior_faces {
        for c in 0..2 {
            let w = 0.5 * f.length * f.normal[c];
            if w == 0.0 {
                continue;
            }
            rows[f.left].push((2 * f.left + c, w));
            rows[f.left].push((2 * f.right + c, w));
            rows[f.right].push((2 * f.right + c, -w));
            rows[f.right].push((2 * f.left + c, -w));
        }
    }
    for row in rows.iter_mut() {
        row.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for &(i, v) in row.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        *row = merged;
    }
    rows
}

/// `|M| div_h u` with the given outward normal velocities on boundary faces.
pub fn integrated_divergence(grid: &Grid, u: &VectorField, boundary_normal: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; grid.num_cells()];
    for f in &grid.interior_faces {
        let a = u.values[f.left];
        let b = u.values[f.right];
        let q = 0.5 * f.length * ((a[0] + b[0]) * f.normal[0] + (a[1] + b[1]) * f.normal[1]);
        d[f.left] += q;
        d[f.right] -= q;
    }
    for b in &grid.boundary_faces {
        d[b.cell] += b.length * boundary_normal[b.index];
    }
    d
}

/// A cell field together with its boundary face values.
#[derive(Debug, Clone, Copy)]
pub struct WithTrace<'a> {
    pub cells: &'a VectorField,
    pub faces: &'a [[f64; 2]],
    /// Outward normal component used by the divergence on each face.
    pub normal: &'a [f64],
}

/// Compact shear form `sum_f |f|/d (u_L - u_K).(w_L - w_K)` with half
/// distances on boundary faces.
pub fn shear_form(grid: &Grid, u: WithTrace, w: WithTrace) -> f64 {
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let diff = |a: [f64; 2], b: [f64; 2]| [a[0] - b[0], a[1] - b[1]];
    let mut s = 0.0;
    for f in &grid.interior_faces {
        let (l, r) = (f.left, f.right);
        s += f.length / f.distance
            * dot(
                diff(u.cells.values[r], u.cells.values[l]),
                diff(w.cells.values[r], w.cells.values[l]),
            );
    }
    for b in &grid.boundary_faces {
        let k = b.cell;
        s += b.length / b.half_distance
            * dot(
                diff(u.faces[b.index], u.cells.values[k]),
                diff(w.faces[b.index], w.cells.values[k]),
            );
    }
    s
}

/// Discrete `mu int grad u : grad w + (mu + lambda) int div u div w`, the
/// bilinear form behind the viscous operator.
pub fn viscous_form(grid: &Grid, phys: &PhysParams, u: WithTrace, w: WithTrace) -> f64 {
    let du = integrated_divergence(grid, u.cells, u.normal);
    let dw = integrated_divergence(grid, w.cells, w.normal);
    let area = grid.cell_area();
    let bulk: f64 = du.iter().zip(&dw).map(|(a, b)| a * b).sum::<f64>() / area;
    phys.mu * shear_form(grid, u, w) + (phys.mu + phys.lambda) * bulk
}

/// Gauss cell gradient `g[a][b] = d u_a / d x_b` from face averages and
/// boundary face values.
pub fn gauss_gradient(grid: &Grid, u: &VectorField, faces: &[[f64; 2]]) -> Vec<[[f64; 2]; 2]> {
    let mut g = vec![[[0.0; 2]; 2]; grid.num_cells()];
    for f in &grid.interior_faces {
        let a = u.values[f.left];
        let b = u.values[f.right];
        for i in 0..2 {
            let m = 0.5 * (a[i] + b[i]) * f.length;
            for j in 0..2 {
                g[f.left][i][j] += m * f.normal[j];
                g[f.right][i][j] -= m * f.normal[j];
            }
        }
    }
    for b in &grid.boundary_faces {
        for i in 0..2 {
            for j in 0..2 {
                g[b.cell][i][j] += faces[b.index][i] * b.length * b.normal[j];
            }
        }
    }
    let area = grid.cell_area();
    for t in g.iter_mut() {
        for row in t.iter_mut() {
            for e in row.iter_mut() {
                *e /= area;
            }
        }
    }
    g
}

#[derive(Debug, Clone, Copy)]
pub struct MomentumStep<'a> {
    pub grid: &'a Grid,
    pub boundary: &'a BoundaryData,
    pub rho_old: &'a ScalarField,
    pub u_old: &'a VectorField,
    /// Density and magnetic field at the new time level.
    pub rho: &'a ScalarField,
    pub b: &'a ScalarField,
    /// Velocity that produced `rho`; sets the mass fluxes.
    pub u_guess: &'a VectorField,
    pub dt: f64,
    pub phys: &'a PhysParams,
    pub reg: &'a RegParams,
    /// Optional body force per unit volume.
    pub body_force: Option<&'a VectorField>,
}

#[derive(Debug, Clone)]
pub struct MomentumSolution {
    pub u: VectorField,
    pub stats: SolveStats,
}

pub fn assemble(step: &MomentumStep) -> (CsrMatrix, Vec<f64>) {
    let g = step.grid;
    let bd = step.boundary;
    let n = g.num_cells();
    let area = g.cell_area();
    let (mu, bulk) = (step.phys.mu, step.phys.mu + step.phys.lambda);
    let eps = step.reg.eps;
    let mut t = Triplets::new(2 * n);
    let mut rhs = vec![0.0; 2 * n];
    let fluxes: MassFluxes = mass_fluxes(g, bd, step.rho, step.u_guess, &bd.rho_b);

    for k in 0..n {
        for c in 0..2 {
            let i = 2 * k + c;
            t.add(i, i, area * step.rho.values[k] / step.dt);
            rhs[i] += area * step.rho_old.values[k] * step.u_old.values[k][c] / step.dt;
            if let Some(f) = step.body_force {
                rhs[i] += area * f.values[k][c];
            }
        }
    }

    for (fi, f) in g.interior_faces.iter().enumerate() {
        let (l, r) = (f.left, f.right);
        let flux = fluxes.interior[fi];
        let q = eps * f.length / f.distance * (step.rho.values[r] - step.rho.values[l]);
        let s = mu * f.length / f.distance;
        for c in 0..2 {
            let (il, ir) = (2 * l + c, 2 * r + c);
            if flux >= 0.0 {
                t.add(il, il, flux);
                t.add(ir, il, -flux);
                t.add(il, ir, 0.0);
            } else {
                t.add(il, ir, flux);
                t.add(ir, ir, -flux);
                t.add(ir, il, 0.0);
            }
            t.add(il, ir, 0.5 * q - s);
            t.add(il, il, -0.5 * q + s);
            t.add(ir, ir, 0.5 * q + s);
            t.add(ir, il, -0.5 * q - s);
        }
    }

    for b in &g.boundary_faces {
        let k = b.cell;
        let flux = fluxes.boundary[b.index];
        let s = mu * b.length / b.half_distance;
        let uf = bd.u_faces[b.index];
        for c in 0..2 {
            let i = 2 * k + c;
            match bd.tags[b.index] {
                FaceTag::Outflow => t.add(i, i, flux),
                FaceTag::Inflow => rhs[i] -= flux * uf[c],
                FaceTag::Characteristic => {}
            }
            t.add(i, i, s);
            rhs[i] += s * uf[c];
        }
    }

    let p = total_pressure(step.rho, step.b, step.phys, step.reg);
    let rows = divergence_rows(g);
    let mut boundary_div = vec![0.0; n];
    for b in &g.boundary_faces {
        boundary_div[b.cell] += b.length * bd.normal_speed[b.index];
    }
    for (m, row) in rows.iter().enumerate() {
        for &(a, ca) in row {
            rhs[a] += p.values[m] * ca;
            rhs[a] -= bulk / area * ca * boundary_div[m];
            for &(bcol, cb) in row {
                t.add(a, bcol, bulk / area * ca * cb);
            }
        }
    }
    (t.into_csr(), rhs)
}

pub fn solve_momentum(step: &MomentumStep) -> Result<MomentumSolution> {
    if !(step.dt > 0.0) {
        return Err(Error::InvalidParameter(format!("momentum step needs dt > 0, got {}", step.dt)));
    }
    if !step.u_guess.is_finite() || !step.rho.is_finite() || !step.b.is_finite() {
        return Err(Error::NonFinite("momentum input"));
    }
    let (a, rhs) = assemble(step);
    let guess: Vec<f64> = step.u_guess.values.iter().flat_map(|v| [v[0], v[1]]).collect();
    let (x, stats) = bicgstab(&a, &rhs, Some(&guess), step.reg.tol_lin, step.reg.max_lin)?;
    let u = VectorField {
        nx: step.grid.nx,
        ny: step.grid.ny,
        values: x.chunks(2).map(|p| [p[0], p[1]]).collect(),
    };
    if !u.is_finite() {
        return Err(Error::NonFinite("momentum solution"));
    }
    Ok(MomentumSolution { u, stats })
}
