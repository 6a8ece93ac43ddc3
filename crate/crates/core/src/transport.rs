//! Implicit upwind finite-volume step for `dc/dt + div(c u) = eps lap c`.
//!
//! The inflow Robin condition `eps dc/dn + (c_b - c)[u_b . n]^- = 0` is
//! absorbed into the boundary flux, which becomes `c_b (u_b . n)` on inflow
//! faces. Outflow faces carry the upwind cell value with no diffusive flux;
//! characteristic faces carry nothing. Interior faces use the average of the
//! two cell velocities and upwind the transported value, so the implicit
//! operator is an M-matrix for any `eps >= 0` and `dt > 0`.

use crate::error::{Error, Result};
use crate::fields::{extrema, BoundaryData, ScalarField, VectorField};
use crate::grid::{FaceTag, Grid, InteriorFace};
use crate::linalg::{bicgstab, CsrMatrix, SolveStats, Triplets};

#[derive(Debug, Clone, Copy)]
pub struct TransportProblem<'a> {
    pub grid: &'a Grid,
    pub boundary: &'a BoundaryData,
    pub c_old: &'a ScalarField,
    /// Full cell velocity `u` driving the transport.
    pub velocity: &'a VectorField,
    /// Inflow values indexed by boundary face id.
    pub c_b: &'a [f64],
    pub eps: f64,
    pub dt: f64,
    /// Optional volumetric source, used by manufactured-solution tests.
    pub source: Option<&'a ScalarField>,
}

#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub c: ScalarField,
    pub stats: SolveStats,
    /// `sum over inflow faces of |f| c_b (u_b . n)`, nonpositive.
    pub inflow_flux: f64,
    /// `sum over outflow faces of |f| c (u_b . n)`, nonnegative.
    pub outflow_flux: f64,
}

/// Normal velocity on an interior face, positive from `left` to `right`.
pub fn face_speed(u: &VectorField, f: &InteriorFace) -> f64 {
    let a = u.values[f.left];
    let b = u.values[f.right];
    0.5 * ((a[0] + b[0]) * f.normal[0] + (a[1] + b[1]) * f.normal[1])
}

/// Cell divergence from face fluxes: averaged velocities inside, `u_b . n` on
/// the boundary.
pub fn discrete_divergence(grid: &Grid, bd: &BoundaryData, u: &VectorField) -> ScalarField {
    let mut div = vec![0.0; grid.num_cells()];
    for f in &grid.interior_faces {
        let q = f.length * face_speed(u, f);
        div[f.left] += q;
        div[f.right] -= q;
    }
    for b in &grid.boundary_faces {
        div[b.cell] += b.length * bd.normal_speed[b.index];
    }
    let area = grid.cell_area();
    ScalarField {
        nx: grid.nx,
        ny: grid.ny,
        values: div.into_iter().map(|d| d / area).collect(),
    }
}

/// Convective face fluxes `|f| c_up (u . n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFluxes {
    /// Per interior face, positive from `left` to `right`.
    pub interior: Vec<f64>,
    /// Per boundary face, outward.
    pub boundary: Vec<f64>,
}

pub fn mass_fluxes(grid: &Grid, bd: &BoundaryData, c: &ScalarField, u: &VectorField, c_b: &[f64]) -> MassFluxes {
    let interior = grid
        .interior_faces
        .iter()
        .map(|f| {
            let w = face_speed(u, f);
            let up = if w >= 0.0 { c.values[f.left] } else { c.values[f.right] };
            f.length * w * up
        })
        .collect();
    let boundary = grid
        .boundary_faces
        .iter()
        .map(|b| {
            let g = bd.normal_speed[b.index];
            match bd.tags[b.index] {
                FaceTag::Inflow => b.length * c_b[b.index] * g,
                FaceTag::Outflow => b.length * c.values[b.cell] * g,
                FaceTag::Characteristic => 0.0,
            }
        })
        .collect();
    MassFluxes { interior, boundary }
}

pub fn assemble(p: &TransportProblem) -> (CsrMatrix, Vec<f64>) {
    let g = p.grid;
    let n = g.num_cells();
    let area = g.cell_area();
    let mut t = Triplets::new(n);
    let mut rhs = vec![0.0; n];
    for k in 0..n {
        t.add(k, k, area / p.dt);
        rhs[k] = area * p.c_old.values[k] / p.dt;
        if let Some(s) = p.source {
            rhs[k] += area * s.values[k];
        }
    }
    for f in &g.interior_faces {
        let (l, r) = (f.left, f.right);
        let q = f.length * face_speed(p.velocity, f);
        if q >= 0.0 {
            t.add(l, l, q);
            t.add(r, l, -q);
        } else {
            t.add(l, r, q);
            t.add(r, r, -q);
        }
        let d = p.eps * f.length / f.distance;
        t.add(l, l, d);
        t.add(l, r, -d);
        t.add(r, r, d);
        t.add(r, l, -d);
    }
    for b in &g.boundary_faces {
        let gn = p.boundary.normal_speed[b.index];
        match p.boundary.tags[b.index] {
            FaceTag::Outflow => t.add(b.cell, b.cell, b.length * gn),
            FaceTag::Inflow => rhs[b.cell] -= b.length * p.c_b[b.index] * gn,
            FaceTag::Characteristic => {}
        }
    }
    (t.into_csr(), rhs)
}

/// One backward-Euler step. Values below `-tol_neg * scale` are an error;
/// smaller negative round-off is clipped to zero.
pub fn advance_scalar(p: &TransportProblem, tol_lin: f64, max_lin: usize, tol_neg: f64) -> Result<TransportSolution> {
    if !(p.dt > 0.0) || !(p.eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "transport needs dt > 0 and eps >= 0, got dt = {}, eps = {}",
            p.dt, p.eps
        )));
    }
    if !p.velocity.is_finite() || !p.c_old.is_finite() {
        return Err(Error::NonFinite("transport input"));
    }
    let (a, rhs) = assemble(p);
    let (mut c, stats) = bicgstab(&a, &rhs, Some(&p.c_old.values), tol_lin, max_lin)?;
    let scale = p
        .c_old
        .max_abs()
        .max(p.c_b.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        .max(1.0);
    for (k, v) in c.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -tol_neg * scale {
                return Err(Error::Negative {
                    field: "transported scalar",
                    cell: k,
                    value: *v,
                });
            }
            *v = 0.0;
        }
    }
    let c = ScalarField {
        nx: p.grid.nx,
        ny: p.grid.ny,
        values: c,
    };
    let mut inflow_flux = 0.0;
    let mut outflow_flux = 0.0;
    for b in &p.grid.boundary_faces {
        let gn = p.boundary.normal_speed[b.index];
        match p.boundary.tags[b.index] {
            FaceTag::Inflow => inflow_flux += b.length * p.c_b[b.index] * gn,
            FaceTag::Outflow => outflow_flux += b.length * c.values[b.cell] * gn,
            FaceTag::Characteristic => {}
        }
    }
    Ok(TransportSolution {
        c,
        stats,
        inflow_flux,
        outflow_flux,
    })
}

/// Applies one implicit step of pure diffusion with no-flux walls and
/// pseudo-time `eps_init`. Mass and bounds are preserved.
pub fn mollify(grid: &Grid, c: &ScalarField, eps_init: f64, tol_lin: f64, max_lin: usize) -> Result<ScalarField> {
    if eps_init <= 0.0 {
        return Ok(c.clone());
    }
    let closed = grid.classify_boundary(|_, _| [0.0, 0.0]);
    let bd = BoundaryData::sample(&closed, |_, _| [0.0, 0.0], |_, _| 0.0, |_, _| 0.0);
    let u = VectorField::constant(grid, [0.0, 0.0]);
    let zeros = vec![0.0; grid.boundary_faces.len()];
    let p = TransportProblem {
        grid: &closed,
        boundary: &bd,
        c_old: c,
        velocity: &u,
        c_b: &zeros,
        eps: 1.0,
        dt: eps_init,
        source: None,
    };
    Ok(advance_scalar(&p, tol_lin, max_lin, f64::INFINITY)?.c)
}

/// Convex renormalization `Phi` with its first two derivatives.
pub trait Renormalization {
    fn value(&self, z: f64) -> f64;
    fn slope(&self, z: f64) -> f64;
    fn curvature(&self, z: f64) -> f64;
}

/// `coef * z^p / (p - 1)` for `p > 1`, the pressure-potential family.
#[derive(Debug, Clone, Copy)]
pub struct PowerPotential {
    pub coef: f64,
    pub p: f64,
}

impl Renormalization for PowerPotential {
    fn value(&self, z: f64) -> f64 {
        self.coef * z.max(0.0).powf(self.p) / (self.p - 1.0)
    }
    fn slope(&self, z: f64) -> f64 {
        self.coef * self.p * z.max(0.0).powf(self.p - 1.0) / (self.p - 1.0)
    }
    fn curvature(&self, z: f64) -> f64 {
        self.coef * self.p * z.max(0.0).powf(self.p - 2.0)
    }
}

/// `Phi(z) = a + b z + c z^2`.
#[derive(Debug, Clone, Copy)]
pub struct Quadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Renormalization for Quadratic {
    fn value(&self, z: f64) -> f64 {
        self.a + self.b * z + self.c * z * z
    }
    fn slope(&self, z: f64) -> f64 {
        self.b + 2.0 * self.c * z
    }
    fn curvature(&self, _z: f64) -> f64 {
        2.0 * self.c
    }
}

/// Terms of the discrete renormalized balance over one step, already
/// multiplied by `dt`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RenormalizedTerms {
    /// `eps sum_faces |f|/d (c_r - c_l)(Phi'(c_r) - Phi'(c_l))`, the discrete
    /// `eps Phi''(c) |grad c|^2`.
    pub diffusion: f64,
    /// `sum_K Phi'(c_K) div(c u)_K |K|` with cell traces on the boundary.
    pub convection: f64,
    /// `int Phi(c^{n+1}) - int Phi(c^n)`.
    pub storage: f64,
    /// `sum_inflow |f| Phi'(c)(c - c_b)(u_b . n)`.
    pub boundary: f64,
}

impl RenormalizedTerms {
    pub fn residual(&self) -> f64 {
        self.diffusion + self.convection + self.storage - self.boundary
    }
}

/// Evaluates the renormalized balance for one step `c_old -> c_new` driven by `u`.
pub fn renormalized_step(
    grid: &Grid,
    bd: &BoundaryData,
    c_old: &ScalarField,
    c_new: &ScalarField,
    u: &VectorField,
    c_b: &[f64],
    eps: f64,
    dt: f64,
    phi: &dyn Renormalization,
) -> RenormalizedTerms {
    let area = grid.cell_area();
    let c = &c_new.values;
    let mut t = RenormalizedTerms::default();
    for f in &grid.interior_faces {
        let (l, r) = (f.left, f.right);
        t.diffusion += eps * f.length / f.distance * (c[r] - c[l]) * (phi.slope(c[r]) - phi.slope(c[l]));
        let w = face_speed(u, f);
        let q = f.length * w * if w >= 0.0 { c[l] } else { c[r] };
        t.convection += q * (phi.slope(c[l]) - phi.slope(c[r]));
    }
    for b in &grid.boundary_faces {
        let gn = bd.normal_speed[b.index];
        let k = b.cell;
        t.convection += phi.slope(c[k]) * b.length * c[k] * gn;
        if bd.tags[b.index] == FaceTag::Inflow {
            t.boundary += b.length * phi.slope(c[k]) * (c[k] - c_b[b.index]) * gn;
        }
    }
    t.storage = area
        * c.iter()
            .zip(&c_old.values)
            .map(|(&a, &b)| phi.value(a) - phi.value(b))
            .sum::<f64>();
    t.diffusion *= dt;
    t.convection *= dt;
    t.boundary *= dt;
    t
}

/// `|LHS - RHS|` of the renormalized identity accumulated along a trajectory.
///
/// `u[n]` is the velocity that drove the step from `c[n]` to `c[n + 1]`.
pub fn renormalized_residual(
    grid: &Grid,
    bd: &BoundaryData,
    c: &[ScalarField],
    u: &[VectorField],
    c_b: &[f64],
    eps: f64,
    dts: &[f64],
    phi: &dyn Renormalization,
) -> f64 {
    let mut total = 0.0;
    for n in 0..c.len().saturating_sub(1) {
        total += renormalized_step(grid, bd, &c[n], &c[n + 1], &u[n], c_b, eps, dts[n], phi).residual();
    }
    total.abs()
}

/// Extremum bounds for a transported scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxPrincipleReport {
    pub m: f64,
    pub big_m: f64,
    pub div_norm: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// Largest amount by which either bound is exceeded (0 when none).
    pub worst_violation: f64,
}

/// Bound constants `(m, M)` from initial data and inflow data.
pub fn max_principle_constants(grid: &Grid, bd: &BoundaryData, c0: &ScalarField, c_b: &[f64]) -> (f64, f64) {
    let (lo, hi) = extrema(c0);
    let mut m = lo;
    let mut big_m = hi.max(bd.max_speed());
    for b in &grid.boundary_faces {
        if bd.tags[b.index] == FaceTag::Inflow {
            m = m.min(c_b[b.index]);
            big_m = big_m.max(c_b[b.index]);
        }
    }
    (m, big_m)
}

/// Checks `m exp(-T D) <= c <= M exp(T D)` for every snapshot, where `D` is
/// the largest discrete `|div u|` of the driving velocities.
pub fn check_max_principle(
    grid: &Grid,
    bd: &BoundaryData,
    c: &[ScalarField],
    u: &[VectorField],
    c_b: &[f64],
    horizon: f64,
    tol: f64,
) -> MaxPrincipleReport {
    let (m, big_m) = max_principle_constants(grid, bd, &c[0], c_b);
    let div_norm = u
        .iter()
        .map(|u| discrete_divergence(grid, bd, u).max_abs())
        .fold(0.0_f64, f64::max);
    bounds_report(m, big_m, div_norm, horizon, tol, c.iter())
}

pub fn bounds_report<'a>(
    m: f64,
    big_m: f64,
    div_norm: f64,
    horizon: f64,
    tol: f64,
    snapshots: impl Iterator<Item = &'a ScalarField>,
) -> MaxPrincipleReport {
    let lower = m * (-horizon * div_norm).exp();
    let upper = big_m * (horizon * div_norm).exp();
    let mut worst: f64 = 0.0;
    let (mut lower_ok, mut upper_ok) = (true, true);
    for s in snapshots {
        let (lo, hi) = extrema(s);
        if lo < lower - tol {
            lower_ok = false;
        }
        if hi > upper + tol {
            upper_ok = false;
        }
        worst = worst.max(lower - lo).max(hi - upper);
    }
    MaxPrincipleReport {
        m,
        big_m,
        div_norm,
        lower_ok,
        upper_ok,
        worst_violation: worst.max(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DominationReport {
    /// `max (c_lower rho - b)^+` over cells.
    pub lower_violation: f64,
    /// `max (b - c_upper rho)^+` over cells.
    pub upper_violation: f64,
    pub worst_cell: Option<usize>,
    /// Same quantities over outflow traces.
    pub outflow_lower_violation: f64,
    pub outflow_upper_violation: f64,
    pub worst_face: Option<usize>,
}

impl DominationReport {
    pub fn worst(&self) -> f64 {
        self.lower_violation
            .max(self.upper_violation)
            .max(self.outflow_lower_violation)
            .max(self.outflow_upper_violation)
    }
}

pub fn domination_check(grid: &Grid, bd: &BoundaryData, rho: &ScalarField, b: &ScalarField, c_lower: f64, c_upper: f64) -> DominationReport {
    let mut r = DominationReport::default();
    let mut worst_cell = 0.0;
    for k in 0..grid.num_cells() {
        let lo = c_lower * rho.values[k] - b.values[k];
        let hi = b.values[k] - c_upper * rho.values[k];
        r.lower_violation = r.lower_violation.max(lo);
        r.upper_violation = r.upper_violation.max(hi);
        if lo.max(hi) > worst_cell {
            worst_cell = lo.max(hi);
            r.worst_cell = Some(k);
        }
    }
    let mut worst_face = 0.0;
    for f in &grid.boundary_faces {
        if bd.tags[f.index] != FaceTag::Outflow {
            continue;
        }
        let k = f.cell;
        let lo = c_lower * rho.values[k] - b.values[k];
        let hi = b.values[k] - c_upper * rho.values[k];
        r.outflow_lower_violation = r.outflow_lower_violation.max(lo);
        r.outflow_upper_violation = r.outflow_upper_violation.max(hi);
        if lo.max(hi) > worst_face {
            worst_face = lo.max(hi);
            r.worst_face = Some(f.index);
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize, u: [f64; 2]) -> (Grid, BoundaryData) {
        let g = Grid::build(n, n, 1.0, 1.0).unwrap();
        BoundaryData::setup(&g, move |_, _| u, |_, _| 1.0, |_, _| 1.0)
    }

    #[test]
    fn uniform_state_is_steady() {
        let (g, bd) = setup(8, [1.0, 0.0]);
        let c = ScalarField::constant(&g, 1.0);
        let u = VectorField::constant(&g, [1.0, 0.0]);
        for eps in [0.0, 0.3] {
            let p = TransportProblem {
                grid: &g,
                boundary: &bd,
                c_old: &c,
                velocity: &u,
                c_b: &bd.rho_b,
                eps,
                dt: 0.05,
                source: None,
            };
            let s = advance_scalar(&p, 1e-14, 200, 1e-12).unwrap();
            assert!(s.c.values.iter().all(|v| (v - 1.0).abs() <= 1e-12));
        }
    }

    #[test]
    fn closed_diffusion_conserves_mass() {
        let (g, bd) = setup(10, [0.0, 0.0]);
        let c = ScalarField::from_fn(&g, |x, y| 1.0 + (6.0 * x).sin() * y);
        let u = VectorField::constant(&g, [0.0, 0.0]);
        let p = TransportProblem {
            grid: &g,
            boundary: &bd,
            c_old: &c,
            velocity: &u,
            c_b: &bd.rho_b,
            eps: 0.01,
            dt: 0.1,
            source: None,
        };
        let s = advance_scalar(&p, 1e-13, 200, 1e-12).unwrap();
        let m0 = crate::fields::integrate(&g, &c);
        let m1 = crate::fields::integrate(&g, &s.c);
        assert!((m0 - m1).abs() <= 1e-12 * m0);
    }

    #[test]
    fn positivity_with_compression() {
        let (g, bd) = setup(12, [0.0, 0.0]);
        let c = ScalarField::from_fn(&g, |x, _| if x < 0.5 { 1e-3 } else { 0.0 });
        let u = VectorField::from_fn(&g, |x, y| [(0.5 - x) * 40.0, (y - 0.5) * 40.0]);
        let p = TransportProblem {
            grid: &g,
            boundary: &bd,
            c_old: &c,
            velocity: &u,
            c_b: &bd.rho_b,
            eps: 0.0,
            dt: 1.0,
            source: None,
        };
        let s = advance_scalar(&p, 1e-13, 500, 1e-12).unwrap();
        assert!(s.c.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn max_principle_constant_data() {
        let (g, bd) = setup(6, [0.3, 0.0]);
        let c = vec![ScalarField::constant(&g, 1.0); 3];
        let u = vec![VectorField::constant(&g, [0.3, 0.0]); 2];
        let r = check_max_principle(&g, &bd, &c, &u, &bd.rho_b, 1.0, 1e-8);
        assert_eq!(r.m, 1.0);
        assert_eq!(r.big_m, 1.0);
        assert!(r.div_norm < 1e-14);
        assert!(r.lower_ok && r.upper_ok);
    }

    #[test]
    fn max_principle_uses_boundary_speed() {
        let (g, bd) = setup(6, [3.0, 0.0]);
        let c = vec![ScalarField::from_fn(&g, |x, _| 0.5 + 1.5 * x)];
        let r = check_max_principle(&g, &bd, &c, &[], &vec![0.5; 24], 1.0, 1e-8);
        assert_eq!(r.big_m, 3.0);
        assert!(r.m >= 0.5 - 1e-15 && r.m <= 0.5 + 1.5 / 12.0);
    }

    #[test]
    fn domination_arithmetic() {
        let (g, bd) = setup(4, [1.0, 0.0]);
        let one = ScalarField::constant(&g, 1.0);
        let r = domination_check(&g, &bd, &one, &one, 0.5, 2.0);
        assert_eq!(r.worst(), 0.0);
        let three = ScalarField::constant(&g, 3.0);
        let r = domination_check(&g, &bd, &one, &three, 0.5, 2.0);
        assert_eq!(r.upper_violation, 1.0);
        assert_eq!(r.lower_violation, 0.0);
        assert_eq!(r.outflow_upper_violation, 1.0);
    }

    #[test]
    fn constant_renormalization_vanishes() {
        let (g, bd) = setup(6, [1.0, 0.5]);
        let c0 = ScalarField::from_fn(&g, |x, y| 1.0 + x * y);
        let c1 = ScalarField::from_fn(&g, |x, y| 1.1 + x - y * 0.2);
        let u = VectorField::from_fn(&g, |x, _| [1.0 + x, 0.5]);
        let phi = Quadratic { a: 3.0, b: 0.0, c: 0.0 };
        let t = renormalized_step(&g, &bd, &c0, &c1, &u, &bd.rho_b, 0.1, 0.01, &phi);
        assert_eq!(t.residual(), 0.0);
    }
}
