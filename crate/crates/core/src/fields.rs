//! Cell-centered scalar and vector fields, quadrature, stencils and the
//! sampled boundary data.

use crate::error::{Error, Result};
use crate::grid::{FaceTag, Grid, Subset};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<[f64; 2]>,
}

/// Symmetric 2x2 tensor stored as `[xx, xy, yy]`.
pub type SymTensor = [f64; 3];

impl ScalarField {
    pub fn constant(grid: &Grid, c: f64) -> ScalarField {
        ScalarField {
            nx: grid.nx,
            ny: grid.ny,
            values: vec![c; grid.num_cells()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        ScalarField {
            nx: grid.nx,
            ny: grid.ny,
            values: grid.cell_centers.iter().map(|p| f(p[0], p[1])).collect(),
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.num_cells() {
            return Err(Error::DimensionMismatch {
                what: "scalar field",
                expected: grid.num_cells(),
                found: values.len(),
            });
        }
        Ok(ScalarField {
            nx: grid.nx,
            ny: grid.ny,
            values,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            nx: self.nx,
            ny: self.ny,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        ScalarField {
            nx: self.nx,
            ny: self.ny,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl VectorField {
    pub fn constant(grid: &Grid, c: [f64; 2]) -> VectorField {
        VectorField {
            nx: grid.nx,
            ny: grid.ny,
            values: vec![c; grid.num_cells()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> [f64; 2]) -> VectorField {
        VectorField {
            nx: grid.nx,
            ny: grid.ny,
            values: grid.cell_centers.iter().map(|p| f(p[0], p[1])).collect(),
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<[f64; 2]>) -> Result<VectorField> {
        if values.len() != grid.num_cells() {
            return Err(Error::DimensionMismatch {
                what: "vector field",
                expected: grid.num_cells(),
                found: values.len(),
            });
        }
        Ok(VectorField {
            nx: grid.nx,
            ny: grid.ny,
            values,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v[0].is_finite() && v[1].is_finite())
    }

    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField {
            nx: self.nx,
            ny: self.ny,
            values: self.values.iter().map(|v| v[c]).collect(),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField {
            nx: self.nx,
            ny: self.ny,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
                .collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            nx: self.nx,
            ny: self.ny,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1]])
                .collect(),
        }
    }

    /// Largest componentwise magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0_f64, |m, v| m.max(v[0].abs()).max(v[1].abs()))
    }
}

pub fn integrate(grid: &Grid, f: &ScalarField) -> f64 {
    f.values.iter().sum::<f64>() * grid.cell_area()
}

/// Sums `g * length` over the requested faces; `g` is indexed by boundary face id.
pub fn boundary_integrate(grid: &Grid, g: &[f64], subset: Subset) -> f64 {
    grid.boundary_faces
        .iter()
        .filter(|f| subset.contains(f.tag))
        .map(|f| g[f.index] * f.length)
        .sum()
}

fn axis_derivative(f: &[f64], n: usize, stride: usize, base: usize, h: f64, p: usize) -> f64 {
    let at = |q: usize| f[base + q * stride];
    if n == 2 {
        return (at(1) - at(0)) / h;
    }
    if p == 0 {
        (4.0 * (at(1) - at(0)) - (at(2) - at(0))) / (2.0 * h)
    } else if p == n - 1 {
        (4.0 * (at(n - 1) - at(n - 2)) - (at(n - 1) - at(n - 3))) / (2.0 * h)
    } else {
        (at(p + 1) - at(p - 1)) / (2.0 * h)
    }
}

fn partials(grid: &Grid, f: &[f64], k: usize) -> [f64; 2] {
    let (i, j) = (k % grid.nx, k / grid.nx);
    [
        axis_derivative(f, grid.nx, 1, j * grid.nx, grid.dx, i),
        axis_derivative(f, grid.ny, grid.nx, i, grid.dy, j),
    ]
}

/// Centered differences inside, second-order one-sided next to the boundary.
pub fn gradient(grid: &Grid, f: &ScalarField) -> VectorField {
    VectorField {
        nx: grid.nx,
        ny: grid.ny,
        values: (0..grid.num_cells()).map(|k| partials(grid, &f.values, k)).collect(),
    }
}

/// Full velocity gradient per cell, `g[a][b] = d v_a / d x_b`.
pub fn velocity_gradient(grid: &Grid, v: &VectorField) -> Vec<[[f64; 2]; 2]> {
    let vx = v.component(0).values;
    let vy = v.component(1).values;
    (0..grid.num_cells())
        .map(|k| [partials(grid, &vx, k), partials(grid, &vy, k)])
        .collect()
}

pub fn divergence(grid: &Grid, v: &VectorField) -> ScalarField {
    let g = velocity_gradient(grid, v);
    ScalarField {
        nx: grid.nx,
        ny: grid.ny,
        values: g.iter().map(|g| g[0][0] + g[1][1]).collect(),
    }
}

/// Symmetric gradient `(grad v + grad v^T) / 2` and divergence.
pub fn strain_and_div(grid: &Grid, v: &VectorField) -> (Vec<SymTensor>, ScalarField) {
    let g = velocity_gradient(grid, v);
    let strain = g
        .iter()
        .map(|g| [g[0][0], 0.5 * (g[0][1] + g[1][0]), g[1][1]])
        .collect();
    let div = ScalarField {
        nx: grid.nx,
        ny: grid.ny,
        values: g.iter().map(|g| g[0][0] + g[1][1]).collect(),
    };
    (strain, div)
}

pub fn extrema(f: &ScalarField) -> (f64, f64) {
    f.values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Extrema of the boundary trace over a subset of faces.
///
/// The trace is the adjacent cell value, which is the value the upwind flux
/// transports through the face. Returns `None` when the subset is empty.
pub fn extrema_boundary(grid: &Grid, f: &ScalarField, subset: Subset) -> Option<(f64, f64)> {
    let mut it = grid
        .boundary_faces
        .iter()
        .filter(|b| subset.contains(b.tag))
        .map(|b| f.values[b.cell])
        .peekable();
    it.peek()?;
    Some(it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v))))
}

/// Second-order extrapolation of a cell field to a boundary face midpoint.
pub fn extrapolated_trace(grid: &Grid, f: &ScalarField, face: usize) -> f64 {
    let b = &grid.boundary_faces[face];
    let k = b.cell;
    let (i, j) = (k % grid.nx, k / grid.nx);
    let inner = if b.normal[0] < 0.0 {
        grid.idx(i + 1, j)
    } else if b.normal[0] > 0.0 {
        grid.idx(i - 1, j)
    } else if b.normal[1] < 0.0 {
        grid.idx(i, j + 1)
    } else {
        grid.idx(i, j - 1)
    };
    1.5 * f.values[k] - 0.5 * f.values[inner]
}

/// Boundary data sampled on a classified grid.
///
/// `u_b` is the boundary velocity extension over the whole closure; `rho_b`
/// and `b_b` are only read on inflow faces.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    /// `u_b` at cell centers.
    pub u_cells: VectorField,
    /// `u_b` at boundary face midpoints.
    pub u_faces: Vec<[f64; 2]>,
    /// `u_b . n` on inflow/outflow faces, zero on characteristic faces.
    pub normal_speed: Vec<f64>,
    pub rho_b: Vec<f64>,
    pub b_b: Vec<f64>,
    pub tags: Vec<FaceTag>,
}

impl BoundaryData {
    /// Samples the data on `grid`, which must already be classified with `u_b`.
    pub fn sample(
        grid: &Grid,
        u_b: impl Fn(f64, f64) -> [f64; 2],
        rho_b: impl Fn(f64, f64) -> f64,
        b_b: impl Fn(f64, f64) -> f64,
    ) -> BoundaryData {
        let u_faces: Vec<[f64; 2]> = grid
            .boundary_faces
            .iter()
            .map(|f| u_b(f.midpoint[0], f.midpoint[1]))
            .collect();
        let normal_speed = grid
            .boundary_faces
            .iter()
            .zip(&u_faces)
            .map(|(f, u)| match f.tag {
                FaceTag::Characteristic => 0.0,
                _ => u[0] * f.normal[0] + u[1] * f.normal[1],
            })
            .collect();
        let at = |g: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
            grid.boundary_faces
                .iter()
                .map(|f| g(f.midpoint[0], f.midpoint[1]))
                .collect()
        };
        BoundaryData {
            u_cells: VectorField::from_fn(grid, &u_b),
            u_faces,
            normal_speed,
            rho_b: at(&rho_b),
            b_b: at(&b_b),
            tags: grid.boundary_faces.iter().map(|f| f.tag).collect(),
        }
    }

    /// Classifies `grid` with `u_b` and samples all boundary data on it.
    pub fn setup(
        grid: &Grid,
        u_b: impl Fn(f64, f64) -> [f64; 2],
        rho_b: impl Fn(f64, f64) -> f64,
        b_b: impl Fn(f64, f64) -> f64,
    ) -> (Grid, BoundaryData) {
        let g = grid.classify_boundary(&u_b);
        let bd = BoundaryData::sample(&g, u_b, rho_b, b_b);
        (g, bd)
    }

    /// Largest `|u_b|` over cell centers and boundary midpoints.
    pub fn max_speed(&self) -> f64 {
        self.u_cells
            .values
            .iter()
            .chain(&self.u_faces)
            .fold(0.0_f64, |m, u| m.max(u[0].hypot(u[1])))
    }

    /// Violations of positivity and domination of the inflow data.
    pub fn inflow_violations(&self, c_lower: f64, c_upper: f64) -> Vec<String> {
        let inflow: Vec<usize> = (0..self.tags.len())
            .filter(|&f| self.tags[f] == FaceTag::Inflow)
            .collect();
        // worst face of a quantity that must stay <= 0
        let worst = |f: &dyn Fn(usize) -> f64| {
            inflow
                .iter()
                .map(|&i| (i, f(i)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
        };
        let mut out = Vec::new();
        if let Some((i, v)) = worst(&|i| -self.rho_b[i]).filter(|w| w.1 >= 0.0) {
            out.push(format!("positive inflow density: rho_b = {:e} on face {i}", -v));
        }
        if let Some((i, v)) = worst(&|i| -self.b_b[i]).filter(|w| w.1 >= 0.0) {
            out.push(format!("positive inflow magnetic field: b_b = {:e} on face {i}", -v));
        }
        if let Some((i, v)) = worst(&|i| c_lower * self.rho_b[i] - self.b_b[i]).filter(|w| w.1 > 0.0) {
            out.push(format!("inflow lower domination: worst face {i}, violation {v:e}"));
        }
        if let Some((i, v)) = worst(&|i| self.b_b[i] - c_upper * self.rho_b[i]).filter(|w| w.1 > 0.0) {
            out.push(format!("inflow upper domination: worst face {i}, violation {v:e}"));
        }
        out
    }
}
