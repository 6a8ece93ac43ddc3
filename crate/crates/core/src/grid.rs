//! Rectangular cell-centered mesh with face metadata.
//!
//! Cells are indexed row-major, `k = j * nx + i`. Interior faces carry the
//! pair of cells they separate and the unit normal pointing from `left` to
//! `right`. Boundary faces are enumerated bottom, right, top, left and carry an
//! outward unit normal plus an inflow/outflow/characteristic tag.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceTag {
    Inflow,
    Outflow,
    Characteristic,
}

/// Which part of the boundary a quadrature or extremum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    Inflow,
    Outflow,
    All,
}

impl Subset {
    pub fn contains(self, tag: FaceTag) -> bool {
        match self {
            Subset::All => true,
            Subset::Inflow => tag == FaceTag::Inflow,
            Subset::Outflow => tag == FaceTag::Outflow,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFace {
    pub index: usize,
    /// Cell adjacent to the face.
    pub cell: usize,
    pub midpoint: [f64; 2],
    pub normal: [f64; 2],
    pub length: f64,
    /// Distance from the cell center to the face midpoint.
    pub half_distance: f64,
    pub tag: FaceTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteriorFace {
    pub left: usize,
    pub right: usize,
    /// Unit normal from `left` to `right`.
    pub normal: [f64; 2],
    pub length: f64,
    /// Distance between the two cell centers.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dx: f64,
    pub dy: f64,
    pub cell_centers: Vec<[f64; 2]>,
    pub interior_faces: Vec<InteriorFace>,
    pub boundary_faces: Vec<BoundaryFace>,
    /// Interior face ids touching each cell.
    pub cell_interior_faces: Vec<Vec<usize>>,
    /// Boundary face ids touching each cell.
    pub cell_boundary_faces: Vec<Vec<usize>>,
}

impl Grid {
    pub fn build(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells per axis, got {nx} x {ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "extents must be positive, got {lx} x {ly}"
            )));
        }
        let dx = lx / nx as f64;
        let dy = ly / ny as f64;
        let ncell = nx * ny;

        let mut cell_centers = Vec::with_capacity(ncell);
        for j in 0..ny {
            for i in 0..nx {
                cell_centers.push([(i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy]);
            }
        }

        let mut interior_faces = Vec::new();
        let mut cell_interior_faces = vec![Vec::new(); ncell];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                if i + 1 < nx {
                    cell_interior_faces[k].push(interior_faces.len());
                    cell_interior_faces[k + 1].push(interior_faces.len());
                    interior_faces.push(InteriorFace {
                        left: k,
                        right: k + 1,
                        normal: [1.0, 0.0],
                        length: dy,
                        distance: dx,
                    });
                }
                if j + 1 < ny {
                    cell_interior_faces[k].push(interior_faces.len());
                    cell_interior_faces[k + nx].push(interior_faces.len());
                    interior_faces.push(InteriorFace {
                        left: k,
                        right: k + nx,
                        normal: [0.0, 1.0],
                        length: dx,
                        distance: dy,
                    });
                }
            }
        }

        let mut boundary_faces = Vec::with_capacity(2 * (nx + ny));
        let mut push = |cell: usize, midpoint: [f64; 2], normal: [f64; 2], length: f64, half: f64| {
            let index = boundary_faces.len();
            boundary_faces.push(BoundaryFace {
                index,
                cell,
                midpoint,
                normal,
                length,
                half_distance: half,
                tag: FaceTag::Characteristic,
            });
        };
        for i in 0..nx {
            push(i, [(i as f64 + 0.5) * dx, 0.0], [0.0, -1.0], dx, 0.5 * dy);
        }
        for j in 0..ny {
            push(j * nx + nx - 1, [lx, (j as f64 + 0.5) * dy], [1.0, 0.0], dy, 0.5 * dx);
        }
        for i in 0..nx {
            push((ny - 1) * nx + i, [(i as f64 + 0.5) * dx, ly], [0.0, 1.0], dx, 0.5 * dy);
        }
        for j in 0..ny {
            push(j * nx, [0.0, (j as f64 + 0.5) * dy], [-1.0, 0.0], dy, 0.5 * dx);
        }

        let mut cell_boundary_faces = vec![Vec::new(); ncell];
        for f in &boundary_faces {
            cell_boundary_faces[f.cell].push(f.index);
        }

        Ok(Grid {
            nx,
            ny,
            lx,
            ly,
            dx,
            dy,
            cell_centers,
            interior_faces,
            boundary_faces,
            cell_interior_faces,
            cell_boundary_faces,
        })
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_faces.iter().map(|f| f.length).sum()
    }

    /// Tags every boundary face from the sign of `u_b . n` at its midpoint.
    ///
    /// Faces with `|u_b . n| <= tag_tolerance` are characteristic, where the
    /// tolerance is `1e-12` times the largest boundary speed.
    pub fn classify_boundary<F>(&self, u_b: F) -> Grid
    where
        F: Fn(f64, f64) -> [f64; 2],
    {
        let normal_speed: Vec<f64> = self
            .boundary_faces
            .iter()
            .map(|f| {
                let u = u_b(f.midpoint[0], f.midpoint[1]);
                u[0] * f.normal[0] + u[1] * f.normal[1]
            })
            .collect();
        let umax = self
            .boundary_faces
            .iter()
            .map(|f| {
                let u = u_b(f.midpoint[0], f.midpoint[1]);
                u[0].hypot(u[1])
            })
            .fold(0.0_f64, f64::max);
        let tol = tag_tolerance(umax);
        let mut out = self.clone();
        for (f, un) in out.boundary_faces.iter_mut().zip(normal_speed) {
            f.tag = classify(un, tol);
        }
        out
    }

    pub fn faces_tagged(&self, tag: FaceTag) -> impl Iterator<Item = &BoundaryFace> {
        self.boundary_faces.iter().filter(move |f| f.tag == tag)
    }
}

pub fn tag_tolerance(max_speed: f64) -> f64 {
    1e-12 * max_speed
}

pub fn classify(normal_speed: f64, tol: f64) -> FaceTag {
    if normal_speed < -tol {
        FaceTag::Inflow
    } else if normal_speed > tol {
        FaceTag::Outflow
    } else {
        FaceTag::Characteristic
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let g = Grid::build(2, 2, 1.0, 1.0).unwrap();
        assert_eq!(g.dx, 0.5);
        assert_eq!(g.dy, 0.5);
        assert_eq!(g.num_cells(), 4);
        assert_eq!(g.boundary_faces.len(), 8);
        assert_eq!(g.interior_faces.len(), 4);
    }

    #[test]
    fn rectangle_perimeter() {
        let g = Grid::build(4, 2, 2.0, 1.0).unwrap();
        assert_eq!((g.dx, g.dy), (0.5, 0.5));
        assert_eq!(g.num_cells(), 8);
        assert!((g.perimeter() - 6.0).abs() <= 8.0 * f64::EPSILON * 6.0);
    }

    #[test]
    fn face_count_32() {
        let g = Grid::build(32, 32, 1.0, 1.0).unwrap();
        assert_eq!(g.num_cells(), 1024);
        assert_eq!(g.boundary_faces.len(), 128);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::build(1, 4, 1.0, 1.0).is_err());
        assert!(Grid::build(4, 4, 0.0, 1.0).is_err());
        assert!(Grid::build(4, 4, 1.0, -2.0).is_err());
    }

    #[test]
    fn centers() {
        let g = Grid::build(4, 2, 2.0, 1.0).unwrap();
        assert_eq!(g.cell_centers[g.idx(3, 1)], [1.75, 0.75]);
    }

    #[test]
    fn uniform_flow_tags() {
        let g = Grid::build(8, 8, 1.0, 1.0).unwrap().classify_boundary(|_, _| [1.0, 0.0]);
        for f in &g.boundary_faces {
            let expect = if f.normal[0] < 0.0 {
                FaceTag::Inflow
            } else if f.normal[0] > 0.0 {
                FaceTag::Outflow
            } else {
                FaceTag::Characteristic
            };
            assert_eq!(f.tag, expect);
        }
    }

    #[test]
    fn zero_flow_is_characteristic() {
        let g = Grid::build(5, 3, 1.0, 1.0).unwrap().classify_boundary(|_, _| [0.0, 0.0]);
        assert!(g.boundary_faces.iter().all(|f| f.tag == FaceTag::Characteristic));
    }

    #[test]
    fn expanding_flow_has_two_outflow_edges() {
        let g = Grid::build(8, 8, 1.0, 1.0)
            .unwrap()
            .classify_boundary(|x, _| [x - 0.5, 0.0]);
        for f in &g.boundary_faces {
            if f.normal[1] != 0.0 {
                assert_eq!(f.tag, FaceTag::Characteristic);
            } else {
                assert_eq!(f.tag, FaceTag::Outflow);
            }
        }
    }
}
