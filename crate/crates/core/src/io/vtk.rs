//! Legacy ASCII VTK output on structured points.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::grid::Grid;
use crate::solver::State;

pub fn vtk_string(grid: &Grid, state: &State) -> String {
    let n = grid.num_cells();
    let mut s = String::with_capacity(80 * n + 256);
    s.push_str("# vtk DataFile Version 3.0\n");
    writeln!(s, "mhd state t={:.16e}", state.time).unwrap();
    s.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    writeln!(s, "DIMENSIONS {} {} 1", grid.nx, grid.ny).unwrap();
    writeln!(s, "ORIGIN {:.16e} {:.16e} 0", 0.5 * grid.dx, 0.5 * grid.dy).unwrap();
    writeln!(s, "SPACING {:.16e} {:.16e} 1", grid.dx, grid.dy).unwrap();
    writeln!(s, "POINT_DATA {n}").unwrap();
    for (name, f) in [("rho", &state.rho), ("b", &state.b)] {
        writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        for v in &f.values {
            writeln!(s, "{v:.16e}").unwrap();
        }
    }
    s.push_str("VECTORS u double\n");
    for u in &state.u.values {
        writeln!(s, "{:.16e} {:.16e} 0", u[0], u[1]).unwrap();
    }
    s
}

pub fn write_vtk(grid: &Grid, state: &State, path: &Path) -> Result<()> {
    std::fs::write(path, vtk_string(grid, state))?;
    Ok(())
}
