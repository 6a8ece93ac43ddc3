//! Tabular text snapshots of a state, exact under a write/read round trip.
//!
//! ```text
//! mhd-fields 1
//! grid 4 4 1.0000000000000000e0 1.0000000000000000e0
//! time 0.0000000000000000e0
//! columns cell rho b ux uy
//! 0 ... one row per cell
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::solver::State;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "mhd-fields";
const COLUMNS: &str = "columns cell rho b ux uy";

pub fn fields_string(grid: &Grid, state: &State) -> String {
    let mut s = String::with_capacity(96 * grid.num_cells() + 128);
    writeln!(s, "{MAGIC} {FORMAT_VERSION}").unwrap();
    writeln!(s, "grid {} {} {:.16e} {:.16e}", grid.nx, grid.ny, grid.lx, grid.ly).unwrap();
    writeln!(s, "time {:.16e}", state.time).unwrap();
    writeln!(s, "{COLUMNS}").unwrap();
    for k in 0..grid.num_cells() {
        let u = state.u.values[k];
        writeln!(
            s,
            "{k} {:.16e} {:.16e} {:.16e} {:.16e}",
            state.rho.values[k], state.b.values[k], u[0], u[1]
        )
        .unwrap();
    }
    s
}

pub fn write_fields(grid: &Grid, state: &State, path: &Path) -> Result<()> {
    std::fs::write(path, fields_string(grid, state))?;
    Ok(())
}

fn bad(line: usize, what: &str) -> Error {
    Error::Format(format!("field file line {line}: {what}"))
}

fn num(tok: Option<&str>, line: usize) -> Result<f64> {
    tok.and_then(|t| t.parse::<f64>().ok())
        .ok_or_else(|| bad(line, "expected a number"))
}

/// Parses a field file. With `expect = Some((nx, ny))` the grid size must match.
pub fn parse_fields(text: &str, expect: Option<(usize, usize)>) -> Result<State> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (n, head) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let mut t = head.split_whitespace();
    if t.next() != Some(MAGIC) {
        return Err(bad(n, "not a field file"));
    }
    let version = t
        .next()
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| bad(n, "missing version"))?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            expected: FORMAT_VERSION,
            found: version,
        });
    }
    let (n, gl) = lines.next().ok_or_else(|| bad(2, "missing grid line"))?;
    let mut t = gl.split_whitespace();
    if t.next() != Some("grid") {
        return Err(bad(n, "expected 'grid nx ny lx ly'"));
    }
    let nx = num(t.next(), n)? as usize;
    let ny = num(t.next(), n)? as usize;
    if let Some((ex, ey)) = expect {
        if nx != ex {
            return Err(Error::DimensionMismatch {
                what: "nx",
                expected: ex,
                found: nx,
            });
        }
        if ny != ey {
            return Err(Error::DimensionMismatch {
                what: "ny",
                expected: ey,
                found: ny,
            });
        }
    }
    let (n, tl) = lines.next().ok_or_else(|| bad(3, "missing time line"))?;
    let time = match tl.split_whitespace().collect::<Vec<_>>()[..] {
        ["time", v] => num(Some(v), n)?,
        _ => return Err(bad(n, "expected 'time t'")),
    };
    let (n, cl) = lines.next().ok_or_else(|| bad(4, "missing column line"))?;
    if cl.trim() != COLUMNS {
        return Err(bad(n, "unexpected columns"));
    }
    let cells = nx * ny;
    let (mut rho, mut b, mut u) = (Vec::with_capacity(cells), Vec::with_capacity(cells), Vec::with_capacity(cells));
    for (n, row) in lines {
        if row.trim().is_empty() {
            continue;
        }
        let mut t = row.split_whitespace();
        let k = num(t.next(), n)? as usize;
        if k != rho.len() {
            return Err(bad(n, "cells out of order"));
        }
        rho.push(num(t.next(), n)?);
        b.push(num(t.next(), n)?);
        u.push([num(t.next(), n)?, num(t.next(), n)?]);
    }
    if rho.len() != cells {
        return Err(Error::DimensionMismatch {
            what: "cell rows",
            expected: cells,
            found: rho.len(),
        });
    }
    Ok(State {
        time,
        rho: ScalarField { nx, ny, values: rho },
        b: ScalarField { nx, ny, values: b },
        u: VectorField { nx, ny, values: u },
    })
}

pub fn read_fields(path: &Path, expect: Option<(usize, usize)>) -> Result<State> {
    parse_fields(&std::fs::read_to_string(path)?, expect)
}
