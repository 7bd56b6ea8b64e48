//! ASCII density grid files.
//!
//! ```text
//! <comment>
//! dims nx ny nz
//! spacing h
//! origin ox oy oz
//! v0
//! v1
//! ...
//! ```
//! Values are x-fastest, one per line, 17 significant digits.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Grid, ScalarField};
use crate::{Error, Result};

pub fn write_grid_file(path: impl AsRef<Path>, field: &ScalarField, comment: &str) -> Result<()> {
    let grid = field.grid();
    let mut w = BufWriter::new(fs::File::create(path.as_ref())?);
    let [nx, ny, nz] = grid.dims();
    let [ox, oy, oz] = grid.origin();
    writeln!(w, "{}", comment.replace('\n', " "))?;
    writeln!(w, "dims {nx} {ny} {nz}")?;
    writeln!(w, "spacing {:.16e}", grid.spacing())?;
    writeln!(w, "origin {ox:.16e} {oy:.16e} {oz:.16e}")?;
    for v in field.values() {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid_file(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let bad = |msg: String| Error::GridFile { path: path.to_path_buf(), msg };
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    lines.next().ok_or_else(|| bad("empty file".into()))?;

    let mut header = |key: &str, count: usize| -> Result<Vec<String>> {
        let line = lines.next().ok_or_else(|| bad(format!("missing '{key}' line")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(bad(format!("expected '{key}', found '{line}'")));
        }
        let rest: Vec<String> = parts.map(str::to_owned).collect();
        if rest.len() != count {
            return Err(bad(format!("'{key}' needs {count} values, found {}", rest.len())));
        }
        Ok(rest)
    };
    let dims = header("dims", 3)?;
    let spacing = header("spacing", 1)?;
    let origin = header("origin", 3)?;

    let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("bad integer '{s}': {e}")));
    let parse_f64 = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("bad number '{s}': {e}")));
    let dims = [parse_usize(&dims[0])?, parse_usize(&dims[1])?, parse_usize(&dims[2])?];
    let spacing = parse_f64(&spacing[0])?;
    let origin = [parse_f64(&origin[0])?, parse_f64(&origin[1])?, parse_f64(&origin[2])?];
    let grid = Grid::new(dims, spacing, origin)?;

    let values = lines
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(parse_f64)
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != grid.len() {
        return Err(bad(format!(
            "dims {}x{}x{} require {} values, found {}",
            dims[0],
            dims[1],
            dims[2],
            grid.len(),
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(bad(format!("non-finite value {v}")));
    }
    ScalarField::new(grid, values)
}
