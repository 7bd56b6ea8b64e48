//! Output files: run log, CSV tables and line cuts.

use std::fs;
use std::path::{Path, PathBuf};

use pxc_core::cavity::DressedMode;
use pxc_core::fields::{line_cut, read_grid_file, Axis, Grid, ScalarField};

use crate::CliError;

/// Lines collected during a run and written as `run.log`.
#[derive(Debug, Default)]
pub struct RunLog {
    lines: Vec<String>,
}

impl RunLog {
    pub fn new(command: &str) -> Self {
        let mut log = Self::default();
        log.push(format!("pxc {} {command}", env!("CARGO_PKG_VERSION")));
        log
    }

    pub fn push(&mut self, line: impl Into<String>) {
        let line = line.into();
        log::info!("{line}");
        self.lines.push(line);
    }

    pub fn section(&mut self, title: &str, body: &str) {
        self.push(format!("[{title}]"));
        for l in body.lines() {
            self.push(l.to_string());
        }
    }

    pub fn grid(&mut self, label: &str, grid: &Grid) {
        let [nx, ny, nz] = grid.dims();
        self.push(format!(
            "{label}: {nx}x{ny}x{nz} points, spacing {} bohr, origin ({}, {}, {}), cell volume {:e}",
            grid.spacing(),
            grid.origin()[0],
            grid.origin()[1],
            grid.origin()[2],
            grid.cell_volume()
        ));
    }

    pub fn mode(&mut self, label: &str, n_electrons: usize, m: &DressedMode) {
        let e = m.epsilon.components();
        self.push(format!(
            "{label} (N_e = {n_electrons}): omega_tilde = {:.12} Ha, lambda_tilde = {}, polarization = ({}, {}, {}), g = {:.12}",
            m.omega_tilde,
            m.lambda_tilde,
            e[0],
            e[1],
            e[2],
            m.photon_coupling()
        ));
    }

    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        write_text(dir, "run.log", &self.text())
    }
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", dir.join(name).display())))
}

pub fn out_path(dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

/// Read a density grid file, reporting a missing file as a usage error.
pub fn read_density(path: &Path) -> Result<ScalarField, CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("no such density file {}", path.display())));
    }
    Ok(read_grid_file(path)?)
}

/// Offsets of the grid line along `axis` passing closest to `through`.
pub fn nearest_offsets(grid: &Grid, axis: Axis, through: [f64; 3]) -> [f64; 2] {
    let n = grid.dims();
    let h = grid.spacing();
    axis.others().map(|o| {
        let a = o.index();
        let i = ((through[a] - grid.origin()[a]) / h).round().clamp(0.0, (n[a] - 1) as f64) as usize;
        grid.coord(a, i)
    })
}

/// `cut_<axis>.csv` with one column per field, all on the same grid.
pub fn write_cuts(
    dir: &Path,
    suffix: &str,
    axes: &[Axis],
    through: [f64; 3],
    columns: &[(&str, &ScalarField)],
) -> Result<(), CliError> {
    let grid = columns[0].1.grid();
    for &axis in axes {
        let offsets = nearest_offsets(grid, axis, through);
        let cuts: Vec<Vec<(f64, f64)>> =
            columns.iter().map(|(_, f)| line_cut(f, axis, offsets)).collect::<Result<_, _>>()?;
        let mut csv = format!("{}_bohr", axis.name());
        for (name, _) in columns {
            csv.push(',');
            csv.push_str(name);
        }
        csv.push('\n');
        for i in 0..cuts[0].len() {
            csv.push_str(&format!("{:.17e}", cuts[0][i].0));
            for c in &cuts {
                csv.push_str(&format!(",{:.17e}", c[i].1));
            }
            csv.push('\n');
        }
        write_text(dir, &format!("cut_{}{suffix}.csv", axis.name()), &csv)?;
    }
    Ok(())
}

/// Bring two fields onto a common grid: identical grids pass through, otherwise
/// the finer one is restricted onto the coarser when the grids are commensurate.
pub fn common_grid(a: ScalarField, b: ScalarField) -> Result<(ScalarField, ScalarField), CliError> {
    if a.grid().same_as(b.grid()) {
        return Ok((a, b));
    }
    let mismatch = || {
        CliError::Usage(format!("grid mismatch: {} vs {} (grids are not commensurate)", a.grid(), b.grid()))
    };
    if a.grid().spacing() < b.grid().spacing() {
        let r = a.restrict_to(b.grid()).map_err(|_| mismatch())?;
        Ok((r, b))
    } else {
        let r = b.restrict_to(a.grid()).map_err(|_| mismatch())?;
        Ok((a, r))
    }
}
