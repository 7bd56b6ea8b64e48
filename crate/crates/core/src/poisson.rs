//! Free-space Poisson solver.
//!
//! `laplacian(v) = f` with `v -> 0` at infinity is solved by discrete convolution
//! with the Green's function `-1/(4 pi |r - r'|)`, evaluated by FFT on a grid
//! zero-padded to twice the box size per axis (Hockney's method). Padding by a
//! factor two makes the cyclic convolution identical to the aperiodic one on the
//! original box, so there is no image interaction.
//!
//! The self-cell kernel entry is the exact integral of `-1/(4 pi |r|)` over one
//! grid cell instead of a point sample.
//!
//! The solve does not discretize the Laplacian: applying the finite-difference
//! [`laplacian`](crate::fields::laplacian) to the result reproduces the source
//! only up to the stencil's truncation error.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::fields::{Grid, ScalarField};
use crate::{Error, Result};

/// `integral over [-1/2, 1/2]^3 of 1/|r|`.
pub const UNIT_CELL_INVERSE_DISTANCE: f64 = 2.380_077_363_979_554;

/// Boundary-to-interior ratio of `max |f|` above which a warning is logged.
pub const BOUNDARY_WARN_RATIO: f64 = 1e-6;

/// Boundary-to-interior ratio above which the source is rejected as non-decaying.
pub const BOUNDARY_ERROR_RATIO: f64 = 1e-2;

/// Boundary diagnostics of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceCheck {
    pub boundary_max: f64,
    pub interior_max: f64,
}

impl SourceCheck {
    pub fn of(f: &ScalarField) -> Self {
        let grid = f.grid();
        let (mut boundary_max, mut interior_max) = (0.0f64, 0.0f64);
        for (idx, v) in f.values().iter().enumerate() {
            if grid.on_boundary(idx) {
                boundary_max = boundary_max.max(v.abs());
            } else {
                interior_max = interior_max.max(v.abs());
            }
        }
        Self { boundary_max, interior_max }
    }

    pub fn ratio(&self) -> f64 {
        if self.boundary_max == 0.0 {
            0.0
        } else if self.interior_max == 0.0 {
            f64::INFINITY
        } else {
            self.boundary_max / self.interior_max
        }
    }
}

/// Hockney solver bound to one grid. Immutable after construction.
pub struct PoissonSolver {
    grid: Grid,
    padded: [usize; 3],
    /// Fourier transform of the (real, even) padded kernel; real up to round-off.
    kernel_hat: Vec<f64>,
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
    force: bool,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver")
            .field("grid", &self.grid)
            .field("padded", &self.padded)
            .field("force", &self.force)
            .finish()
    }
}

impl PoissonSolver {
    pub const PADDING: usize = 2;

    pub fn new(grid: &Grid) -> Self {
        let dims = grid.dims();
        let padded = dims.map(|n| Self::PADDING * n);
        let mut planner = FftPlanner::new();
        let forward = padded.map(|m| planner.plan_fft_forward(m));
        let inverse = padded.map(|m| planner.plan_fft_inverse(m));

        let h = grid.spacing();
        let [mx, my, mz] = padded;
        let wrap = |i: usize, m: usize| -> f64 {
            let d = if i <= m / 2 { i as f64 } else { i as f64 - m as f64 };
            d * h
        };
        let mut kernel = vec![Complex64::new(0.0, 0.0); mx * my * mz];
        for k in 0..mz {
            let z = wrap(k, mz);
            for j in 0..my {
                let y = wrap(j, my);
                for i in 0..mx {
                    let x = wrap(i, mx);
                    let r = (x * x + y * y + z * z).sqrt();
                    let g = if r == 0.0 {
                        -UNIT_CELL_INVERSE_DISTANCE * h * h / (4.0 * PI)
                    } else {
                        -h * h * h / (4.0 * PI * r)
                    };
                    kernel[i + mx * (j + my * k)] = Complex64::new(g, 0.0);
                }
            }
        }
        let mut solver = Self { grid: grid.clone(), padded, kernel_hat: Vec::new(), forward, inverse, force: false };
        solver.transform(&mut kernel, false, [mx, my, mz]);
        solver.kernel_hat = kernel.iter().map(|c| c.re).collect();
        solver
    }

    /// Skip the non-decaying-source check (boundary diagnostics are still logged).
    pub fn with_force(mut self, force: bool) -> Self {
        self.force = force;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn padding(&self) -> usize {
        Self::PADDING
    }

    /// Solves `laplacian(v) = f` with `v -> 0` at infinity.
    pub fn solve_free_space(&self, f: &ScalarField) -> Result<ScalarField> {
        self.grid.ensure_same(f.grid())?;
        let check = SourceCheck::of(f);
        let ratio = check.ratio();
        if ratio > BOUNDARY_ERROR_RATIO && !self.force {
            return Err(Error::NonDecayingSource { boundary: check.boundary_max, interior: check.interior_max });
        }
        if ratio > BOUNDARY_WARN_RATIO {
            log::warn!(
                "Poisson source does not vanish at the box boundary: max|f| boundary/interior = {ratio:.3e}"
            );
        }
        if check.boundary_max == 0.0 && check.interior_max == 0.0 {
            return Ok(ScalarField::zeros(&self.grid));
        }

        let [nx, ny, nz] = self.grid.dims();
        let [mx, my, mz] = self.padded;
        let mut data = vec![Complex64::new(0.0, 0.0); mx * my * mz];
        for k in 0..nz {
            for j in 0..ny {
                let src = &f.values()[nx * (j + ny * k)..nx * (j + ny * k + 1)];
                let dst = &mut data[mx * (j + my * k)..];
                for (d, s) in dst.iter_mut().zip(src) {
                    d.re = *s;
                }
            }
        }
        self.transform(&mut data, false, [nx, ny, nz]);
        for (d, g) in data.iter_mut().zip(&self.kernel_hat) {
            *d *= *g;
        }
        self.transform(&mut data, true, [nx, ny, nz]);

        let norm = 1.0 / (mx * my * mz) as f64;
        let mut out = Vec::with_capacity(self.grid.len());
        for k in 0..nz {
            for j in 0..ny {
                out.extend(data[mx * (j + my * k)..mx * (j + my * k) + nx].iter().map(|c| c.re * norm));
            }
        }
        log::debug!("Poisson solve on {}: boundary ratio {ratio:.3e}", self.grid);
        ScalarField::new(self.grid.clone(), out)
    }

    /// `v_H = solve_free_space(-4 pi rho)`.
    pub fn hartree_potential(&self, rho: &ScalarField) -> Result<ScalarField> {
        if let Some((index, &value)) = rho.values().iter().enumerate().find(|(_, &v)| v < -1e-12) {
            return Err(Error::NegativeDensity { index, value });
        }
        self.solve_free_space(&rho.scaled(-4.0 * PI))
    }

    /// In-place 3D FFT of padded data whose nonzero content (forward) or whose
    /// needed output (inverse) is confined to the leading `live` block.
    fn transform(&self, data: &mut [Complex64], inverse: bool, live: [usize; 3]) {
        let [mx, my, mz] = self.padded;
        let plans = if inverse { &self.inverse } else { &self.forward };
        let max_scratch = plans.iter().map(|p| p.get_inplace_scratch_len()).max().unwrap_or(0);
        let mut scratch = vec![Complex64::new(0.0, 0.0); max_scratch];
        let mut line = vec![Complex64::new(0.0, 0.0); mx.max(my).max(mz)];

        let along_x = |data: &mut [Complex64], scratch: &mut [Complex64]| {
            for k in 0..live[2] {
                for j in 0..live[1] {
                    let start = mx * (j + my * k);
                    plans[0].process_with_scratch(&mut data[start..start + mx], scratch);
                }
            }
        };
        let along_y = |data: &mut [Complex64], scratch: &mut [Complex64], line: &mut [Complex64], planes: usize| {
            for k in 0..planes {
                for i in 0..mx {
                    let base = i + mx * my * k;
                    for j in 0..my {
                        line[j] = data[base + mx * j];
                    }
                    plans[1].process_with_scratch(&mut line[..my], scratch);
                    for j in 0..my {
                        data[base + mx * j] = line[j];
                    }
                }
            }
        };
        let along_z = |data: &mut [Complex64], scratch: &mut [Complex64], line: &mut [Complex64]| {
            for j in 0..my {
                for i in 0..mx {
                    let base = i + mx * j;
                    for k in 0..mz {
                        line[k] = data[base + mx * my * k];
                    }
                    plans[2].process_with_scratch(&mut line[..mz], scratch);
                    for k in 0..mz {
                        data[base + mx * my * k] = line[k];
                    }
                }
            }
        };

        if inverse {
            along_z(data, &mut scratch, &mut line);
            along_y(data, &mut scratch, &mut line, live[2]);
            along_x(data, &mut scratch);
        } else {
            along_x(data, &mut scratch);
            along_y(data, &mut scratch, &mut line, live[2]);
            along_z(data, &mut scratch, &mut line);
        }
    }
}
