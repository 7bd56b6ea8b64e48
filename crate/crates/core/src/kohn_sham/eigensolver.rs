//! LOBPCG for the lowest eigenpairs of `-1/2 laplacian + v`.
//!
//! Vectors are handled with the plain Euclidean inner product on grid values;
//! the Hamiltonian stencil is symmetric under it. For a Euclidean-unit vector `u`
//! the residual `|H u - e u|_2` equals the `L2(dV)` residual of the
//! `dV`-normalized orbital `u / sqrt(h^3)`, so tolerances carry over unchanged.
//!
//! The preconditioner is `(T + shift)^-1` with `T` the kinetic operator, applied
//! exactly in the sine basis (DST-I per axis). The sine basis diagonalizes the
//! fourth-order stencil up to its two boundary rows.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::{Mat, Side};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::hamiltonian::apply_hamiltonian_raw;
use crate::fields::{for_each_line, Grid, ScalarField};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenOptions {
    /// Residual norm `|H phi - e phi|` each requested pair must reach.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra block vectors iterated alongside the requested ones.
    pub guard: usize,
    /// Shift of the kinetic preconditioner, in Hartree.
    pub shift: f64,
    /// Upper bound on the number of requested pairs.
    pub max_pairs: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 2000, guard: 2, shift: 1.0, max_pairs: 64 }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpairs {
    /// Ascending.
    pub values: Vec<f64>,
    /// Normalized to `integral |phi|^2 = 1`.
    pub vectors: Vec<ScalarField>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Lowest `k` eigenpairs of `-1/2 laplacian + v` with default options.
pub fn lowest_eigenpairs(v: &ScalarField, k: usize) -> Result<Eigenpairs> {
    lowest_eigenpairs_with(v, k, &EigenOptions::default(), &[])
}

/// As [`lowest_eigenpairs`], starting from `initial` (any count; completed with
/// smooth symmetric trial functions).
pub fn lowest_eigenpairs_with(
    v: &ScalarField,
    k: usize,
    opts: &EigenOptions,
    initial: &[ScalarField],
) -> Result<Eigenpairs> {
    if k == 0 || k > opts.max_pairs {
        return Err(Error::InvalidInput(format!("requested {k} eigenpairs, allowed 1..={}", opts.max_pairs)));
    }
    let grid = v.grid();
    let n = grid.len();
    let block = (k + opts.guard).min(n);
    if k > block {
        return Err(Error::InvalidInput(format!("requested {k} eigenpairs on a grid of {n} points")));
    }
    for f in initial {
        grid.ensure_same(f.grid())?;
    }
    let dims = grid.dims();
    let h = grid.spacing();
    let apply = |u: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        apply_hamiltonian_raw(v.values(), u, &mut out, dims, h);
        out
    };
    let precond = KineticPreconditioner::new(grid, opts.shift);

    let mut candidates: Vec<Vec<f64>> = initial.iter().take(block).map(|f| f.values().to_vec()).collect();
    candidates.extend(trial_functions(grid, block + 8));
    let mut x = Vec::with_capacity(block);
    for c in candidates {
        if x.len() == block {
            break;
        }
        if let Some(q) = orthonormalize_against(c, &x) {
            x.push(q);
        }
    }
    if x.len() < block {
        return Err(Error::InvalidInput("could not build an independent starting block".into()));
    }
    let mut hx: Vec<Vec<f64>> = x.iter().map(|u| apply(u)).collect();
    let (mut theta, c) = rayleigh_ritz(&x, &hx, block)?;
    x = combine(&x, &c);
    hx = combine(&hx, &c);
    let mut p: Vec<Vec<f64>> = Vec::new();

    let mut residuals = vec![f64::INFINITY; block];
    for iter in 0..=opts.max_iter {
        let r: Vec<Vec<f64>> = (0..block)
            .map(|i| hx[i].iter().zip(&x[i]).map(|(a, b)| a - theta[i] * b).collect())
            .collect();
        residuals = r.iter().map(|ri| norm(ri)).collect();
        if residuals[..k].iter().all(|&res| res < opts.tol) {
            let scale = 1.0 / grid.cell_volume().sqrt();
            let vectors = x[..k]
                .iter()
                .map(|u| ScalarField::new(grid.clone(), u.iter().map(|a| a * scale).collect()))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Eigenpairs { values: theta[..k].to_vec(), vectors, residuals: residuals[..k].to_vec(), iterations: iter });
        }
        if iter == opts.max_iter {
            break;
        }

        // Search directions: preconditioned residuals of unconverged vectors, then
        // the previous update directions.
        let mut basis: Vec<Vec<f64>> = x.clone();
        let mut h_basis: Vec<Vec<f64>> = hx.clone();
        for (i, ri) in r.iter().enumerate() {
            if residuals[i] < opts.tol {
                continue;
            }
            if let Some(q) = orthonormalize_against(precond.apply(ri), &basis) {
                h_basis.push(apply(&q));
                basis.push(q);
            }
        }
        for pi in p.drain(..) {
            if let Some(q) = orthonormalize_against(pi, &basis) {
                h_basis.push(apply(&q));
                basis.push(q);
            }
        }
        let (values, c) = rayleigh_ritz(&basis, &h_basis, block)?;
        let new_x = combine(&basis, &c);
        hx = combine(&h_basis, &c);
        // Implicit update direction: the part of the new block outside the old one.
        p = (0..block)
            .map(|j| {
                let mut d = vec![0.0; n];
                for (row, b) in basis.iter().enumerate().skip(block) {
                    let w = c[(row, j)];
                    for (di, bi) in d.iter_mut().zip(b) {
                        *di += w * bi;
                    }
                }
                d
            })
            .collect();
        x = new_x;
        theta = values;
    }
    Err(Error::EigenNotConverged { solver: "LOBPCG", iterations: opts.max_iter, residuals: residuals[..k].to_vec() })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two passes of modified Gram-Schmidt against an orthonormal set; `None` if
/// `v` is numerically inside its span.
fn orthonormalize_against(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let original = norm(&v);
    if !(original.is_finite() && original > 0.0) {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let c = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
    }
    let remaining = norm(&v);
    if remaining <= 1e-10 * original {
        return None;
    }
    v.iter_mut().for_each(|vi| *vi /= remaining);
    Some(v)
}

/// Lowest `count` Ritz pairs of the projected operator over an orthonormal basis.
fn rayleigh_ritz(basis: &[Vec<f64>], h_basis: &[Vec<f64>], count: usize) -> Result<(Vec<f64>, Mat<f64>)> {
    let m = basis.len();
    let mut a = Mat::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = 0.5 * (dot(&basis[i], &h_basis[j]) + dot(&basis[j], &h_basis[i]));
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let eig = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Dense(format!("{e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let values = (0..count).map(|i| s[i]).collect();
    let c = Mat::from_fn(m, count, |i, j| u[(i, j)]);
    Ok((values, c))
}

fn combine(vectors: &[Vec<f64>], c: &Mat<f64>) -> Vec<Vec<f64>> {
    let n = vectors[0].len();
    (0..c.ncols())
        .map(|j| {
            let mut out = vec![0.0; n];
            for (i, v) in vectors.iter().enumerate() {
                let w = c[(i, j)];
                if w != 0.0 {
                    for (o, vi) in out.iter_mut().zip(v) {
                        *o += w * vi;
                    }
                }
            }
            out
        })
        .collect()
}

/// Gaussian envelopes times monomials `x^a y^b z^c`, ordered by total degree.
/// Each one is even or odd under every axis reflection through the box center.
fn trial_functions(grid: &Grid, count: usize) -> Vec<Vec<f64>> {
    let dims = grid.dims();
    let center: [f64; 3] = std::array::from_fn(|a| grid.coord(a, 0) + 0.5 * (dims[a] - 1) as f64 * grid.spacing());
    let width = grid.extents().iter().cloned().fold(f64::INFINITY, f64::min) / 6.0;
    let mut monomials = Vec::new();
    'outer: for degree in 0.. {
        for a in (0..=degree).rev() {
            for b in (0..=degree - a).rev() {
                let c = degree - a - b;
                monomials.push([a, b, c]);
                if monomials.len() == count {
                    break 'outer;
                }
            }
        }
    }
    monomials
        .into_iter()
        .map(|[a, b, c]| {
            (0..grid.len())
                .map(|idx| {
                    let p = grid.position(idx);
                    let d = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
                    let r2 = d.iter().map(|t| t * t).sum::<f64>();
                    (-r2 / (2.0 * width * width)).exp() * d[0].powi(a) * d[1].powi(b) * d[2].powi(c)
                })
                .collect()
        })
        .collect()
}

/// Exact `(T + shift)^-1` in the sine basis.
pub(crate) struct KineticPreconditioner {
    dims: [usize; 3],
    plans: [Arc<dyn Fft<f64>>; 3],
    /// `1 / (T_k + shift)` per sine mode, x-fastest.
    inverse_symbol: Vec<f64>,
}

impl KineticPreconditioner {
    pub(crate) fn new(grid: &Grid, shift: f64) -> Self {
        let dims = grid.dims();
        let h = grid.spacing();
        let mut planner = FftPlanner::new();
        let plans = dims.map(|n| planner.plan_fft_forward(2 * (n + 1)));
        let symbol = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|m| {
                    let t = PI * (m + 1) as f64 / (n + 1) as f64;
                    0.5 * (30.0 - 32.0 * t.cos() + 2.0 * (2.0 * t).cos()) / (12.0 * h * h)
                })
                .collect()
        };
        let [sx, sy, sz] = dims.map(symbol);
        let mut inverse_symbol = Vec::with_capacity(grid.len());
        for tz in &sz {
            for ty in &sy {
                for tx in &sx {
                    inverse_symbol.push(1.0 / (tx + ty + tz + shift));
                }
            }
        }
        Self { dims, plans, inverse_symbol }
    }

    pub(crate) fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut u = r.to_vec();
        for axis in 0..3 {
            self.dst_axis(&mut u, axis);
        }
        let norm: f64 = self.dims.iter().map(|&n| 2.0 / (n + 1) as f64).product();
        for (ui, s) in u.iter_mut().zip(&self.inverse_symbol) {
            *ui *= s * norm;
        }
        for axis in 0..3 {
            self.dst_axis(&mut u, axis);
        }
        u
    }

    /// Unnormalized DST-I along one axis: `S_k = sum_j x_j sin(pi (j+1)(k+1)/(n+1))`.
    fn dst_axis(&self, u: &mut [f64], axis: usize) {
        let n = self.dims[axis];
        let m = 2 * (n + 1);
        let plan = &self.plans[axis];
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for_each_line(self.dims, axis, |base, stride, len| {
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for j in 0..len {
                let x = u[base + j * stride];
                buf[j + 1].re = x;
                buf[m - 1 - j].re = -x;
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for k in 0..len {
                u[base + k * stride] = -0.5 * buf[k + 1].im;
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dst_round_trip() {
        let g = Grid::centered([9, 10, 11], 0.5).unwrap();
        let p = KineticPreconditioner::new(&g, 0.0);
        let x: Vec<f64> = (0..g.len()).map(|i| ((i * 37) % 101) as f64 / 101.0 - 0.3).collect();
        let mut y = x.clone();
        for a in 0..3 {
            p.dst_axis(&mut y, a);
        }
        let norm: f64 = g.dims().iter().map(|&n| 2.0 / (n + 1) as f64).product();
        for a in 0..3 {
            p.dst_axis(&mut y, a);
        }
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b * norm).abs() < 1e-12);
        }
    }

    #[test]
    fn preconditioner_inverts_sine_symbol() {
        let g = Grid::centered([12, 10, 9], 0.4).unwrap();
        let shift = 0.7;
        let p = KineticPreconditioner::new(&g, shift);
        let h = g.spacing();
        let (m, dims) = ([2usize, 0, 4], g.dims());
        let theta = |a: usize| PI * (m[a] + 1) as f64 / (dims[a] + 1) as f64;
        let t: f64 = (0..3)
            .map(|a| 0.5 * (30.0 - 32.0 * theta(a).cos() + 2.0 * (2.0 * theta(a)).cos()) / (12.0 * h * h))
            .sum();
        let phi: Vec<f64> = (0..g.len())
            .map(|idx| {
                let c = g.unravel(idx);
                (0..3).map(|a| (theta(a) * (c[a] + 1) as f64).sin()).product()
            })
            .collect();
        let back = p.apply(&phi.iter().map(|v| (t + shift) * v).collect::<Vec<_>>());
        let err = back.iter().zip(&phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn trial_functions_have_definite_parity() {
        let g = Grid::centered([8; 3], 0.5).unwrap();
        for f in trial_functions(&g, 10) {
            let s = ScalarField::new(g.clone(), f).unwrap();
            for axis in 0..3 {
                let mirrored = |i: usize, j: usize, k: usize| match axis {
                    0 => s.at(7 - i, j, k),
                    1 => s.at(i, 7 - j, k),
                    _ => s.at(i, j, 7 - k),
                };
                let even = (0..g.len()).all(|idx| {
                    let [i, j, k] = g.unravel(idx);
                    (s.at(i, j, k) - mirrored(i, j, k)).abs() < 1e-14
                });
                let odd = (0..g.len()).all(|idx| {
                    let [i, j, k] = g.unravel(idx);
                    (s.at(i, j, k) + mirrored(i, j, k)).abs() < 1e-14
                });
                assert!(even || odd);
            }
        }
    }
}
