//! Exact one-electron ground state of the dressed single-mode Pauli-Fierz
//! Hamiltonian in velocity gauge, on a grid times truncated Fock basis.
//!
//! A state is stored photon-block major: entry `n * N + p` is the amplitude of
//! grid point `p` with `n` photons.

use faer::{c64, Mat, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cavity::{dress, BareMode, DressedMode};
use crate::compare::i_metric;
use crate::fields::{for_each_line, Grid, ScalarField, FIRST_DERIVATIVE, SECOND_DERIVATIVE};
use crate::kohn_sham::{external_potential, SystemSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PFConfig {
    spec: SystemSpec,
    mode: DressedMode,
    n_max: usize,
    /// Residual tolerance of the normalized ground state.
    pub eig_tol: f64,
    /// Seed of the Lanczos start vector.
    pub seed: u64,
    /// Largest Krylov basis before a restart.
    pub krylov_dim: usize,
    pub max_matvecs: usize,
}

impl PFConfig {
    /// One electron, interactions off; the mode is dressed with `N_e = 1`.
    pub fn new(spec: SystemSpec, mode: &BareMode, n_max: usize) -> Result<Self> {
        if spec.n_electrons() != 1 || spec.interactions() {
            return Err(Error::InvalidInput(format!(
                "the oracle handles exactly one non-interacting electron (got n_electrons = {}, interactions = {})",
                spec.n_electrons(),
                if spec.interactions() { "on" } else { "off" }
            )));
        }
        if n_max < 1 {
            return Err(Error::InvalidInput("n_max must be at least 1".into()));
        }
        let mode = dress(mode, 1)?;
        Ok(Self { spec, mode, n_max, eig_tol: 1e-8, seed: 1, krylov_dim: 40, max_matvecs: 20_000 })
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn mode(&self) -> &DressedMode {
        &self.mode
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidInput("n_max must be at least 1".into()));
        }
        Ok(Self { n_max, ..self.clone() })
    }

    /// Length of a grid times Fock vector.
    pub fn dim(&self) -> usize {
        self.spec.grid().len() * (self.n_max + 1)
    }
}

/// Matrix-free Pauli-Fierz operator.
pub struct PauliFierz {
    dims: [usize; 3],
    h: f64,
    v: Vec<f64>,
    omega: f64,
    g: f64,
    eps: [f64; 3],
    blocks: usize,
}

impl PauliFierz {
    pub fn new(cfg: &PFConfig) -> Self {
        let grid = cfg.spec.grid();
        Self {
            dims: grid.dims(),
            h: grid.spacing(),
            v: external_potential(&cfg.spec).into_values(),
            omega: cfg.mode.omega_tilde,
            g: cfg.mode.photon_coupling(),
            eps: cfg.mode.epsilon.components(),
            blocks: cfg.n_max + 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.v.len() * self.blocks
    }

    /// `out = H psi`.
    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        if psi.len() != self.dim() || out.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "state length {} / {} does not match grid x Fock dimension {}",
                psi.len(),
                out.len(),
                self.dim()
            )));
        }
        let n = self.v.len();
        let mut d = vec![Complex64::new(0.0, 0.0); n];
        out.fill(Complex64::new(0.0, 0.0));
        let kin = -0.5 / (self.h * self.h);
        for b in 0..self.blocks {
            let src = &psi[b * n..(b + 1) * n];
            let dst = &mut out[b * n..(b + 1) * n];
            let photon = self.omega * (b as f64 + 0.5);
            for ((o, s), v) in dst.iter_mut().zip(src).zip(&self.v) {
                *o += s * (v + photon);
            }
            for axis in 0..3 {
                stencil(src, dst, self.dims, axis, &SECOND_DERIVATIVE, kin);
            }
        }
        if self.g == 0.0 {
            return Ok(());
        }
        for b in 0..self.blocks {
            // d = -i eps . grad psi_b, then feed the neighbouring photon blocks.
            d.fill(Complex64::new(0.0, 0.0));
            for axis in 0..3 {
                if self.eps[axis] != 0.0 {
                    stencil(&psi[b * n..(b + 1) * n], &mut d, self.dims, axis, &FIRST_DERIVATIVE, self.eps[axis] / self.h);
                }
            }
            let mi = Complex64::new(0.0, -self.g);
            if b > 0 {
                // a^dagger-free part: <b-1| (a + a^dagger) |b> = sqrt(b)
                let c = mi * (b as f64).sqrt();
                for (o, x) in out[(b - 1) * n..b * n].iter_mut().zip(&d) {
                    *o += c * x;
                }
            }
            if b + 1 < self.blocks {
                let c = mi * ((b + 1) as f64).sqrt();
                for (o, x) in out[(b + 1) * n..(b + 2) * n].iter_mut().zip(&d) {
                    *o += c * x;
                }
            }
        }
        Ok(())
    }
}

fn stencil(input: &[Complex64], out: &mut [Complex64], dims: [usize; 3], axis: usize, weights: &[f64; 5], scale: f64) {
    for_each_line(dims, axis, |base, stride, n| {
        for c in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (w, o) in weights.iter().zip(-2isize..=2) {
                let t = c as isize + o;
                if *w != 0.0 && t >= 0 && (t as usize) < n {
                    acc += input[base + t as usize * stride] * w;
                }
            }
            out[base + c * stride] += acc * scale;
        }
    });
}

/// `H psi` for the configuration's operator.
pub fn pf_matvec(psi: &[Complex64], cfg: &PFConfig) -> Result<Vec<Complex64>> {
    let op = PauliFierz::new(cfg);
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    op.apply(psi, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PFGroundState {
    pub energy: f64,
    /// Normalized so that `sum |psi|^2 h^3 = 1`.
    pub wavefunction: Vec<Complex64>,
    /// `sum_n |psi(r, n)|^2`.
    pub electron_density: ScalarField,
    pub residual: f64,
    pub matvecs: usize,
    /// Mean photon number.
    pub photon_number: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Lowest Ritz pairs of the leading `k x k` block of `t`.
fn ritz(t: &[Vec<Complex64>], k: usize) -> Result<(Vec<f64>, Mat<c64>)> {
    let m = Mat::<c64>::from_fn(k, k, |i, j| t[i][j]);
    let eig = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Dense(format!("{e:?}")))?;
    let s = eig.S().column_vector();
    let values = (0..k).map(|i| s[i].re).collect();
    Ok((values, eig.U().to_owned()))
}

/// Ground state by thick-restart Lanczos with full reorthogonalization.
pub fn pf_ground_state(cfg: &PFConfig) -> Result<PFGroundState> {
    pf_ground_state_from(cfg, None)
}

/// As [`pf_ground_state`], optionally starting from a guess of matching length.
pub fn pf_ground_state_from(cfg: &PFConfig, guess: Option<&[Complex64]>) -> Result<PFGroundState> {
    let op = PauliFierz::new(cfg);
    let dim = op.dim();
    let m = cfg.krylov_dim.clamp(4, dim);
    let keep = 4.min(m - 2);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut start: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    if let Some(g) = guess {
        if g.len() != dim {
            return Err(Error::InvalidInput(format!("start vector length {} != {dim}", g.len())));
        }
        let scale = norm(g) / norm(&start) * 1e-3;
        for (s, x) in start.iter_mut().zip(g) {
            *s = x + *s * scale;
        }
    }
    let s = norm(&start);
    start.iter_mut().for_each(|x| *x /= s);

    let mut basis: Vec<Vec<Complex64>> = vec![start];
    let mut t = vec![vec![Complex64::new(0.0, 0.0); m]; m];
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut matvecs = 0;
    let mut residual;
    loop {
        let j = basis.len() - 1;
        op.apply(&basis[j], &mut w)?;
        matvecs += 1;
        for i in 0..=j {
            t[i][j] = Complex64::new(0.0, 0.0);
        }
        for _ in 0..2 {
            for i in 0..=j {
                let c = dot(&basis[i], &w);
                t[i][j] += c;
                for (x, b) in w.iter_mut().zip(&basis[i]) {
                    *x -= c * b;
                }
            }
        }
        t[j][j] = Complex64::new(t[j][j].re, 0.0);
        for i in 0..j {
            t[j][i] = t[i][j].conj();
        }
        let beta = norm(&w);
        let (theta, y) = ritz(&t, j + 1)?;
        residual = beta * y[(j, 0)].norm();
        let done = residual < cfg.eig_tol || beta < 1e-14;
        if done || j + 1 == m || matvecs >= cfg.max_matvecs {
            let nkeep = if done || matvecs >= cfg.max_matvecs { 1 } else { keep };
            let kept: Vec<Vec<Complex64>> = (0..nkeep)
                .map(|l| {
                    let mut x = vec![Complex64::new(0.0, 0.0); dim];
                    for (i, b) in basis.iter().enumerate() {
                        let c = y[(i, l)];
                        for (xi, bi) in x.iter_mut().zip(b) {
                            *xi += c * bi;
                        }
                    }
                    let s = norm(&x);
                    x.iter_mut().for_each(|v| *v /= s);
                    x
                })
                .collect();
            if done {
                return Ok(finish(cfg, theta[0], kept.into_iter().next().unwrap(), residual, matvecs));
            }
            if matvecs >= cfg.max_matvecs {
                break;
            }
            log::debug!("lanczos restart after {matvecs} matvecs: E = {:.12} residual {residual:.3e}", theta[0]);
            basis = kept;
            for row in t.iter_mut() {
                row.fill(Complex64::new(0.0, 0.0));
            }
            for (l, th) in theta.iter().take(nkeep).enumerate() {
                t[l][l] = Complex64::new(*th, 0.0);
            }
        }
        basis.push(w.iter().map(|x| x / beta).collect());
    }
    Err(Error::EigenNotConverged { solver: "lanczos", iterations: matvecs, residuals: vec![residual] })
}

fn finish(cfg: &PFConfig, energy: f64, unit: Vec<Complex64>, residual: f64, matvecs: usize) -> PFGroundState {
    let grid = cfg.spec.grid();
    let n = grid.len();
    let scale = grid.cell_volume().sqrt().recip();
    let wavefunction: Vec<Complex64> = unit.iter().map(|x| x * scale).collect();
    let mut rho = vec![0.0; n];
    let mut photon_number = 0.0;
    for (b, block) in wavefunction.chunks(n).enumerate() {
        let mut weight = 0.0;
        for (r, x) in rho.iter_mut().zip(block) {
            *r += x.norm_sqr();
            weight += x.norm_sqr();
        }
        photon_number += b as f64 * weight * grid.cell_volume();
    }
    let electron_density = ScalarField::new(grid.clone(), rho).expect("density length matches grid");
    PFGroundState { energy, wavefunction, electron_density, residual, matvecs, photon_number }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockRow {
    pub n_max: usize,
    pub energy: f64,
    /// `I` between this density and the previous row's; `None` on the first row.
    pub i_vs_prev: Option<f64>,
}

/// Ground state for each truncation in ascending `n_max_list`.
pub fn fock_convergence(cfg: &PFConfig, n_max_list: &[usize]) -> Result<(Vec<FockRow>, PFGroundState)> {
    if n_max_list.is_empty() || n_max_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(format!("n_max list must be non-empty and ascending, got {n_max_list:?}")));
    }
    let n = cfg.spec.grid().len();
    let mut rows = Vec::new();
    let mut prev: Option<PFGroundState> = None;
    for &n_max in n_max_list {
        let c = cfg.with_n_max(n_max)?;
        // Warm start: previous state padded with empty photon blocks.
        let guess = prev.as_ref().map(|p| {
            let mut g = p.wavefunction.clone();
            g.resize(c.dim(), Complex64::new(0.0, 0.0));
            g.truncate(n * (n_max + 1));
            g
        });
        let state = pf_ground_state_from(&c, guess.as_deref())?;
        let i_vs_prev = match &prev {
            Some(p) => Some(i_metric(&p.electron_density, &state.electron_density)?),
            None => None,
        };
        log::info!("n_max = {n_max}: E0 = {:.12} Ha ({} matvecs)", state.energy, state.matvecs);
        rows.push(FockRow { n_max, energy: state.energy, i_vs_prev });
        prev = Some(state);
    }
    Ok((rows, prev.expect("non-empty list")))
}

/// `n_max,E0_ha,I_vs_prev` rows; the first row leaves `I_vs_prev` empty.
pub fn fock_csv(rows: &[FockRow]) -> String {
    let mut out = String::from("n_max,E0_ha,I_vs_prev\n");
    for r in rows {
        let i = r.i_vs_prev.map_or(String::new(), |v| format!("{v:.17e}"));
        out.push_str(&format!("{},{:.17e},{}\n", r.n_max, r.energy, i));
    }
    out
}

/// Dense Hamiltonian, one matvec per basis vector. Intended for small grids.
pub fn assemble_dense(cfg: &PFConfig) -> Result<Mat<c64>> {
    let op = PauliFierz::new(cfg);
    let dim = op.dim();
    let mut m = Mat::<c64>::zeros(dim, dim);
    let mut e = vec![Complex64::new(0.0, 0.0); dim];
    let mut col = vec![Complex64::new(0.0, 0.0); dim];
    for j in 0..dim {
        e[j] = Complex64::new(1.0, 0.0);
        op.apply(&e, &mut col)?;
        e[j] = Complex64::new(0.0, 0.0);
        for (i, c) in col.iter().enumerate() {
            m[(i, j)] = *c;
        }
    }
    Ok(m)
}

/// Lowest eigenvalue of the dense Hamiltonian.
pub fn dense_ground_energy(cfg: &PFConfig) -> Result<f64> {
    let m = assemble_dense(cfg)?;
    let values = m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Dense(format!("{e:?}")))?;
    Ok(values[0])
}

/// Grid used by default for oracle runs.
pub fn default_oracle_grid() -> Grid {
    Grid::cube(8.0, 0.4).expect("valid default oracle grid")
}
