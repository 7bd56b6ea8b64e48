//! Kohn-Sham Hamiltonian `-1/2 laplacian + v_ext + v_H + v_xc + v_pxc` and its
//! self-consistent solution.

mod eigensolver;
mod hamiltonian;
mod mixing;

pub use eigensolver::{lowest_eigenpairs, lowest_eigenpairs_with, EigenOptions, Eigenpairs};
pub use hamiltonian::{apply_hamiltonian, external_potential};
pub use mixing::Mixing;

use crate::cavity::{dress_all, BareMode, DressedMode};
use crate::fields::{integrate, Grid, ScalarField};
use crate::functionals::{lda_xc_potential, pxc_potential, PxcParams, XcChoice};
use crate::poisson::PoissonSolver;
use crate::{Error, Result};
use mixing::Mixer;

#[derive(Debug, Clone, PartialEq)]
pub struct Nucleus {
    pub position: [f64; 3],
    pub charge: f64,
    /// Softening length `a` of `erf(r / a) / r`.
    pub softening: f64,
}

impl Nucleus {
    pub fn new(position: [f64; 3], charge: f64, softening: f64) -> Result<Self> {
        if !(softening.is_finite() && softening > 0.0) {
            return Err(Error::InvalidInput(format!("softening length must be > 0, got {softening}")));
        }
        if !charge.is_finite() || position.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("nucleus position and charge must be finite".into()));
        }
        Ok(Self { position, charge, softening })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    nuclei: Vec<Nucleus>,
    n_electrons: usize,
    grid: Grid,
    interactions: bool,
}

impl SystemSpec {
    /// Closed shells (even electron count) or a single non-interacting electron.
    pub fn new(nuclei: Vec<Nucleus>, n_electrons: usize, grid: Grid, interactions: bool) -> Result<Self> {
        if n_electrons == 0 {
            return Err(Error::InvalidInput("need at least one electron".into()));
        }
        if n_electrons % 2 == 1 && !(n_electrons == 1 && !interactions) {
            return Err(Error::InvalidInput(format!(
                "{n_electrons} electrons: only closed shells or a single electron with interactions off are supported"
            )));
        }
        Ok(Self { nuclei, n_electrons, grid, interactions })
    }

    pub fn nuclei(&self) -> &[Nucleus] {
        &self.nuclei
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn interactions(&self) -> bool {
        self.interactions
    }

    /// Same system on a different grid.
    pub fn with_grid(&self, grid: Grid) -> Self {
        Self { grid, ..self.clone() }
    }

    pub fn occupied(&self) -> usize {
        if self.n_electrons == 1 {
            1
        } else {
            self.n_electrons / 2
        }
    }

    pub fn occupation(&self) -> f64 {
        if self.n_electrons == 1 {
            1.0
        } else {
            2.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct PotentialSet {
    pub v_ext: ScalarField,
    pub v_h: ScalarField,
    pub v_xc: ScalarField,
    pub v_pxc: ScalarField,
    pub v_ks: ScalarField,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScfRecord {
    pub iter: usize,
    /// `max |rho_out - rho_in|`
    pub density_change: f64,
    /// `max_i |e_i - e_i(previous)|`
    pub eig_drift: f64,
}

#[derive(Debug, Clone)]
pub struct KSState {
    pub orbitals: Vec<ScalarField>,
    pub occupations: Vec<f64>,
    pub density: ScalarField,
    pub potentials: PotentialSet,
    pub eigenvalues: Vec<f64>,
    pub scf_history: Vec<ScfRecord>,
    pub modes: Vec<DressedMode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScfOptions {
    pub mixing: Mixing,
    pub max_iter: usize,
    pub tol_density: f64,
    pub tol_eig: f64,
    pub eigen: EigenOptions,
    /// Override the Poisson non-decaying-source check.
    pub force: bool,
}

impl Default for ScfOptions {
    fn default() -> Self {
        Self {
            mixing: Mixing::default(),
            max_iter: 200,
            tol_density: 1e-7,
            tol_eig: 1e-7,
            eigen: EigenOptions::default(),
            force: false,
        }
    }
}

/// Everything that defines the effective potential apart from the density.
pub struct KohnSham<'a> {
    spec: &'a SystemSpec,
    modes: Vec<DressedMode>,
    pxc: Option<PxcParams>,
    xc: XcChoice,
    solver: PoissonSolver,
    v_ext: ScalarField,
}

impl<'a> KohnSham<'a> {
    /// `pxc = None` disables the electron-photon term entirely.
    pub fn new(spec: &'a SystemSpec, modes: &[BareMode], pxc: Option<PxcParams>, xc: XcChoice, force: bool) -> Result<Self> {
        let modes = dress_all(modes, spec.n_electrons())?;
        Ok(Self {
            spec,
            modes,
            pxc,
            xc,
            solver: PoissonSolver::new(spec.grid()).with_force(force),
            v_ext: external_potential(spec),
        })
    }

    pub fn modes(&self) -> &[DressedMode] {
        &self.modes
    }

    pub fn potentials(&self, rho: &ScalarField) -> Result<PotentialSet> {
        let grid = self.spec.grid();
        grid.ensure_same(rho.grid())?;
        let (v_h, v_xc) = if self.spec.interactions() {
            (self.solver.hartree_potential(rho)?, lda_xc_potential(rho, self.xc))
        } else {
            (ScalarField::zeros(grid), ScalarField::zeros(grid))
        };
        let v_pxc = match &self.pxc {
            Some(params) => pxc_potential(rho, &self.modes, params, &self.solver)?,
            None => ScalarField::zeros(grid),
        };
        let mut v_ks = self.v_ext.clone();
        for term in [&v_h, &v_xc, &v_pxc] {
            v_ks.axpy(1.0, term)?;
        }
        Ok(PotentialSet { v_ext: self.v_ext.clone(), v_h, v_xc, v_pxc, v_ks })
    }

    fn density(&self, orbitals: &[ScalarField]) -> ScalarField {
        let mut rho = ScalarField::zeros(self.spec.grid());
        let occ = self.spec.occupation();
        for phi in orbitals {
            for (r, p) in rho.values_mut().iter_mut().zip(phi.values()) {
                *r += occ * p * p;
            }
        }
        rho
    }

    pub fn solve(&self, opts: &ScfOptions) -> Result<KSState> {
        self.solve_from(opts, None)
    }

    /// Start from a previous state on the same grid (its density and
    /// orbitals) instead of the bare external-potential eigenstates.
    pub fn solve_from(&self, opts: &ScfOptions, start: Option<&KSState>) -> Result<KSState> {
        opts.mixing.validate()?;
        let k = self.spec.occupied();
        let (mut pairs, mut rho_in) = match start {
            Some(s) if s.orbitals.len() == k => {
                self.spec.grid().ensure_same(s.density.grid())?;
                let pairs = Eigenpairs {
                    values: s.eigenvalues.clone(),
                    vectors: s.orbitals.clone(),
                    residuals: vec![0.0; k],
                    iterations: 0,
                };
                (pairs, s.density.clone())
            }
            Some(_) => return Err(Error::InvalidInput("start state has the wrong number of orbitals".into())),
            None => {
                let pairs = lowest_eigenpairs_with(&self.v_ext, k, &opts.eigen, &[])?;
                let rho = self.density(&pairs.vectors);
                (pairs, rho)
            }
        };
        let mut history = Vec::new();
        let mut mixer = Mixer::new(opts.mixing);
        let mut last = (f64::INFINITY, f64::INFINITY);

        for iter in 1..=opts.max_iter {
            let potentials = self.potentials(&rho_in)?;
            let next = lowest_eigenpairs_with(&potentials.v_ks, k, &opts.eigen, &pairs.vectors)?;
            let rho_out = self.density(&next.vectors);
            let density_change = rho_out.max_abs_diff(&rho_in)?;
            let eig_drift = next
                .values
                .iter()
                .zip(&pairs.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            history.push(ScfRecord { iter, density_change, eig_drift });
            log::debug!("scf {iter}: density change {density_change:.3e}, eigenvalue drift {eig_drift:.3e}");
            pairs = next;
            last = (density_change, eig_drift);
            if density_change < opts.tol_density && eig_drift < opts.tol_eig {
                return Ok(KSState {
                    occupations: vec![self.spec.occupation(); k],
                    orbitals: pairs.vectors,
                    eigenvalues: pairs.values,
                    density: rho_out,
                    potentials,
                    scf_history: history,
                    modes: self.modes.clone(),
                });
            }
            rho_in = mixer.next(&rho_in, &rho_out);
            debug_assert!((integrate(&rho_in) - self.spec.n_electrons() as f64).abs() < 1e-8);
        }
        Err(Error::ScfNotConverged { iterations: opts.max_iter, density_change: last.0, eig_drift: last.1, history })
    }
}

/// Self-consistent Kohn-Sham ground state. Modes are dressed with the system's
/// electron count; `pxc = None` switches the electron-photon potential off.
pub fn scf(
    spec: &SystemSpec,
    modes: &[BareMode],
    pxc: Option<PxcParams>,
    xc: XcChoice,
    opts: &ScfOptions,
) -> Result<KSState> {
    KohnSham::new(spec, modes, pxc, xc, opts.force)?.solve(opts)
}
