//! Cavity modes in the long-wavelength limit.
//!
//! The diamagnetic term is absorbed into a dressed mode with
//! `omega_tilde^2 = omega^2 + N_e lambda^2` and unchanged strength.

use crate::fields::Direction;
use crate::{Error, Result};

/// Hartree energy in eV (CODATA 2018).
pub const HARTREE_EV: f64 = 27.211_386_245_988;

pub fn ev_to_hartree(ev: f64) -> f64 {
    ev / HARTREE_EV
}

/// Cavity mode as specified by the user: frequency (Hartree), strength (a.u.)
/// and polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BareMode {
    omega: f64,
    lambda: f64,
    epsilon: Direction,
}

impl BareMode {
    pub fn new(omega: f64, lambda: f64, epsilon: Direction) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidInput(format!("cavity frequency must be > 0, got {omega}")));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("mode strength must be >= 0, got {lambda}")));
        }
        Ok(Self { omega, lambda, epsilon })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epsilon(&self) -> Direction {
        self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedMode {
    pub omega_tilde: f64,
    pub lambda_tilde: f64,
    pub epsilon: Direction,
}

impl DressedMode {
    /// `lambda_tilde^2 / omega_tilde^2`, the per-mode weight of the pxc source.
    pub fn coupling_ratio(&self) -> f64 {
        (self.lambda_tilde / self.omega_tilde).powi(2)
    }

    /// Prefactor `lambda_tilde / sqrt(2 omega_tilde)` of `(a + a^dagger)` in the
    /// velocity-gauge coupling.
    pub fn photon_coupling(&self) -> f64 {
        self.lambda_tilde / (2.0 * self.omega_tilde).sqrt()
    }
}

pub fn dress(mode: &BareMode, n_electrons: usize) -> Result<DressedMode> {
    if n_electrons == 0 {
        return Err(Error::InvalidInput("dressing needs at least one electron".into()));
    }
    let omega_tilde = (mode.omega * mode.omega + n_electrons as f64 * mode.lambda * mode.lambda).sqrt();
    Ok(DressedMode { omega_tilde, lambda_tilde: mode.lambda, epsilon: mode.epsilon })
}

/// Each mode is dressed on its own with the same electron count. The exact
/// multi-mode dressing is not diagonal; use a single mode for quantitative work.
pub fn dress_all(modes: &[BareMode], n_electrons: usize) -> Result<Vec<DressedMode>> {
    if modes.len() > 1 {
        log::warn!("{} cavity modes dressed independently; multi-mode dressing is approximate", modes.len());
    }
    modes.iter().map(|m| dress(m, n_electrons)).collect()
}

/// `N_e lambda_tilde^2 / omega_tilde^2`, a diagnostic of collective coupling strength.
pub fn collective_coupling(mode: &DressedMode, n_electrons: usize) -> f64 {
    n_electrons as f64 * mode.coupling_ratio()
}
