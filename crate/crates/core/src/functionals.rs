//! Exchange-correlation potentials: electron LDA and the photon-free
//! electron-photon (pxc) potential.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::cavity::DressedMode;
use crate::fields::{directional_second_derivative, ScalarField};
use crate::poisson::PoissonSolver;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XcChoice {
    None,
    SlaterExchangeOnly,
    #[default]
    LdaPz81,
}

impl FromStr for XcChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(XcChoice::None),
            "slater" | "slater_exchange_only" => Ok(XcChoice::SlaterExchangeOnly),
            "lda" | "lda_pz81" | "pz81" => Ok(XcChoice::LdaPz81),
            other => Err(Error::InvalidInput(format!(
                "unknown xc choice '{other}' (expected none, slater_exchange_only, lda_pz81)"
            ))),
        }
    }
}

impl XcChoice {
    pub fn name(&self) -> &'static str {
        match self {
            XcChoice::None => "none",
            XcChoice::SlaterExchangeOnly => "slater_exchange_only",
            XcChoice::LdaPz81 => "lda_pz81",
        }
    }
}

/// Perdew-Zunger 1981 parameters, spin-unpolarized branch.
mod pz81 {
    pub const GAMMA: f64 = -0.1423;
    pub const BETA1: f64 = 1.0529;
    pub const BETA2: f64 = 0.3334;
    pub const A: f64 = 0.0311;
    pub const B: f64 = -0.048;
    pub const C: f64 = 0.0020;
    pub const D: f64 = -0.0116;
}

/// Slater exchange potential `-(3 rho / pi)^(1/3)`.
pub fn slater_exchange(rho: f64) -> f64 {
    if rho <= 0.0 {
        0.0
    } else {
        -(3.0 * rho / PI).cbrt()
    }
}

/// PZ81 correlation potential `d(rho e_c)/d rho` for the unpolarized gas.
pub fn pz81_correlation(rho: f64) -> f64 {
    use pz81::*;
    if rho <= 0.0 {
        return 0.0;
    }
    let rs = (3.0 / (4.0 * PI * rho)).cbrt();
    if rs >= 1.0 {
        let sq = rs.sqrt();
        let denom = 1.0 + BETA1 * sq + BETA2 * rs;
        let ec = GAMMA / denom;
        ec * (1.0 + 7.0 / 6.0 * BETA1 * sq + 4.0 / 3.0 * BETA2 * rs) / denom
    } else {
        let ln = rs.ln();
        A * ln + (B - A / 3.0) + 2.0 / 3.0 * C * rs * ln + (2.0 * D - C) / 3.0 * rs
    }
}

pub fn lda_xc_potential(rho: &ScalarField, choice: XcChoice) -> ScalarField {
    match choice {
        XcChoice::None => ScalarField::zeros(rho.grid()),
        XcChoice::SlaterExchangeOnly => rho.map(slater_exchange),
        XcChoice::LdaPz81 => rho.map(|r| slater_exchange(r) + pz81_correlation(r)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PxcParams {
    /// Renormalization factor; 1.0 gives the exchange-only pxLDA.
    pub eta_c: f64,
    /// Densities below this are treated as zero before the 2/3 power.
    pub density_floor: f64,
}

impl Default for PxcParams {
    fn default() -> Self {
        Self { eta_c: 1.0, density_floor: 1e-12 }
    }
}

impl PxcParams {
    pub fn new(eta_c: f64, density_floor: f64) -> Result<Self> {
        if !(eta_c.is_finite() && eta_c >= 0.0) {
            return Err(Error::InvalidInput(format!("eta_c must be >= 0, got {eta_c}")));
        }
        if !(density_floor.is_finite() && density_floor >= 0.0) {
            return Err(Error::InvalidInput(format!("density floor must be >= 0, got {density_floor}")));
        }
        Ok(Self { eta_c, density_floor })
    }

    pub fn with_eta(self, eta_c: f64) -> Result<Self> {
        Self::new(eta_c, self.density_floor)
    }
}

/// Right-hand side of the pxc Poisson equation:
/// `-eta_c * sum_a (2 pi^2 lambda_a^2 / omega_a^2) (e_a . grad)^2 (3 rho / 8 pi)^(2/3)`.
pub fn pxc_source(rho: &ScalarField, modes: &[DressedMode], params: &PxcParams) -> ScalarField {
    let mut out = ScalarField::zeros(rho.grid());
    let active: Vec<&DressedMode> = modes.iter().filter(|m| m.lambda_tilde != 0.0).collect();
    if params.eta_c == 0.0 || active.is_empty() {
        return out;
    }
    let floor = params.density_floor;
    let s = rho.map(|r| if r < floor || r <= 0.0 { 0.0 } else { (3.0 * r / (8.0 * PI)).powf(2.0 / 3.0) });
    for mode in active {
        let weight = -params.eta_c * 2.0 * PI * PI * mode.coupling_ratio();
        let dd = directional_second_derivative(&s, &mode.epsilon);
        out.axpy(weight, &dd).expect("same grid");
    }
    out
}

/// pxc potential: the free-space solution of `laplacian(v) = pxc_source`.
pub fn pxc_potential(
    rho: &ScalarField,
    modes: &[DressedMode],
    params: &PxcParams,
    solver: &PoissonSolver,
) -> Result<ScalarField> {
    solver.grid().ensure_same(rho.grid())?;
    solver.solve_free_space(&pxc_source(rho, modes, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{integrate, Direction, Grid};

    fn gaussian_density(grid: &Grid) -> ScalarField {
        ScalarField::from_fn(grid, |[x, y, z]| 2.0 * PI.powf(-1.5) * (-(x * x + y * y + z * z)).exp())
    }

    fn z_mode(lambda: f64) -> DressedMode {
        DressedMode { omega_tilde: 0.2, lambda_tilde: lambda, epsilon: Direction::Z }
    }

    #[test]
    fn xc_of_zero_density_is_zero() {
        let g = Grid::centered([8; 3], 0.5).unwrap();
        for c in [XcChoice::None, XcChoice::SlaterExchangeOnly, XcChoice::LdaPz81] {
            assert_eq!(lda_xc_potential(&ScalarField::zeros(&g), c).max_abs(), 0.0);
        }
    }

    #[test]
    fn slater_exchange_example() {
        assert!((slater_exchange(PI / 3.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pz81_regression_values() {
        // Independent scalar evaluation of the published PZ81 formulas.
        let rho_of = |rs: f64| 3.0 / (4.0 * PI * rs.powi(3));
        assert!((pz81_correlation(rho_of(1.0)) - -0.06679442823281624).abs() < 1e-14);
        assert!((pz81_correlation(rho_of(2.0)) - -0.051812941923196104).abs() < 1e-14);
        assert!((pz81_correlation(rho_of(0.5)) - -0.08458564210245426).abs() < 1e-14);
    }

    #[test]
    fn source_vanishes_in_trivial_limits() {
        let g = Grid::cube(4.0, 0.25).unwrap();
        let rho = gaussian_density(&g);
        let p = PxcParams::default();
        let uniform = ScalarField::constant(&g, 0.3);
        let s = pxc_source(&uniform, &[z_mode(0.1)], &p);
        for idx in 0..g.len() {
            let [i, j, k] = g.unravel(idx);
            if k >= 2 && k + 2 < g.dims()[2] {
                assert!(s.values()[idx].abs() < 1e-12, "{i} {j} {k}");
            }
        }
        assert_eq!(pxc_source(&rho, &[z_mode(0.1)], &p.with_eta(0.0).unwrap()).max_abs(), 0.0);
        assert_eq!(pxc_source(&rho, &[z_mode(0.0)], &p).max_abs(), 0.0);
    }

    #[test]
    fn source_integrates_to_zero() {
        let g = Grid::cube(8.0, 0.25).unwrap();
        let rho = gaussian_density(&g);
        let s = pxc_source(&rho, &[z_mode(0.05)], &PxcParams::default());
        assert!(integrate(&s).abs() < 1e-8 * s.max_abs(), "{}", integrate(&s));
    }

    #[test]
    fn potential_is_linear_in_eta_and_coupling() {
        let g = Grid::cube(5.0, 0.25).unwrap();
        let solver = PoissonSolver::new(&g);
        let rho = gaussian_density(&g);
        let p = PxcParams::default();
        let v1 = pxc_potential(&rho, &[z_mode(0.05)], &p.with_eta(0.3).unwrap(), &solver).unwrap();
        let v2 = pxc_potential(&rho, &[z_mode(0.05)], &p.with_eta(0.6).unwrap(), &solver).unwrap();
        assert!(v2.max_abs_diff(&v1.scaled(2.0)).unwrap() <= 1e-12 * v1.max_abs().max(1.0));
        // lambda^2 doubled at fixed omega.
        let v3 = pxc_potential(&rho, &[z_mode(0.05 * 2f64.sqrt())], &p.with_eta(0.3).unwrap(), &solver).unwrap();
        assert!(v3.max_abs_diff(&v1.scaled(2.0)).unwrap() <= 1e-12 * v1.max_abs().max(1.0));
        // Opposite polarization sign gives the same potential.
        let flipped = DressedMode { epsilon: Direction::Z.negated(), ..z_mode(0.05) };
        let v4 = pxc_potential(&rho, &[flipped], &p.with_eta(0.3).unwrap(), &solver).unwrap();
        assert_eq!(v4.values(), v1.values());
    }

    #[test]
    fn potential_symmetry_for_spherical_density() {
        let g = Grid::cube(6.0, 0.25).unwrap();
        let solver = PoissonSolver::new(&g);
        let rho = gaussian_density(&g);
        let v = pxc_potential(&rho, &[z_mode(0.1)], &PxcParams::default(), &solver).unwrap();
        let n = g.dims()[0];
        let scale = v.max_abs();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let a = v.at(i, j, k);
                    // z -> -z
                    assert!((a - v.at(i, j, n - 1 - k)).abs() < 1e-12 * scale);
                    // 90 degree rotation about z: (x, y) -> (-y, x)
                    assert!((a - v.at(n - 1 - j, i, k)).abs() < 1e-12 * scale);
                }
            }
        }
        // Anisotropic: the potential differs between the z axis and the x axis.
        let c = n / 2;
        assert!((v.at(c, c, c + 6) - v.at(c + 6, c, c)).abs() > 1e-6 * scale);
    }
}
