//! Density mixing for the SCF loop.

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::fields::{integrate, ScalarField};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mixing {
    Linear { alpha: f64 },
    /// DIIS on the density residual `rho_out - rho_in`.
    Pulay { alpha: f64, depth: usize },
}

impl Default for Mixing {
    fn default() -> Self {
        Mixing::Linear { alpha: 0.3 }
    }
}

impl Mixing {
    pub fn alpha(&self) -> f64 {
        match *self {
            Mixing::Linear { alpha } | Mixing::Pulay { alpha, .. } => alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let alpha = self.alpha();
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!("mixing alpha must be in (0, 1], got {alpha}")));
        }
        if let Mixing::Pulay { depth: 0, .. } = self {
            return Err(Error::InvalidInput("Pulay depth must be >= 1".into()));
        }
        Ok(())
    }
}

pub(crate) struct Mixer {
    scheme: Mixing,
    inputs: Vec<Vec<f64>>,
    residuals: Vec<Vec<f64>>,
}

impl Mixer {
    pub(crate) fn new(scheme: Mixing) -> Self {
        Self { scheme, inputs: Vec::new(), residuals: Vec::new() }
    }

    /// Next input density from the last input/output pair. The result keeps the
    /// electron count of `rho_out`.
    pub(crate) fn next(&mut self, rho_in: &ScalarField, rho_out: &ScalarField) -> ScalarField {
        let residual: Vec<f64> = rho_out.values().iter().zip(rho_in.values()).map(|(o, i)| o - i).collect();
        match self.scheme {
            Mixing::Linear { alpha } => {
                let values = rho_in.values().iter().zip(&residual).map(|(i, r)| i + alpha * r).collect();
                ScalarField::new(rho_in.grid().clone(), values).expect("same grid")
            }
            Mixing::Pulay { alpha, depth } => {
                self.inputs.push(rho_in.values().to_vec());
                self.residuals.push(residual);
                if self.inputs.len() > depth {
                    self.inputs.remove(0);
                    self.residuals.remove(0);
                }
                let coeffs = diis_coefficients(&self.residuals);
                let n = rho_in.values().len();
                let mut values = vec![0.0; n];
                for ((c, input), res) in coeffs.iter().zip(&self.inputs).zip(&self.residuals) {
                    for ((v, i), r) in values.iter_mut().zip(input).zip(res) {
                        *v += c * (i + alpha * r);
                    }
                }
                // Extrapolation can undershoot in the tails.
                let target = integrate(rho_out);
                values.iter_mut().for_each(|v| *v = v.max(0.0));
                let mut rho = ScalarField::new(rho_in.grid().clone(), values).expect("same grid");
                let total = integrate(&rho);
                if total > 0.0 {
                    rho = rho.scaled(target / total);
                }
                rho
            }
        }
    }
}

/// Minimize `|sum c_i R_i|` subject to `sum c_i = 1`; falls back to the latest
/// residual alone when the system is singular.
fn diis_coefficients(residuals: &[Vec<f64>]) -> Vec<f64> {
    let m = residuals.len();
    let mut a = Mat::<f64>::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..=i {
            let v: f64 = residuals[i].iter().zip(&residuals[j]).map(|(x, y)| x * y).sum();
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
        a[(i, m)] = -1.0;
        a[(m, i)] = -1.0;
    }
    // Scale the residual block to keep the bordered system well conditioned.
    let scale = (0..m).map(|i| a[(i, i)]).fold(0.0, f64::max);
    if scale > 0.0 {
        for i in 0..m {
            for j in 0..m {
                a[(i, j)] /= scale;
            }
        }
    }
    let mut rhs = Mat::<f64>::zeros(m + 1, 1);
    rhs[(m, 0)] = -1.0;
    let sol = a.partial_piv_lu().solve(&rhs);
    let coeffs: Vec<f64> = (0..m).map(|i| sol[(i, 0)]).collect();
    let sum: f64 = coeffs.iter().sum();
    if coeffs.iter().all(|c| c.is_finite()) && (sum - 1.0).abs() < 1e-6 {
        coeffs
    } else {
        let mut c = vec![0.0; m];
        c[m - 1] = 1.0;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    #[test]
    fn diis_solves_two_residual_case() {
        // R1 = (1, 0), R2 = (-1, 0): the combination 1/2 R1 + 1/2 R2 vanishes.
        let c = diis_coefficients(&[vec![1.0, 0.0], vec![-1.0, 0.0]]);
        assert!((c[0] - 0.5).abs() < 1e-12 && (c[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn linear_mixing_preserves_electron_count() {
        let g = Grid::centered([8; 3], 0.5).unwrap();
        let a = ScalarField::from_fn(&g, |[x, y, z]| (-(x * x + y * y + z * z)).exp());
        let b = ScalarField::from_fn(&g, |[x, y, z]| (-(x * x + y * y + 2.0 * z * z)).exp());
        let b = b.scaled(integrate(&a) / integrate(&b));
        let mut m = Mixer::new(Mixing::Linear { alpha: 0.3 });
        let mixed = m.next(&a, &b);
        assert!((integrate(&mixed) - integrate(&a)).abs() < 1e-12);
        let mut p = Mixer::new(Mixing::Pulay { alpha: 0.3, depth: 5 });
        let first = p.next(&a, &b);
        let second = p.next(&first, &b);
        assert!((integrate(&second) - integrate(&b)).abs() < 1e-12);
    }
}
