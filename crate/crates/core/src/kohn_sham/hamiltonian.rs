use std::f64::consts::PI;

use libm::erf;

use super::SystemSpec;
use crate::fields::stencil::apply_axis;
use crate::fields::{ScalarField, SECOND_DERIVATIVE};
use crate::Result;

/// `out = -1/2 laplacian(u) + v u` on raw x-fastest arrays.
pub(crate) fn apply_hamiltonian_raw(v: &[f64], u: &[f64], out: &mut [f64], dims: [usize; 3], h: f64) {
    for ((o, vi), ui) in out.iter_mut().zip(v).zip(u) {
        *o = vi * ui;
    }
    let scale = -0.5 / (h * h);
    for axis in 0..3 {
        apply_axis(u, out, dims, axis, &SECOND_DERIVATIVE, scale);
    }
}

/// `-1/2 laplacian(phi) + v phi`.
pub fn apply_hamiltonian(phi: &ScalarField, v: &ScalarField) -> Result<ScalarField> {
    phi.grid().ensure_same(v.grid())?;
    let grid = phi.grid();
    let mut out = ScalarField::zeros(grid);
    apply_hamiltonian_raw(v.values(), phi.values(), out.values_mut(), grid.dims(), grid.spacing());
    Ok(out)
}

/// Error-function softened nuclear attraction, `-sum Z erf(|r - R| / a) / |r - R|`.
pub fn external_potential(spec: &SystemSpec) -> ScalarField {
    ScalarField::from_fn(spec.grid(), |p| {
        spec.nuclei()
            .iter()
            .map(|nuc| {
                let d = ((p[0] - nuc.position[0]).powi(2)
                    + (p[1] - nuc.position[1]).powi(2)
                    + (p[2] - nuc.position[2]).powi(2))
                .sqrt();
                let a = nuc.softening;
                let x = d / a;
                let shape = if x < 1e-6 {
                    // erf(x)/x series, exact to round-off this close to the center.
                    2.0 / PI.sqrt() * (1.0 - x * x / 3.0) / a
                } else {
                    erf(x) / d
                };
                -nuc.charge * shape
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use crate::kohn_sham::Nucleus;

    fn spec_with(nuclei: Vec<Nucleus>, grid: Grid) -> SystemSpec {
        SystemSpec::new(nuclei, 1, grid, false).unwrap()
    }

    #[test]
    fn softened_nucleus_limits() {
        // Odd point count puts a grid point on the nucleus.
        let g = Grid::centered([41; 3], 0.5).unwrap();
        let v = external_potential(&spec_with(vec![Nucleus::new([0.0; 3], 1.0, 0.5).unwrap()], g.clone()));
        let c = 20;
        assert!((v.at(c, c, c) + 2.0 / (0.5 * PI.sqrt())).abs() < 1e-12);
        assert!((v.at(c, c, c) + 2.256758).abs() < 1e-6);
        // r = 10 along x.
        assert!((v.at(c + 20, c, c) + 0.1).abs() < 1e-9);
    }

    #[test]
    fn nuclei_superpose() {
        let g = Grid::centered([12; 3], 0.5).unwrap();
        let a = Nucleus::new([0.0, 0.0, -0.7], 1.0, 0.4).unwrap();
        let b = Nucleus::new([0.0, 0.0, 0.7], 1.0, 0.4).unwrap();
        let both = external_potential(&spec_with(vec![a.clone(), b.clone()], g.clone()));
        let mut sum = external_potential(&spec_with(vec![a], g.clone()));
        sum.axpy(1.0, &external_potential(&spec_with(vec![b], g))).unwrap();
        assert!(both.max_abs_diff(&sum).unwrap() < 1e-14);
    }

    #[test]
    fn box_mode_is_an_approximate_eigenvector() {
        let n = 16;
        let h = 0.5;
        let g = Grid::centered([n; 3], h).unwrap();
        let theta = PI / (n + 1) as f64;
        let mode = |i: usize| (theta * (i + 1) as f64).sin();
        let phi = ScalarField::from_fn(&g, |p| {
            let idx = [g.locate(0, p[0]).unwrap(), g.locate(1, p[1]).unwrap(), g.locate(2, p[2]).unwrap()];
            mode(idx[0]) * mode(idx[1]) * mode(idx[2])
        });
        let e0 = 3.0 * 0.5 * (30.0 - 32.0 * theta.cos() + 2.0 * (2.0 * theta).cos()) / (12.0 * h * h);
        let hphi = apply_hamiltonian(&phi, &ScalarField::zeros(&g)).unwrap();
        for idx in 0..g.len() {
            let c = g.unravel(idx);
            let err = (hphi.values()[idx] - e0 * phi.values()[idx]).abs();
            if c.iter().all(|&i| i >= 1 && i + 1 < n) {
                assert!(err < 1e-12, "{c:?} {err}");
            } else {
                // Only the missing antisymmetric image point two cells out differs.
                assert!(err <= 0.5 * theta.sin() / (12.0 * h * h) + 1e-12, "{c:?} {err}");
            }
        }
        assert_eq!(apply_hamiltonian(&ScalarField::zeros(&g), &phi).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn hamiltonian_is_symmetric() {
        let g = Grid::centered([10, 9, 8], 0.4).unwrap();
        let mut state = 12345u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let psi = ScalarField::from_fn(&g, |_| rnd());
        let phi = ScalarField::from_fn(&g, |_| rnd());
        let v = ScalarField::from_fn(&g, |[x, y, z]| x * x - y + z.sin());
        let a = psi.dot(&apply_hamiltonian(&phi, &v).unwrap()).unwrap();
        let b = apply_hamiltonian(&psi, &v).unwrap().dot(&phi).unwrap();
        assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()));
    }
}
