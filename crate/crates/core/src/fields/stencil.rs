//! Fourth-order central finite differences with zero-Dirichlet values outside the box.

use super::{for_each_line, Axis, Direction, ScalarField};

/// Second-derivative weights for offsets -2..=2, in units of 1/h^2.
pub const SECOND_DERIVATIVE: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

/// First-derivative weights for offsets -2..=2, in units of 1/h. Antisymmetric.
pub const FIRST_DERIVATIVE: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];

/// `out += scale * (stencil applied along axis)(input)`.
pub(crate) fn apply_axis(
    input: &[f64],
    out: &mut [f64],
    dims: [usize; 3],
    axis: usize,
    weights: &[f64; 5],
    scale: f64,
) {
    for_each_line(dims, axis, |base, stride, n| {
        for c in 0..n {
            let mut acc = 0.0;
            for (w, o) in weights.iter().zip(-2isize..=2) {
                if *w == 0.0 {
                    continue;
                }
                let t = c as isize + o;
                if t >= 0 && (t as usize) < n {
                    acc += w * input[base + t as usize * stride];
                }
            }
            out[base + c * stride] += scale * acc;
        }
    });
}

/// Pure second difference along one axis.
pub fn second_derivative(f: &ScalarField, axis: Axis) -> ScalarField {
    let grid = f.grid();
    let mut out = ScalarField::zeros(grid);
    let h2 = grid.spacing() * grid.spacing();
    apply_axis(f.values(), out.values_mut(), grid.dims(), axis.index(), &SECOND_DERIVATIVE, 1.0 / h2);
    out
}

/// Antisymmetric central first difference along one axis.
pub fn first_derivative(f: &ScalarField, axis: Axis) -> ScalarField {
    let grid = f.grid();
    let mut out = ScalarField::zeros(grid);
    apply_axis(
        f.values(),
        out.values_mut(),
        grid.dims(),
        axis.index(),
        &FIRST_DERIVATIVE,
        1.0 / grid.spacing(),
    );
    out
}

/// 3D Laplacian as the sum of the three axis second differences (x, y, z order).
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let mut out = ScalarField::zeros(grid);
    let h2 = grid.spacing() * grid.spacing();
    for axis in 0..3 {
        apply_axis(f.values(), out.values_mut(), grid.dims(), axis, &SECOND_DERIVATIVE, 1.0 / h2);
    }
    out
}

/// `(e . grad)^2 f = sum_ij e_i e_j d_i d_j f`.
///
/// Diagonal terms use the pure second difference, off-diagonal terms the product
/// of two first differences. Terms with a zero coefficient are skipped, so an
/// axis-aligned direction reduces exactly to [`second_derivative`].
pub fn directional_second_derivative(f: &ScalarField, dir: &Direction) -> ScalarField {
    let grid = f.grid();
    let dims = grid.dims();
    let h = grid.spacing();
    let e = dir.components();
    let mut out = ScalarField::zeros(grid);
    for a in 0..3 {
        let c = e[a] * e[a];
        if c != 0.0 {
            apply_axis(f.values(), out.values_mut(), dims, a, &SECOND_DERIVATIVE, c / (h * h));
        }
    }
    for a in 0..3 {
        for b in (a + 1)..3 {
            let c = 2.0 * e[a] * e[b];
            if c == 0.0 {
                continue;
            }
            let mut da = vec![0.0; grid.len()];
            apply_axis(f.values(), &mut da, dims, a, &FIRST_DERIVATIVE, 1.0 / h);
            apply_axis(&da, out.values_mut(), dims, b, &FIRST_DERIVATIVE, c / h);
        }
    }
    out
}
