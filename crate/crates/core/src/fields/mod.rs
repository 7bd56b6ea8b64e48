//! Uniform Cartesian grids, scalar fields sampled on them, and the discrete
//! operators the rest of the crate is built on.
//!
//! Values are stored x-fastest: index = i + nx * (j + ny * k).

mod io;
pub(crate) mod stencil;

use std::fmt;

pub use io::{read_grid_file, write_grid_file};
pub use stencil::{
    directional_second_derivative, first_derivative, laplacian, second_derivative,
    FIRST_DERIVATIVE, SECOND_DERIVATIVE,
};

use crate::{Error, Result};

/// Smallest number of points allowed along any axis.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// The two remaining axes in increasing order.
    pub fn others(self) -> [Axis; 2] {
        match self {
            Axis::X => [Axis::Y, Axis::Z],
            Axis::Y => [Axis::X, Axis::Z],
            Axis::Z => [Axis::X, Axis::Y],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::InvalidInput(format!("unknown axis '{other}'"))),
        }
    }
}

/// Uniform grid with equal spacing along all three axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dims: [usize; 3],
    spacing: f64,
    origin: [f64; 3],
}

impl Grid {
    pub fn new(dims: [usize; 3], spacing: f64, origin: [f64; 3]) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be > 0, got {spacing}")));
        }
        if let Some(n) = dims.iter().find(|&&n| n < MIN_POINTS) {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_POINTS} points per axis, got {n}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { dims, spacing, origin })
    }

    /// Cell-centered grid on a box symmetric about the coordinate origin.
    pub fn centered(dims: [usize; 3], spacing: f64) -> Result<Self> {
        let origin = dims.map(|n| -0.5 * (n as f64 - 1.0) * spacing);
        Self::new(dims, spacing, origin)
    }

    /// Cubic cell-centered grid covering `[-half_width, half_width]^3`.
    ///
    /// The point count per axis is `round(2 * half_width / spacing)`, so the
    /// realized extent is `dims * spacing`.
    pub fn cube(half_width: f64, spacing: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width must be > 0, got {half_width}")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be > 0, got {spacing}")));
        }
        let n = (2.0 * half_width / spacing).round() as usize;
        Self::centered([n; 3], spacing)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    pub fn extents(&self) -> [f64; 3] {
        self.dims.map(|n| n as f64 * self.spacing)
    }

    /// Memory strides of the three axes.
    pub fn strides(&self) -> [usize; 3] {
        [1, self.dims[0], self.dims[0] * self.dims[1]]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing
    }

    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unravel(idx);
        [self.coord(0, i), self.coord(1, j), self.coord(2, k)]
    }

    /// Grid index along `axis` of the point at coordinate `x`, if `x` lies on the grid.
    pub fn locate(&self, axis: usize, x: f64) -> Option<usize> {
        let t = (x - self.origin[axis]) / self.spacing;
        let i = t.round();
        if (t - i).abs() > 1e-6 || i < 0.0 || i as usize >= self.dims[axis] {
            return None;
        }
        Some(i as usize)
    }

    /// Equality up to floating-point noise in spacing and origin.
    pub fn same_as(&self, other: &Grid) -> bool {
        let tol = 1e-9 * self.spacing;
        self.dims == other.dims
            && (self.spacing - other.spacing).abs() <= tol
            && self.origin.iter().zip(other.origin).all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch { left: self.to_string(), right: other.to_string() })
        }
    }

    /// Whether `idx` lies on the outermost layer of the box.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let c = self.unravel(idx);
        c.iter().zip(self.dims).any(|(&i, n)| i == 0 || i + 1 == n)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [nx, ny, nz] = self.dims;
        let [ox, oy, oz] = self.origin;
        write!(f, "{nx}x{ny}x{nz} h={} origin=({ox}, {oy}, {oz})", self.spacing)
    }
}

/// Real-valued function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} values but grid {} has {} points",
                values.len(),
                grid,
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self { grid: grid.clone(), values: vec![value; grid.len()] }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.position(idx))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &ScalarField) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
        Ok(())
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `integral of self * other` with the same fixed-order Riemann sum as [`integrate`].
    pub fn dot(&self, other: &ScalarField) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Value at the grid point `(i, j, k)`.
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    /// Sample this field on the points of a coarser grid that coincides with a
    /// subset of this grid's points. No interpolation is performed.
    pub fn restrict_to(&self, coarse: &Grid) -> Result<ScalarField> {
        if self.grid.same_as(coarse) {
            return Ok(self.clone());
        }
        let fine = &self.grid;
        let not_commensurate =
            || Error::NotCommensurate { fine: fine.to_string(), coarse: coarse.to_string() };
        let ratio = coarse.spacing() / fine.spacing();
        let r = ratio.round();
        if r < 1.0 || (ratio - r).abs() > 1e-9 * ratio {
            return Err(not_commensurate());
        }
        let r = r as usize;
        let mut start = [0usize; 3];
        for a in 0..3 {
            start[a] = fine.locate(a, coarse.coord(a, 0)).ok_or_else(not_commensurate)?;
            if start[a] + r * (coarse.dims()[a] - 1) >= fine.dims()[a] {
                return Err(not_commensurate());
            }
        }
        let [nx, ny, nz] = coarse.dims();
        let mut values = Vec::with_capacity(coarse.len());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    values.push(self.at(start[0] + r * i, start[1] + r * j, start[2] + r * k));
                }
            }
        }
        ScalarField::new(coarse.clone(), values)
    }
}

/// Unit vector, used for cavity polarizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction([f64; 3]);

impl Direction {
    pub const X: Direction = Direction([1.0, 0.0, 0.0]);
    pub const Y: Direction = Direction([0.0, 1.0, 0.0]);
    pub const Z: Direction = Direction([0.0, 0.0, 1.0]);

    /// Normalizes `v`. Non-unit input is rescaled with a warning; a zero or
    /// non-finite vector is rejected.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidInput(format!("polarization {v:?} has no direction")));
        }
        if (norm - 1.0).abs() > 1e-12 {
            log::warn!("polarization {v:?} has norm {norm}; rescaling to unit length");
        }
        Ok(Self(v.map(|c| c / norm)))
    }

    pub fn along(axis: Axis) -> Self {
        match axis {
            Axis::X => Self::X,
            Axis::Y => Self::Y,
            Axis::Z => Self::Z,
        }
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn negated(&self) -> Self {
        Self(self.0.map(|c| -c))
    }
}

/// Fixed-order Riemann sum `h^3 * sum(values)`.
pub fn integrate(f: &ScalarField) -> f64 {
    let s: f64 = f.values.iter().sum();
    s * f.grid.cell_volume()
}

/// Grid-point values of `f` along the line parallel to `axis` passing through
/// `offsets`, the coordinates on the two remaining axes in increasing axis order.
pub fn line_cut(f: &ScalarField, axis: Axis, offsets: [f64; 2]) -> Result<Vec<(f64, f64)>> {
    let grid = f.grid();
    let mut fixed = [0usize; 3];
    for (other, x) in axis.others().into_iter().zip(offsets) {
        fixed[other.index()] = grid.locate(other.index(), x).ok_or_else(|| {
            Error::InvalidInput(format!(
                "line cut offset {}={x} does not lie on a grid point of {grid}",
                other.name()
            ))
        })?;
    }
    let a = axis.index();
    Ok((0..grid.dims()[a])
        .map(|i| {
            let mut c = fixed;
            c[a] = i;
            (grid.coord(a, i), f.at(c[0], c[1], c[2]))
        })
        .collect())
}

/// Calls `f(base, stride, len)` once for every grid line parallel to `axis`.
pub(crate) fn for_each_line(dims: [usize; 3], axis: usize, mut f: impl FnMut(usize, usize, usize)) {
    let strides = [1, dims[0], dims[0] * dims[1]];
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for q in 0..dims[b] {
        for p in 0..dims[a] {
            f(p * strides[a] + q * strides[b], strides[axis], dims[axis]);
        }
    }
}
