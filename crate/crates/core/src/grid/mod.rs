//! Uniform structured grids and the scalar/vector fields sampled on them.
//!
//! A grid has three logical axes. An axis with a single node is "unused": the
//! sampled quantity is taken to be invariant along it and every derivative
//! along it vanishes. This is how 2D problems (and symmetric extrusions) are
//! represented. Used axes need at least [`MIN_AXIS_NODES`] nodes.
//!
//! In [`CoordSystem::CylindricalRZ`] the axes are `(r, theta, z)` and vector
//! components are stored in the orthonormal `(e_r, e_theta, e_z)` frame.

pub mod interp;
pub mod io;
pub mod ops;
pub mod vtk;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{Bindings, Expr, ExprError, Var};

pub use ops::Stencil;

/// Smallest node count on an axis that participates in differentiation.
pub const MIN_AXIS_NODES: usize = 5;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid spacing must be finite and strictly positive, got {0:?}")]
    InvalidSpacing([f64; 3]),
    #[error("grid origin must be finite, got {0:?}")]
    InvalidOrigin([f64; 3]),
    #[error("axis {axis} has {nodes} nodes; used axes need at least {MIN_AXIS_NODES}")]
    TooFewNodes { axis: usize, nodes: usize },
    #[error("cylindrical grid must stay off the axis: r-origin is {0}")]
    TouchesAxis(f64),
    #[error("non-finite value at node {index}")]
    NonFiniteInput { index: usize },
    #[error("direction field is not unit length at node {index} (|e| = {norm})")]
    NotUnit { index: usize, norm: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("value count {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("point {0:?} lies outside the grid")]
    OutOfDomain([f64; 3]),
    #[error("expression error: {0}")]
    Expr(#[from] ExprError),
    #[error("BFG1 format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = GridError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordSystem {
    Cartesian,
    CylindricalRz,
}

impl CoordSystem {
    pub fn keyword(self) -> &'static str {
        match self {
            CoordSystem::Cartesian => "cartesian",
            CoordSystem::CylindricalRz => "cylindrical_rz",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "cartesian" => Some(CoordSystem::Cartesian),
            "cylindrical_rz" | "cylindrical" => Some(CoordSystem::CylindricalRz),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    origin: [f64; 3],
    spacing: [f64; 3],
    dims: [usize; 3],
    coords: CoordSystem,
}

impl Grid {
    pub fn new(
        origin: [f64; 3],
        spacing: [f64; 3],
        dims: [usize; 3],
        coords: CoordSystem,
    ) -> Result<Self> {
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(GridError::InvalidOrigin(origin));
        }
        if spacing.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(GridError::InvalidSpacing(spacing));
        }
        for (axis, &n) in dims.iter().enumerate() {
            if n != 1 && n < MIN_AXIS_NODES {
                return Err(GridError::TooFewNodes { axis, nodes: n });
            }
        }
        if coords == CoordSystem::CylindricalRz && origin[0] <= 0.0 {
            return Err(GridError::TouchesAxis(origin[0]));
        }
        Ok(Grid { origin, spacing, dims, coords })
    }

    /// Grid spanning `lo..=hi` on each used axis. Unused axes (one node) sit at
    /// `lo` with unit spacing.
    pub fn from_bounds(
        lo: [f64; 3],
        hi: [f64; 3],
        dims: [usize; 3],
        coords: CoordSystem,
    ) -> Result<Self> {
        let mut spacing = [1.0; 3];
        for a in 0..3 {
            if dims[a] > 1 {
                spacing[a] = (hi[a] - lo[a]) / (dims[a] - 1) as f64;
            }
        }
        Grid::new(lo, spacing, dims, coords)
    }

    pub fn cartesian(lo: [f64; 3], hi: [f64; 3], dims: [usize; 3]) -> Result<Self> {
        Grid::from_bounds(lo, hi, dims, CoordSystem::Cartesian)
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn coords(&self) -> CoordSystem {
        self.coords
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_used(&self, axis: usize) -> bool {
        self.dims[axis] > 1
    }

    /// Largest spacing over the used axes; the `h` of truncation estimates.
    pub fn h_max(&self) -> f64 {
        (0..3)
            .filter(|&a| self.is_used(a))
            .map(|a| self.physical_spacing(a))
            .fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        (0..3)
            .filter(|&a| self.is_used(a))
            .map(|a| self.physical_spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Spacing in length units; for the theta axis this is `r_max * dtheta`.
    fn physical_spacing(&self, axis: usize) -> f64 {
        if self.coords == CoordSystem::CylindricalRz && axis == 1 {
            let r_max = self.origin[0] + (self.dims[0] - 1) as f64 * self.spacing[0];
            r_max * self.spacing[1]
        } else {
            self.spacing[axis]
        }
    }

    pub fn strides(&self) -> [usize; 3] {
        [1, self.dims[0], self.dims[0] * self.dims[1]]
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    /// Node position in the grid's native coordinates.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let ijk = self.ijk(idx);
        std::array::from_fn(|a| self.origin[a] + ijk[a] as f64 * self.spacing[a])
    }

    /// Node position in Cartesian `(x, y, z)`.
    pub fn cartesian_point(&self, idx: usize) -> [f64; 3] {
        to_cartesian(self.coords, self.point(idx))
    }

    /// Upper corner of the grid in native coordinates.
    pub fn upper(&self) -> [f64; 3] {
        std::array::from_fn(|a| self.origin[a] + (self.dims[a] - 1) as f64 * self.spacing[a])
    }

    /// Whether the node sits on the boundary of a used axis.
    pub fn is_boundary(&self, idx: usize) -> bool {
        let ijk = self.ijk(idx);
        (0..3).any(|a| self.is_used(a) && (ijk[a] == 0 || ijk[a] + 1 == self.dims[a]))
    }

    /// Whether the node is at least `margin` nodes away from every boundary
    /// of a used axis.
    pub fn is_interior(&self, idx: usize, margin: usize) -> bool {
        let ijk = self.ijk(idx);
        (0..3).all(|a| !self.is_used(a) || (ijk[a] >= margin && ijk[a] + margin < self.dims[a]))
    }

    /// The same grid with the node count along `axis` replaced.
    pub fn with_axis(&self, axis: usize, nodes: usize, spacing: f64) -> Result<Self> {
        let mut dims = self.dims;
        let mut h = self.spacing;
        dims[axis] = nodes;
        h[axis] = spacing;
        Grid::new(self.origin, h, dims, self.coords)
    }

    /// Coordinate bindings for expression evaluation at a native point.
    ///
    /// Cartesian grids also bind `r` and `theta`; cylindrical grids also bind
    /// `x` and `y`.
    pub fn bindings(&self, p: [f64; 3]) -> Bindings {
        let c = to_cartesian(self.coords, p);
        let r = c[0].hypot(c[1]);
        let theta = match self.coords {
            CoordSystem::Cartesian => c[1].atan2(c[0]),
            CoordSystem::CylindricalRz => p[1],
        };
        Bindings::new()
            .with(Var::X, c[0])
            .with(Var::Y, c[1])
            .with(Var::Z, c[2])
            .with(Var::R, r)
            .with(Var::Theta, theta)
    }

    pub(crate) fn same_as(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(GridError::GridMismatch)
        }
    }
}

pub fn to_cartesian(coords: CoordSystem, p: [f64; 3]) -> [f64; 3] {
    match coords {
        CoordSystem::Cartesian => p,
        CoordSystem::CylindricalRz => [p[0] * p[1].cos(), p[0] * p[1].sin(), p[2]],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub values: Vec<[f64; 3]>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        ScalarField { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        ScalarField { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    /// Samples `f` at every node; `f` receives native coordinates.
    pub fn from_fn<F>(grid: &Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync,
    {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.point(i))).collect();
        ScalarField { grid: grid.clone(), values }
    }

    pub fn from_expr(grid: &Grid, e: &Expr) -> Result<Self> {
        let values: std::result::Result<Vec<f64>, ExprError> = (0..grid.len())
            .into_par_iter()
            .map(|i| e.evaluate(&grid.bindings(grid.point(i))))
            .collect();
        Ok(ScalarField { grid: grid.clone(), values: values? })
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(GridError::NonFiniteInput { index }),
            None => Ok(()),
        }
    }

    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Self {
        let values = self.values.par_iter().map(|&v| f(v)).collect();
        ScalarField { grid: self.grid.clone(), values }
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &ScalarField, b: f64) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(ScalarField { grid: self.grid.clone(), values })
    }

    pub fn mul(&self, other: &ScalarField) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x * y).collect();
        Ok(ScalarField { grid: self.grid.clone(), values })
    }

    pub fn sup_norm(&self) -> f64 {
        sup(self.values.iter().copied())
    }

    /// Sup norm restricted to nodes accepted by `keep`.
    pub fn sup_norm_where<F: Fn(usize) -> bool>(&self, keep: F) -> f64 {
        sup(self.values.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, v)| *v))
    }

    pub fn min_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
    }

    /// Root-mean-square value, summed pairwise.
    pub fn rms(&self) -> f64 {
        let squares: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        (pairwise_sum(&squares) / self.values.len().max(1) as f64).sqrt()
    }
}

impl VectorField {
    pub fn new(grid: Grid, values: Vec<[f64; 3]>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(VectorField { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        VectorField { grid: grid.clone(), values: vec![[0.0; 3]; grid.len()] }
    }

    pub fn from_fn<F>(grid: &Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> [f64; 3] + Sync,
    {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.point(i))).collect();
        VectorField { grid: grid.clone(), values }
    }

    pub fn from_components(a: &ScalarField, b: &ScalarField, c: &ScalarField) -> Result<Self> {
        a.grid.same_as(&b.grid)?;
        a.grid.same_as(&c.grid)?;
        let values = (0..a.values.len()).map(|i| [a.values[i], b.values[i], c.values[i]]).collect();
        Ok(VectorField { grid: a.grid.clone(), values })
    }

    pub fn component(&self, k: usize) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.values.iter().map(|v| v[k]).collect() }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            Some(index) => Err(GridError::NonFiniteInput { index }),
            None => Ok(()),
        }
    }

    pub fn lin_comb(&self, a: f64, other: &VectorField, b: f64) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| std::array::from_fn(|k| a * x[k] + b * y[k]))
            .collect();
        Ok(VectorField { grid: self.grid.clone(), values })
    }

    /// Pointwise product with a scalar field.
    pub fn scale_by(&self, s: &ScalarField) -> Result<Self> {
        self.grid.same_as(&s.grid)?;
        let values =
            self.values.iter().zip(&s.values).map(|(v, c)| [v[0] * c, v[1] * c, v[2] * c]).collect();
        Ok(VectorField { grid: self.grid.clone(), values })
    }

    pub fn dot(&self, other: &VectorField) -> Result<ScalarField> {
        self.grid.same_as(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| dot(*a, *b)).collect();
        Ok(ScalarField { grid: self.grid.clone(), values })
    }

    pub fn magnitude(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| norm(*v)).collect(),
        }
    }

    /// Largest pointwise Euclidean norm.
    pub fn sup_norm(&self) -> f64 {
        sup(self.values.iter().map(|v| norm(*v)))
    }

    pub fn sup_norm_where<F: Fn(usize) -> bool>(&self, keep: F) -> f64 {
        sup(self.values.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, v)| norm(*v)))
    }
}

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Max of `|v|`; NaN poisons the result instead of being skipped.
fn sup<I: Iterator<Item = f64>>(it: I) -> f64 {
    it.fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

/// Pairwise summation with a fixed split, so the rounding pattern depends only
/// on the length of the input.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(
            Grid::new([0.0; 3], [0.1, 0.0, 0.1], [5, 5, 5], CoordSystem::Cartesian),
            Err(GridError::InvalidSpacing(_))
        ));
        assert!(matches!(
            Grid::new([0.0; 3], [0.1; 3], [5, 3, 5], CoordSystem::Cartesian),
            Err(GridError::TooFewNodes { axis: 1, nodes: 3 })
        ));
        assert!(matches!(
            Grid::new([0.0, 0.0, 0.0], [0.1; 3], [5, 1, 5], CoordSystem::CylindricalRz),
            Err(GridError::TouchesAxis(_))
        ));
        assert!(Grid::new([0.5, 0.0, 0.0], [0.1; 3], [5, 1, 5], CoordSystem::CylindricalRz).is_ok());
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::cartesian([0.0; 3], [1.0; 3], [5, 6, 7]).unwrap();
        for idx in 0..g.len() {
            let [i, j, k] = g.ijk(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
        assert_eq!(g.point(g.index(4, 5, 6)), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }

    #[test]
    fn sup_propagates_nan() {
        let g = Grid::cartesian([0.0; 3], [1.0; 3], [5, 1, 1]).unwrap();
        let f = ScalarField::new(g, vec![1.0, f64::NAN, 0.0, 0.0, 0.0]).unwrap();
        assert!(f.sup_norm().is_nan());
        assert!(matches!(f.check_finite(), Err(GridError::NonFiniteInput { index: 1 })));
    }
}
