//! Beltrami fields with a translation or rotation symmetry, built from a
//! flux function `H` on a 2D cross-section.
//!
//! Translation along `z` (grid in `(x, y)`):
//! `Lap H = -(Phi' Phi)(H)`, `u = (-H_y, H_x, -Phi(H))`, `f = Phi'(H)`.
//!
//! Rotation about the `z` axis (grid in `(r, z)`, `r > 0`):
//! `d_r(H_r / r) + d_z(H_z / r) = -(Phi' Phi)(H) / r`,
//! `u = (-H_z / r) e_r + (Phi(H) / r) e_theta + (H_r / r) e_z`, `f = Phi'(H)`.
//!
//! Both elliptic problems take Dirichlet data and are solved by damped Newton.

pub mod banded;
mod newton;

use thiserror::Error;

use crate::expr::{Expr, ExprError, Var};
use crate::grid::ops::diff_axis;
use crate::grid::{CoordSystem, Grid, GridError, ScalarField, Stencil, VectorField};

pub use crate::verify::{verify_beltrami, VerifyReport};
pub use newton::NewtonOptions;

#[derive(Debug, Error)]
pub enum SymmetricError {
    #[error("Newton iteration stalled; residual history {history:?}")]
    NewtonDiverged { history: Vec<f64> },
    #[error("Newton system is singular at unknown {column}")]
    SingularJacobian { column: usize },
    #[error("{0}")]
    WrongGrid(String),
    #[error("Phi must be an expression in t only, got `{0}`")]
    PhiNotInT(String),
    #[error("non-finite boundary value at node {0}")]
    NonFiniteBoundary(usize),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type Result<T, E = SymmetricError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Translation,
    Rotation,
}

/// Dirichlet data: an expression in the grid coordinates or a sampled field
/// on the cross-section grid (only its boundary values are read).
#[derive(Clone, Debug)]
pub enum Boundary {
    Expr(Expr),
    Field(ScalarField),
}

#[derive(Clone, Debug)]
pub struct FluxSolve {
    pub symmetry: Symmetry,
    pub h: ScalarField,
    pub phi: Expr,
    pub phi_prime: Expr,
    pub newton: NewtonOptions,
    /// Sup-norm of the discrete residual, starting at the harmonic initial guess.
    pub history: Vec<f64>,
}

impl FluxSolve {
    pub fn residual(&self) -> f64 {
        *self.history.last().expect("history starts with the initial guess")
    }

    pub fn iterations(&self) -> usize {
        self.history.len() - 1
    }
}

/// The two in-plane axes of a cross-section grid.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Plane {
    pub a: usize,
    pub b: usize,
    pub na: usize,
    pub nb: usize,
    pub ha: f64,
    pub hb: f64,
    pub r0: f64,
    pub rotation: bool,
}

impl Plane {
    fn new(grid: &Grid, symmetry: Symmetry) -> Result<Plane> {
        let d = grid.dims();
        let (coords, a, b, flat) = match symmetry {
            Symmetry::Translation => (CoordSystem::Cartesian, 0, 1, 2),
            Symmetry::Rotation => (CoordSystem::CylindricalRz, 0, 2, 1),
        };
        if grid.coords() != coords || d[flat] != 1 || d[a] < 3 || d[b] < 3 {
            let want = match symmetry {
                Symmetry::Translation => "a cartesian grid with dims [nx, ny, 1]",
                Symmetry::Rotation => "a cylindrical_rz grid with dims [nr, 1, nz]",
            };
            return Err(SymmetricError::WrongGrid(format!("this construction needs {want}")));
        }
        let s = grid.spacing();
        Ok(Plane {
            a,
            b,
            na: d[a],
            nb: d[b],
            ha: s[a],
            hb: s[b],
            r0: grid.origin()[0],
            rotation: symmetry == Symmetry::Rotation,
        })
    }

    pub fn node(&self, grid: &Grid, i: usize, j: usize) -> usize {
        let mut ijk = [0; 3];
        ijk[self.a] = i;
        ijk[self.b] = j;
        grid.index(ijk[0], ijk[1], ijk[2])
    }

    pub fn unknowns(&self) -> usize {
        (self.na - 2) * (self.nb - 2)
    }

    pub fn unknown(&self, i: usize, j: usize) -> usize {
        (i - 1) + (self.na - 2) * (j - 1)
    }
}

fn check_phi(phi: &Expr) -> Result<()> {
    if phi.free_vars().iter().all(|v| *v == Var::T) {
        Ok(())
    } else {
        Err(SymmetricError::PhiNotInT(phi.to_string()))
    }
}

fn boundary_values(grid: &Grid, bc: &Boundary) -> Result<Vec<f64>> {
    let mut h = vec![0.0; grid.len()];
    for (idx, slot) in h.iter_mut().enumerate() {
        if !grid.is_boundary(idx) {
            continue;
        }
        let v = match bc {
            Boundary::Expr(e) => e.evaluate(&grid.bindings(grid.point(idx)))?,
            Boundary::Field(f) => {
                f.grid.same_as(grid)?;
                f.values[idx]
            }
        };
        if !v.is_finite() {
            return Err(SymmetricError::NonFiniteBoundary(idx));
        }
        *slot = v;
    }
    Ok(h)
}

fn solve(symmetry: Symmetry, phi: &Expr, grid: &Grid, bc: &Boundary, newton: &NewtonOptions) -> Result<FluxSolve> {
    check_phi(phi)?;
    let plane = Plane::new(grid, symmetry)?;
    let phi_prime = phi.differentiate(Var::T);
    let h0 = boundary_values(grid, bc)?;
    let (h, history) = newton::run(grid, &plane, phi, &phi_prime, h0, newton)?;
    Ok(FluxSolve {
        symmetry,
        h: ScalarField { grid: grid.clone(), values: h },
        phi: phi.clone(),
        phi_prime,
        newton: *newton,
        history,
    })
}

/// Solves `Lap H = -(Phi' Phi)(H)` on a cartesian `[nx, ny, 1]` grid.
pub fn solve_translation(phi: &Expr, grid: &Grid, bc: &Boundary, newton: &NewtonOptions) -> Result<FluxSolve> {
    solve(Symmetry::Translation, phi, grid, bc, newton)
}

/// Solves the axisymmetric flux equation on a cylindrical `[nr, 1, nz]` grid.
pub fn solve_rotation(phi: &Expr, grid: &Grid, bc: &Boundary, newton: &NewtonOptions) -> Result<FluxSolve> {
    solve(Symmetry::Rotation, phi, grid, bc, newton)
}

/// Layers along the symmetry direction in the extruded output grid.
pub const EXTRUDED_LAYERS: usize = 5;

/// Builds `(u, f)` on a grid extruded along the symmetry direction; every
/// layer holds the same values. In-plane derivatives of `H` use fourth-order
/// differences so that the assembled field stays smooth up to the boundary.
pub fn assemble(fs: &FluxSolve) -> Result<(VectorField, ScalarField)> {
    let g2 = &fs.h.grid;
    let plane = Plane::new(g2, fs.symmetry)?;
    let da = diff_axis(&fs.h.values, g2, plane.a, Stencil::Fourth);
    let db = diff_axis(&fs.h.values, g2, plane.b, Stencil::Fourth);
    let mut phi_h = Vec::with_capacity(g2.len());
    let mut f_h = Vec::with_capacity(g2.len());
    for &h in &fs.h.values {
        phi_h.push(fs.phi.eval_t(h)?);
        f_h.push(fs.phi_prime.eval_t(h)?);
    }
    let (o, s, d) = (g2.origin(), g2.spacing(), g2.dims());
    let g3 = match fs.symmetry {
        Symmetry::Translation => {
            let hz = s[0].min(s[1]);
            Grid::new([o[0], o[1], 0.0], [s[0], s[1], hz], [d[0], d[1], EXTRUDED_LAYERS], CoordSystem::Cartesian)?
        }
        Symmetry::Rotation => {
            let r_max = o[0] + s[0] * (d[0] - 1) as f64;
            let dtheta = s[0].min(s[2]) / r_max;
            Grid::new([o[0], 0.0, o[2]], [s[0], dtheta, s[2]], [d[0], EXTRUDED_LAYERS, d[2]], CoordSystem::CylindricalRz)?
        }
    };
    let mut u = Vec::with_capacity(g3.len());
    let mut f = Vec::with_capacity(g3.len());
    for idx in 0..g3.len() {
        let [i, j, k] = g3.ijk(idx);
        let (m, vec) = match fs.symmetry {
            Symmetry::Translation => {
                let m = g2.index(i, j, 0);
                (m, [-db[m], da[m], -phi_h[m]])
            }
            Symmetry::Rotation => {
                let m = g2.index(i, 0, k);
                let r = g3.point(idx)[0];
                (m, [-db[m] / r, phi_h[m] / r, da[m] / r])
            }
        };
        u.push(vec);
        f.push(f_h[m]);
    }
    Ok((VectorField { grid: g3.clone(), values: u }, ScalarField { grid: g3, values: f }))
}

pub fn assemble_translation(fs: &FluxSolve) -> Result<(VectorField, ScalarField)> {
    if fs.symmetry != Symmetry::Translation {
        return Err(SymmetricError::WrongGrid("flux solve is rotation-symmetric".into()));
    }
    assemble(fs)
}

pub fn assemble_rotation(fs: &FluxSolve) -> Result<(VectorField, ScalarField)> {
    if fs.symmetry != Symmetry::Rotation {
        return Err(SymmetricError::WrongGrid("flux solve is translation-symmetric".into()));
    }
    assemble(fs)
}
