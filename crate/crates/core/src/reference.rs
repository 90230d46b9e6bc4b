//! Closed-form Beltrami fields used as oracles.
//!
//! * `HarmonicGradient`: `u = grad F` with `F` harmonic, `f = 0`.
//! * `Abc`: `u = (A sin kz + C cos ky, B sin kx + A cos kz, C sin ky + B cos kx)`, `f = k`.
//! * `PlanarCr`: level planes `z = const` with `f = phi(z)`. For `(v, w)` with
//!   `v_x + w_y = 0`, `w_x - v_y = 0` and `Phi' = phi`,
//!   `u = (v cos Phi + w sin Phi, -v sin Phi + w cos Phi, 0)`.
//! * `Cylinder`: coaxial cylinders with `f = phi(r)`,
//!   `u = u1(r) e_theta + u2(r) e_z` solving the radial system.
//! * `Lundquist`: `u = J1(c r) e_theta + J0(c r) e_z`, `f = c`.

use rayon::prelude::*;
use thiserror::Error;

use crate::bessel::{j0, j1};
use crate::expr::{Bindings, Expr, ExprError, Var};
use crate::frame_pde::{cylinder_ode_solve, CylinderSolution, FramePdeError};
use crate::grid::{CoordSystem, Grid, GridError, ScalarField, VectorField};

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("(v, w) violate the Cauchy-Riemann system at node {index}: residual {residual:e}")]
    CrViolation { index: usize, residual: f64 },
    #[error("potential is not harmonic at node {index}: Laplacian {laplacian:e}")]
    NotHarmonic { index: usize, laplacian: f64 },
    #[error("expression `{expr}` may only use the variables {allowed}")]
    UnsupportedVariable { expr: String, allowed: &'static str },
    #[error("the grid reaches the axis r = 0, where this field is not defined")]
    TouchesAxis,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    FramePde(#[from] FramePdeError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type Result<T, E = ReferenceError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq)]
pub enum OracleKind {
    HarmonicGradient { potential: Expr },
    Abc { a: f64, b: f64, c: f64, k: f64 },
    PlanarCr { phi: Expr, v: Expr, w: Expr },
    Cylinder { phi: Expr, u1_0: f64, u2_0: f64, r0: f64 },
    Lundquist { c: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSpec {
    pub kind: OracleKind,
    pub grid: Grid,
}

/// Tolerance for the symbolic admissibility checks, relative to the size of
/// the derivatives involved.
const CHECK_TOL: f64 = 1e-9;

fn only_uses(e: &Expr, allowed: &[Var], names: &'static str) -> Result<()> {
    if e.free_vars().iter().all(|v| allowed.contains(v)) {
        Ok(())
    } else {
        Err(ReferenceError::UnsupportedVariable { expr: e.to_string(), allowed: names })
    }
}

/// Converts a Cartesian vector at a native point into the grid's frame.
fn to_grid_frame(coords: CoordSystem, p: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    match coords {
        CoordSystem::Cartesian => v,
        CoordSystem::CylindricalRz => {
            let (s, c) = p[1].sin_cos();
            [c * v[0] + s * v[1], -s * v[0] + c * v[1], v[2]]
        }
    }
}

/// Cartesian `u1 e_theta + u2 e_z` at Cartesian point `x`; `e_theta` is
/// taken as zero on the axis (where `u1` must vanish for continuity).
fn axial(x: [f64; 3], u1: f64, u2: f64) -> [f64; 3] {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        [0.0, 0.0, u2]
    } else {
        [-u1 * x[1] / r, u1 * x[0] / r, u2]
    }
}

fn radius_range(grid: &Grid) -> (f64, f64) {
    (0..grid.len())
        .map(|i| {
            let x = grid.cartesian_point(i);
            x[0].hypot(x[1])
        })
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

fn collect<T: Send>(items: Vec<std::result::Result<T, ReferenceError>>) -> Result<Vec<T>> {
    items.into_iter().collect()
}

pub fn materialize(spec: &OracleSpec) -> Result<(VectorField, ScalarField)> {
    let grid = &spec.grid;
    let coords = grid.coords();
    match &spec.kind {
        OracleKind::HarmonicGradient { potential } => {
            only_uses(potential, &[Var::X, Var::Y, Var::Z], "x, y, z")?;
            let d: [Expr; 3] = [Var::X, Var::Y, Var::Z].map(|v| potential.differentiate(v));
            let lap = [Var::X, Var::Y, Var::Z].map(|v| potential.differentiate(v).differentiate(v));
            let values = collect(
                (0..grid.len())
                    .into_par_iter()
                    .map(|i| {
                        let p = grid.point(i);
                        let b = grid.bindings(p);
                        let g = [d[0].evaluate(&b)?, d[1].evaluate(&b)?, d[2].evaluate(&b)?];
                        let parts = [lap[0].evaluate(&b)?, lap[1].evaluate(&b)?, lap[2].evaluate(&b)?];
                        let scale = 1.0 + parts.iter().map(|v| v.abs()).sum::<f64>();
                        let laplacian = parts.iter().sum::<f64>();
                        if laplacian.abs() > CHECK_TOL * scale {
                            return Err(ReferenceError::NotHarmonic { index: i, laplacian });
                        }
                        Ok(to_grid_frame(coords, p, g))
                    })
                    .collect(),
            )?;
            Ok((VectorField { grid: grid.clone(), values }, ScalarField::zeros(grid)))
        }
        OracleKind::Abc { a, b, c, k } => {
            let u = VectorField::from_fn(grid, |p| {
                let x = crate::grid::to_cartesian(coords, p);
                let v = abc_at(*a, *b, *c, *k, x);
                to_grid_frame(coords, p, v)
            });
            Ok((u, ScalarField::constant(grid, *k)))
        }
        OracleKind::PlanarCr { phi, v, w } => {
            only_uses(phi, &[Var::Z, Var::T], "z (or t)")?;
            only_uses(v, &[Var::X, Var::Y], "x, y")?;
            only_uses(w, &[Var::X, Var::Y], "x, y")?;
            let (vx, vy) = (v.differentiate(Var::X), v.differentiate(Var::Y));
            let (wx, wy) = (w.differentiate(Var::X), w.differentiate(Var::Y));
            let phi_at = |z: f64| phi.evaluate(&Bindings::new().with(Var::Z, z).with(Var::T, z));
            let z_ref = (0..grid.len()).map(|i| grid.cartesian_point(i)[2]).fold(f64::INFINITY, f64::min);
            let rows = collect(
                (0..grid.len())
                    .into_par_iter()
                    .map(|i| {
                        let p = grid.point(i);
                        let x = crate::grid::to_cartesian(coords, p);
                        let bind = Bindings::new().with(Var::X, x[0]).with(Var::Y, x[1]);
                        let parts = [vx.evaluate(&bind)?, vy.evaluate(&bind)?, wx.evaluate(&bind)?, wy.evaluate(&bind)?];
                        let scale = 1.0 + parts.iter().map(|t| t.abs()).sum::<f64>();
                        let residual = (parts[0] + parts[3]).abs().max((parts[2] - parts[1]).abs());
                        if residual > CHECK_TOL * scale {
                            return Err(ReferenceError::CrViolation { index: i, residual });
                        }
                        let (vv, ww) = (v.evaluate(&bind)?, w.evaluate(&bind)?);
                        let big_phi = integrate_gl(&phi_at, z_ref, x[2])?;
                        let (s, c) = big_phi.sin_cos();
                        let u = [vv * c + ww * s, -vv * s + ww * c, 0.0];
                        Ok((to_grid_frame(coords, p, u), phi_at(x[2])?))
                    })
                    .collect(),
            )?;
            Ok((
                VectorField { grid: grid.clone(), values: rows.iter().map(|r| r.0).collect() },
                ScalarField { grid: grid.clone(), values: rows.iter().map(|r| r.1).collect() },
            ))
        }
        OracleKind::Cylinder { phi, u1_0, u2_0, r0 } => {
            only_uses(phi, &[Var::R, Var::T], "r (or t)")?;
            let (lo, hi) = radius_range(grid);
            if !(lo > 0.0) {
                return Err(ReferenceError::TouchesAxis);
            }
            let step = 1e-3_f64.min((hi - lo).max(1e-3) / 16.0);
            let down = cylinder_ode_solve(phi, *r0, [*u1_0, *u2_0], lo.min(*r0), step)?;
            let up = cylinder_ode_solve(phi, *r0, [*u1_0, *u2_0], hi.max(*r0), step)?;
            let sample = |r: f64, lower: &CylinderSolution, upper: &CylinderSolution| -> [f64; 2] {
                let sol = if r <= *r0 { lower } else { upper };
                sol.at(r).expect("radius inside the integrated range")
            };
            let phi_at = |r: f64| phi.evaluate(&Bindings::new().with(Var::R, r).with(Var::T, r));
            let rows = collect(
                (0..grid.len())
                    .into_par_iter()
                    .map(|i| {
                        let p = grid.point(i);
                        let x = crate::grid::to_cartesian(coords, p);
                        let r = x[0].hypot(x[1]);
                        let [a, b] = sample(r, &down, &up);
                        Ok((to_grid_frame(coords, p, axial(x, a, b)), phi_at(r)?))
                    })
                    .collect(),
            )?;
            Ok((
                VectorField { grid: grid.clone(), values: rows.iter().map(|r| r.0).collect() },
                ScalarField { grid: grid.clone(), values: rows.iter().map(|r| r.1).collect() },
            ))
        }
        OracleKind::Lundquist { c } => {
            let u = VectorField::from_fn(grid, |p| {
                let x = crate::grid::to_cartesian(coords, p);
                let r = x[0].hypot(x[1]);
                to_grid_frame(coords, p, axial(x, j1(c * r), j0(c * r)))
            });
            Ok((u, ScalarField::constant(grid, *c)))
        }
    }
}

pub fn abc_at(a: f64, b: f64, c: f64, k: f64, x: [f64; 3]) -> [f64; 3] {
    [
        a * (k * x[2]).sin() + c * (k * x[1]).cos(),
        b * (k * x[0]).sin() + a * (k * x[2]).cos(),
        c * (k * x[1]).sin() + b * (k * x[0]).cos(),
    ]
}

/// Composite five-point Gauss-Legendre quadrature of `f` over `[a, b]`.
fn integrate_gl<F: Fn(f64) -> std::result::Result<f64, ExprError>>(f: &F, a: f64, b: f64) -> Result<f64> {
    const NODES: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    if a == b {
        return Ok(0.0);
    }
    let panels = (((b - a).abs() / 0.05).ceil() as usize).max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for (x, w) in NODES.iter().zip(WEIGHTS) {
            total += w * f(mid + 0.5 * h * x)?;
        }
    }
    Ok(0.5 * h * total)
}
