//! The Beltrami system for a field tangent to the level surfaces of `f`,
//! written in an adapted frame.
//!
//! With `u = u1 e1 + u2 e2` and `u^i_j = e_j(u^i)`, `curl u = f u`,
//! `div u = 0` become
//!
//! ```text
//! R1 = u2_1 - u1_2 - k1 u1 - k2 u2
//! R2 = u1_1 + u2_2 - (k2 - g1) u1 + (k1 + g2) u2
//! R3 = u1_3 - h11 u1 - (f - k3) u2
//! R4 = u2_3 - (k3 - f) u1 - h22 u2
//! ```
//!
//! `R1 = R2 = 0` constrain the data on each level surface, `R3 = R4 = 0`
//! transport it along the normal lines. The system has solutions exactly when
//! the transport preserves the constraints.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{Bindings, Expr, ExprError, Var};
use crate::frame::{AdaptedFrame, FrameInvariants};
use crate::grid::interp::corner_weights;
use crate::grid::ops::directional_derivative;
use crate::grid::{norm, CoordSystem, Grid, GridError, ScalarField, VectorField};
use crate::ode::{integrate, rk4_step, Trajectory};

#[derive(Debug, Error)]
pub enum FramePdeError {
    #[error("no node could be traced to the starting level surface within the grid")]
    StepOutOfDomain,
    #[error("initial data violate the surface constraints: relative residual {residual:e} > {tol:e}")]
    IncompatibleInitialData { residual: f64, tol: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type Result<T, E = FramePdeError> = std::result::Result<T, E>;

/// Components of a field tangent to the level surfaces, `u = u1 e1 + u2 e2`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentialField {
    pub u1: ScalarField,
    pub u2: ScalarField,
}

impl TangentialField {
    pub fn zeros(grid: &Grid) -> Self {
        TangentialField { u1: ScalarField::zeros(grid), u2: ScalarField::zeros(grid) }
    }

    /// Samples `(u1, u2)` from a function of native coordinates.
    pub fn from_fn<F: Fn([f64; 3]) -> [f64; 2] + Sync>(grid: &Grid, f: F) -> Self {
        let pairs: Vec<[f64; 2]> = (0..grid.len()).into_par_iter().map(|i| f(grid.point(i))).collect();
        TangentialField {
            u1: ScalarField { grid: grid.clone(), values: pairs.iter().map(|p| p[0]).collect() },
            u2: ScalarField { grid: grid.clone(), values: pairs.iter().map(|p| p[1]).collect() },
        }
    }

    /// Projects a vector field onto `e1`, `e2`.
    pub fn project(u: &VectorField, fr: &AdaptedFrame) -> Result<Self> {
        Ok(TangentialField { u1: u.dot(&fr.e1)?, u2: u.dot(&fr.e2)? })
    }

    /// `u1 e1 + u2 e2`; orthogonal to `e3` by construction.
    pub fn reconstruct(&self, fr: &AdaptedFrame) -> Result<VectorField> {
        self.u1.grid.same_as(&fr.e1.grid)?;
        let values = (0..self.u1.values.len())
            .map(|i| {
                let (a, b) = (self.u1.values[i], self.u2.values[i]);
                let (e1, e2) = (fr.e1.values[i], fr.e2.values[i]);
                std::array::from_fn(|m| a * e1[m] + b * e2[m])
            })
            .collect();
        Ok(VectorField { grid: self.u1.grid.clone(), values })
    }

    fn magnitude_at(&self, i: usize) -> f64 {
        self.u1.values[i].hypot(self.u2.values[i])
    }
}

#[derive(Clone, Debug)]
pub struct SystemResidual {
    pub r1: ScalarField,
    pub r2: ScalarField,
    pub r3: ScalarField,
    pub r4: ScalarField,
}

pub fn system_residual(
    tf: &TangentialField,
    inv: &FrameInvariants,
    f: &ScalarField,
    fr: &AdaptedFrame,
) -> Result<SystemResidual> {
    let s = fr.stencil;
    let d = |u: &ScalarField, e: &VectorField| directional_derivative(u, e, s);
    let (u1, u2) = (&tf.u1, &tf.u2);
    let u1_1 = d(u1, &fr.e1)?;
    let u1_2 = d(u1, &fr.e2)?;
    let u1_3 = d(u1, &fr.e3)?;
    let u2_1 = d(u2, &fr.e1)?;
    let u2_2 = d(u2, &fr.e2)?;
    let u2_3 = d(u2, &fr.e3)?;
    let n = u1.values.len();
    let (mut r1, mut r2, mut r3, mut r4) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let (a, b) = (u1.values[i], u2.values[i]);
        let (k1, k2, k3) = (inv.k1.values[i], inv.k2.values[i], inv.k3.values[i]);
        let (g1, g2) = (inv.g1.values[i], inv.g2.values[i]);
        let (h11, h22) = (inv.h11.values[i], inv.h22.values[i]);
        let fv = f.values[i];
        r1.push(u2_1.values[i] - u1_2.values[i] - k1 * a - k2 * b);
        r2.push(u1_1.values[i] + u2_2.values[i] - (k2 - g1) * a + (k1 + g2) * b);
        r3.push(u1_3.values[i] - h11 * a - (fv - k3) * b);
        r4.push(u2_3.values[i] - (k3 - fv) * a - h22 * b);
    }
    let wrap = |values| ScalarField { grid: u1.grid.clone(), values };
    Ok(SystemResidual { r1: wrap(r1), r2: wrap(r2), r3: wrap(r3), r4: wrap(r4) })
}

/// Data on the starting level surface.
pub enum InitialData<'a> {
    /// `(u1, u2)` as a function of native coordinates. Only values on the
    /// starting surface are transported; off-surface values enter the initial
    /// residual through tangential derivatives only.
    Sampler(&'a (dyn Fn([f64; 3]) -> [f64; 2] + Sync)),
    /// Grid data, interpolated trilinearly at the feet of the normal lines.
    Field(&'a TangentialField),
}

impl InitialData<'_> {
    fn at(&self, p: [f64; 3]) -> Option<[f64; 2]> {
        match self {
            InitialData::Sampler(f) => Some(f(p)),
            InitialData::Field(tf) => {
                let (w, len) = corner_weights(&tf.u1.grid, p)?;
                let mut out = [0.0; 2];
                for &(i, c) in &w[..len] {
                    out[0] += c * tf.u1.values[i];
                    out[1] += c * tf.u2.values[i];
                }
                Some(out)
            }
        }
    }

    fn on_grid(&self, grid: &Grid) -> TangentialField {
        match self {
            InitialData::Sampler(f) => TangentialField::from_fn(grid, |p| f(p)),
            InitialData::Field(tf) => (*tf).clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvolveOptions {
    /// Level `f = level` carrying the initial data; defaults to `min f`.
    pub level: Option<f64>,
    /// Longest normal-line arc traced back from a node.
    pub max_arc: Option<f64>,
    /// Arc-length step; defaults to half the smallest grid spacing.
    pub step: Option<f64>,
    /// Largest admissible relative residual of the initial data; defaults to
    /// `truncation_constant * h^2`.
    pub tol: Option<f64>,
    /// `C` in the truncation-error model `C h^2`.
    pub truncation_constant: f64,
    /// Growth over the initial residual that counts as an obstruction.
    pub growth_factor: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { level: None, max_arc: None, step: None, tol: None, truncation_constant: 20.0, growth_factor: 10.0 }
    }
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub field: TangentialField,
    /// Nodes reached by tracing back to the starting level.
    pub evolved: Vec<bool>,
    pub level: f64,
    pub residual: SystemResidual,
    /// `sup max(|R1|, |R2|) / sup |u|` on the starting level.
    pub initial_residual: f64,
    /// The same ratio over evolved nodes whose difference stencils only touch
    /// evolved nodes.
    pub final_residual: f64,
    pub amplification: f64,
    /// `10 C h^2`: residuals below this are indistinguishable from truncation error.
    pub truncation_floor: f64,
    pub incompatible: bool,
}

/// Per-node coefficient bundle for interpolation along normal lines:
/// native velocity of `e3` (3), `h11`, `h22`, `k3`, `f`.
struct Coefficients {
    grid: Grid,
    packed: Vec<[f64; 7]>,
}

impl Coefficients {
    fn new(inv: &FrameInvariants, f: &ScalarField, fr: &AdaptedFrame) -> Self {
        let grid = f.grid.clone();
        let packed = (0..grid.len())
            .map(|i| {
                let e = fr.e3.values[i];
                [e[0], e[1], e[2], inv.h11.values[i], inv.h22.values[i], inv.k3.values[i], f.values[i]]
            })
            .collect();
        Coefficients { grid, packed }
    }

    fn at(&self, p: [f64; 3]) -> Option<[f64; 7]> {
        let (w, len) = corner_weights(&self.grid, p)?;
        let mut out = [0.0; 7];
        for &(i, c) in &w[..len] {
            for k in 0..7 {
                out[k] += c * self.packed[i][k];
            }
        }
        Some(out)
    }
}

/// Rate of change of native coordinates per unit arc length along `e`.
fn native_velocity(coords: CoordSystem, p: [f64; 3], e: [f64; 3]) -> [f64; 3] {
    let n = norm(e);
    let e = [e[0] / n, e[1] / n, e[2] / n];
    match coords {
        CoordSystem::Cartesian => e,
        CoordSystem::CylindricalRz => [e[0], e[1] / p[0], e[2]],
    }
}

/// State along a normal line: position (3) and the 2x2 transfer matrix (4).
type LineState = [f64; 7];

fn line_rhs(c: &Coefficients, sigma: f64, y: &LineState) -> Option<LineState> {
    let p = [y[0], y[1], y[2]];
    let k = c.at(p)?;
    let v = native_velocity(c.grid.coords(), p, [k[0], k[1], k[2]]);
    let (h11, h22, k3, f) = (k[3], k[4], k[5], k[6]);
    // Along e3: u' = A u with A = [[h11, f - k3], [k3 - f, h22]]. The line is
    // traversed along -sigma e3, so the transfer matrix obeys M' = -sigma A M.
    let a = [[h11, f - k3], [k3 - f, h22]];
    let m = [[y[3], y[4]], [y[5], y[6]]];
    let mut out = [0.0; 7];
    for i in 0..3 {
        out[i] = -sigma * v[i];
    }
    for r in 0..2 {
        for col in 0..2 {
            out[3 + 2 * r + col] = -sigma * (a[r][0] * m[0][col] + a[r][1] * m[1][col]);
        }
    }
    Some(out)
}

/// One RK4 step that reports leaving the grid instead of extrapolating.
fn checked_step(c: &Coefficients, sigma: f64, y: &LineState, h: f64) -> Option<LineState> {
    let inside = std::cell::Cell::new(true);
    let f = |_t: f64, y: &LineState| match line_rhs(c, sigma, y) {
        Some(d) => d,
        None => {
            inside.set(false);
            [0.0; 7]
        }
    };
    let next = rk4_step(&f, 0.0, y, h);
    if inside.get() && c.at([next[0], next[1], next[2]]).is_some() {
        Some(next)
    } else {
        None
    }
}

/// Traces node `p` back to the starting level; returns the foot and the
/// transfer matrix `M` with `u(foot) = M u(p)`.
fn trace_to_level(c: &Coefficients, p: [f64; 3], level: f64, step: f64, max_arc: f64) -> Option<([f64; 3], [[f64; 2]; 2])> {
    let f_at = |y: &LineState| c.at([y[0], y[1], y[2]]).map(|k| k[6] - level);
    let mut y: LineState = [p[0], p[1], p[2], 1.0, 0.0, 0.0, 1.0];
    let d0 = f_at(&y)?;
    let scale = c.packed.iter().map(|k| k[6].abs()).fold(0.0, f64::max).max(1.0);
    if d0.abs() <= 1e-12 * scale {
        return Some((p, [[1.0, 0.0], [0.0, 1.0]]));
    }
    let sigma = d0.signum();
    let mut arc = 0.0;
    let mut d_prev = d0;
    while arc < max_arc {
        let h = step.min(max_arc - arc);
        let next = checked_step(c, sigma, &y, h).and_then(|n| Some((n, f_at(&n)?)));
        match next {
            Some((n, d)) if d * sigma > 0.0 => {
                y = n;
                d_prev = d;
                arc += h;
            }
            // crossed the level, or left the grid (the level may lie on its boundary)
            crossed => return land(c, sigma, &y, d_prev, h, crossed, scale, &f_at),
        }
    }
    None
}

/// Finds the step length in `(0, h]` that lands on the level: secant steps
/// while a crossing inside the grid brackets the root, bisection otherwise.
#[allow(clippy::too_many_arguments)]
fn land(
    c: &Coefficients,
    sigma: f64,
    y: &LineState,
    d_start: f64,
    h: f64,
    crossed: Option<(LineState, f64)>,
    scale: f64,
    f_at: &dyn Fn(&LineState) -> Option<f64>,
) -> Option<([f64; 3], [[f64; 2]; 2])> {
    let (mut lo, mut hi) = (0.0, h);
    let (mut lo_state, mut d_lo) = (*y, d_start);
    let mut hi_state = crossed;
    let tol = 1e-13 * scale;
    for _ in 0..80 {
        if d_lo.abs() <= tol || hi_state.as_ref().is_some_and(|(_, d)| d.abs() <= tol) || hi - lo <= 1e-15 * h {
            break;
        }
        let t = match &hi_state {
            Some((_, d_hi)) => {
                let t = lo + (hi - lo) * d_lo / (d_lo - d_hi);
                t.clamp(lo + 0.01 * (hi - lo), hi - 0.01 * (hi - lo))
            }
            None => 0.5 * (lo + hi),
        };
        match checked_step(c, sigma, y, t).and_then(|n| Some((n, f_at(&n)?))) {
            Some((n, d)) if d * sigma > 0.0 => {
                lo = t;
                lo_state = n;
                d_lo = d;
            }
            other => {
                hi = t;
                hi_state = other;
            }
        }
    }
    let best = match hi_state {
        Some((n, d)) if d.abs() < d_lo.abs() => (n, d),
        _ => (lo_state, d_lo),
    };
    if best.1.abs() > 1e-9 * scale {
        return None;
    }
    let b = best.0;
    Some(([b[0], b[1], b[2]], [[b[3], b[4]], [b[5], b[6]]]))
}

fn solve2(m: [[f64; 2]; 2], b: [f64; 2]) -> [f64; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [(m[1][1] * b[0] - m[0][1] * b[1]) / det, (m[0][0] * b[1] - m[1][0] * b[0]) / det]
}

/// Transports initial data from the level `f = level` along the normal lines
/// (integrating `R3 = R4 = 0`) and measures how far the transported field
/// violates `R1 = R2 = 0`.
pub fn evolve_level_surfaces(
    initial: &InitialData<'_>,
    inv: &FrameInvariants,
    f: &ScalarField,
    fr: &AdaptedFrame,
    opts: &EvolveOptions,
) -> Result<Evolution> {
    f.check_finite()?;
    let grid = f.grid.clone();
    let h = grid.h_min();
    let level = opts.level.unwrap_or_else(|| f.values.iter().copied().fold(f64::INFINITY, f64::min));
    let step = opts.step.unwrap_or(0.5 * h);
    if !(step > 0.0) {
        return Err(FramePdeError::Domain(format!("arc-length step must be positive, got {step}")));
    }
    let max_arc = opts.max_arc.unwrap_or(f64::INFINITY);
    let truncation = opts.truncation_constant * grid.h_max().powi(2);
    let tol = opts.tol.unwrap_or(truncation);

    // Initial residual on the starting level.
    let start = initial.on_grid(&grid);
    let range = f.values.iter().map(|v| (v - level).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let on_level: Vec<usize> = (0..grid.len()).filter(|&i| (f.values[i] - level).abs() <= 1e-9 * range).collect();
    let on_level = if on_level.is_empty() { nodes_next_to_level(f, level) } else { on_level };
    let start_res = system_residual(&start, inv, f, fr)?;
    let u_scale = on_level.iter().map(|&i| start.magnitude_at(i)).fold(0.0, f64::max);
    let rel = |res: &SystemResidual, nodes: &mut dyn Iterator<Item = usize>| -> f64 {
        if u_scale == 0.0 {
            return 0.0;
        }
        nodes.map(|i| res.r1.values[i].abs().max(res.r2.values[i].abs())).fold(0.0, f64::max) / u_scale
    };
    let initial_residual = rel(&start_res, &mut on_level.iter().copied());
    if initial_residual > tol {
        return Err(FramePdeError::IncompatibleInitialData { residual: initial_residual, tol });
    }

    let coeffs = Coefficients::new(inv, f, fr);
    let traced: Vec<Option<[f64; 2]>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (foot, m) = trace_to_level(&coeffs, grid.point(i), level, step, max_arc)?;
            let u_foot = initial.at(foot)?;
            Some(solve2(m, u_foot))
        })
        .collect();
    let evolved: Vec<bool> = traced.iter().map(Option::is_some).collect();
    if !evolved.iter().any(|e| *e) {
        return Err(FramePdeError::StepOutOfDomain);
    }
    let field = TangentialField {
        u1: ScalarField { grid: grid.clone(), values: traced.iter().map(|t| t.map_or(0.0, |u| u[0])).collect() },
        u2: ScalarField { grid: grid.clone(), values: traced.iter().map(|t| t.map_or(0.0, |u| u[1])).collect() },
    };
    let residual = system_residual(&field, inv, f, fr)?;
    let eligible = (0..grid.len()).filter(|&i| stencil_evolved(&grid, &evolved, i));
    let final_residual = rel(&residual, &mut eligible.into_iter());
    let amplification = if initial_residual > 0.0 {
        final_residual / initial_residual
    } else if final_residual > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let truncation_floor = 10.0 * truncation;
    let incompatible = amplification >= opts.growth_factor && final_residual >= truncation_floor;
    Ok(Evolution {
        field,
        evolved,
        level,
        residual,
        initial_residual,
        final_residual,
        amplification,
        truncation_floor,
        incompatible,
    })
}

fn nodes_next_to_level(f: &ScalarField, level: f64) -> Vec<usize> {
    let grid = &f.grid;
    let strides = grid.strides();
    let mut out = Vec::new();
    for i in 0..grid.len() {
        let ijk = grid.ijk(i);
        let here = f.values[i] - level;
        let crosses = (0..3).any(|a| {
            ijk[a] + 1 < grid.dims()[a] && here * (f.values[i + strides[a]] - level) <= 0.0
                || ijk[a] > 0 && here * (f.values[i - strides[a]] - level) <= 0.0
        });
        if crosses {
            out.push(i);
        }
    }
    out
}

/// Whether every node within two index steps (clamped to the grid) was evolved.
fn stencil_evolved(grid: &Grid, evolved: &[bool], i: usize) -> bool {
    let ijk = grid.ijk(i);
    let dims = grid.dims();
    let range = |a: usize| ijk[a].saturating_sub(2)..=(ijk[a] + 2).min(dims[a] - 1);
    for k in range(2) {
        for j in range(1) {
            for l in range(0) {
                if !evolved[grid.index(l, j, k)] {
                    return false;
                }
            }
        }
    }
    true
}

/// Sampled solution of the radial system for fields tangent to coaxial
/// cylinders `r = const`, in the frame `(e_theta, e_z, e_r)`:
/// `u1' = -u1 / r + phi(r) u2`, `u2' = -phi(r) u1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderSolution {
    pub trajectory: Trajectory<2>,
}

impl CylinderSolution {
    pub fn r(&self) -> &[f64] {
        &self.trajectory.t
    }

    pub fn u(&self) -> &[[f64; 2]] {
        &self.trajectory.y
    }

    pub fn at(&self, r: f64) -> Option<[f64; 2]> {
        self.trajectory.at(r)
    }
}

/// `phi` may use `r` (or `t`, bound to the same value).
pub fn cylinder_ode_solve(phi: &Expr, r0: f64, u0: [f64; 2], r1: f64, step: f64) -> Result<CylinderSolution> {
    if !(r0 > 0.0 && r1 > 0.0) {
        return Err(FramePdeError::Domain(format!("radial interval [{r0}, {r1}] must stay in r > 0")));
    }
    if !(step > 0.0) {
        return Err(FramePdeError::Domain(format!("step must be positive, got {step}")));
    }
    let phi_at = |r: f64| phi.evaluate(&Bindings::new().with(Var::R, r).with(Var::T, r));
    // Surface evaluation errors up front rather than inside the integrator.
    phi_at(r0)?;
    phi_at(r1)?;
    let failure = std::cell::RefCell::new(None);
    let rhs = |r: f64, u: &[f64; 2]| -> [f64; 2] {
        let p = phi_at(r).unwrap_or_else(|e| {
            failure.borrow_mut().get_or_insert(e);
            0.0
        });
        [-u[0] / r + p * u[1], -p * u[0]]
    };
    let steps = ((r1 - r0).abs() / step).ceil() as usize;
    let trajectory = integrate(rhs, r0, u0, r1, steps);
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    Ok(CylinderSolution { trajectory })
}
