//! Marching the Beltrami system in `x3` from data on a plane.
//!
//! With `w = d2 u1 - d1 u2` the system solved for `x3`-derivatives reads
//!
//! ```text
//! d3 u1 = d1 u3 - (u2 / u3) w
//! d3 u2 = d2 u3 + (u1 / u3) w
//! d3 u3 = -(d1 u1 + d2 u2)
//! ```
//!
//! and `f = -w / u3`. The slice is periodic in `(x1, x2)`; in-plane
//! derivatives are spectral, the march is classical RK4. The problem is
//! ill-posed for large depth, so every step ends with a low-pass filter.
//! The quotient `w / u3` is taken in the least-squares sense over the
//! retained modes (see [`quotient`]).

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::grid::ops::diff_axis;
use crate::grid::{CoordSystem, Grid, GridError, ScalarField, Stencil, VectorField};

#[derive(Debug, Error)]
pub enum CauchyError {
    #[error("|u3| = {value:e} at x3 = {x3} (index {index}) is below u3_min")]
    U3Vanished { x3: f64, index: usize, value: f64 },
    #[error("field norm {norm:e} at x3 = {x3} exceeds the blow-up bound {bound:e}")]
    BlowUp { x3: f64, norm: f64, bound: f64 },
    #[error("invalid slice: {0}")]
    InvalidSlice(String),
    #[error("invalid march options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type Result<T, E = CauchyError> = std::result::Result<T, E>;

/// Samples of `(u1, u2, u3)` on a periodic `(x1, x2)` grid at height `x3`.
/// Node `(i, j)` sits at `lo + (i h1, j h2)` with `h = period / n`, stored at `i + n1 j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CauchySlice {
    pub lo: [f64; 2],
    pub period: [f64; 2],
    pub n: [usize; 2],
    pub x3: f64,
    pub u: [Vec<f64>; 3],
}

impl CauchySlice {
    pub fn from_fn<F: Fn([f64; 3]) -> [f64; 3]>(lo: [f64; 2], period: [f64; 2], n: [usize; 2], x3: f64, f: F) -> Result<Self> {
        check_shape(period, n)?;
        let mut u = [Vec::new(), Vec::new(), Vec::new()];
        for j in 0..n[1] {
            for i in 0..n[0] {
                let p = [lo[0] + i as f64 * period[0] / n[0] as f64, lo[1] + j as f64 * period[1] / n[1] as f64, x3];
                let v = f(p);
                for c in 0..3 {
                    u[c].push(v[c]);
                }
            }
        }
        Ok(CauchySlice { lo, period, n, x3, u })
    }

    /// Takes a field on a cartesian grid with a single node along `z`; the
    /// period on each axis is `nodes * spacing`.
    pub fn from_field(u: &VectorField) -> Result<Self> {
        let g = &u.grid;
        if g.coords() != CoordSystem::Cartesian || g.dims()[2] != 1 {
            return Err(CauchyError::InvalidSlice("expected a cartesian grid with dims [n1, n2, 1]".into()));
        }
        u.check_finite()?;
        let (o, s, d) = (g.origin(), g.spacing(), g.dims());
        let period = [s[0] * d[0] as f64, s[1] * d[1] as f64];
        check_shape(period, [d[0], d[1]])?;
        let u = std::array::from_fn(|c| u.values.iter().map(|v| v[c]).collect());
        Ok(CauchySlice { lo: [o[0], o[1]], period, n: [d[0], d[1]], x3: o[2], u })
    }

    pub fn spacing(&self) -> [f64; 2] {
        [self.period[0] / self.n[0] as f64, self.period[1] / self.n[1] as f64]
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().flatten().fold(0.0f64, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v.abs()) })
    }

    fn min_abs_u3(&self) -> (usize, f64) {
        self.u[2].iter().enumerate().fold((0, f64::INFINITY), |best, (i, v)| if !(v.abs() >= best.1) { (i, v.abs()) } else { best })
    }
}

fn check_shape(period: [f64; 2], n: [usize; 2]) -> Result<()> {
    if n.iter().any(|&k| k < 4) {
        return Err(CauchyError::InvalidSlice(format!("need at least 4 nodes per axis, got {n:?}")));
    }
    if period.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(CauchyError::InvalidSlice(format!("periods must be positive, got {period:?}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct MarchOptions {
    pub depth: f64,
    pub steps: usize,
    /// Modes with `|m| > filter_frac * n / 2` are zeroed after every step.
    pub filter_frac: f64,
    pub u3_min: f64,
    /// Growth factor of the sup norm that counts as blow-up.
    pub blowup: f64,
}

impl Default for MarchOptions {
    fn default() -> Self {
        MarchOptions { depth: 0.2, steps: 40, filter_frac: 2.0 / 3.0, u3_min: 1e-6, blowup: 1e6 }
    }
}

/// Spectral differentiation on one slice shape.
struct Spectral {
    n: [usize; 2],
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
    wavenumber: [Vec<f64>; 2],
    keep: [Vec<bool>; 2],
}

fn signed_mode(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

impl Spectral {
    fn new(n: [usize; 2], period: [f64; 2], filter_frac: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = [planner.plan_fft_forward(n[0]), planner.plan_fft_forward(n[1])];
        let inv = [planner.plan_fft_inverse(n[0]), planner.plan_fft_inverse(n[1])];
        let wavenumber = std::array::from_fn(|a| {
            (0..n[a])
                .map(|k| {
                    let m = signed_mode(k, n[a]);
                    // the Nyquist mode has no odd derivative
                    if n[a] % 2 == 0 && k == n[a] / 2 {
                        0.0
                    } else {
                        2.0 * std::f64::consts::PI * m as f64 / period[a]
                    }
                })
                .collect()
        });
        let keep = std::array::from_fn(|a| {
            (0..n[a]).map(|k| (signed_mode(k, n[a]).unsigned_abs() as f64) <= filter_frac * n[a] as f64 / 2.0).collect()
        });
        Spectral { n, fwd, inv, wavenumber, keep }
    }

    /// Applies `op(k, coefficient)` to the transform along `axis` of every line.
    fn along<F>(&self, v: &[f64], axis: usize, op: F) -> Vec<f64>
    where
        F: Fn(usize, Complex<f64>) -> Complex<f64> + Sync,
    {
        let [n0, n1] = self.n;
        let (len, count) = if axis == 0 { (n0, n1) } else { (n1, n0) };
        let scale = 1.0 / len as f64;
        let lines: Vec<Vec<f64>> = (0..count)
            .into_par_iter()
            .map(|line| {
                let at = |k: usize| if axis == 0 { k + n0 * line } else { line + n0 * k };
                let mut buf: Vec<Complex<f64>> = (0..len).map(|k| Complex::new(v[at(k)], 0.0)).collect();
                self.fwd[axis].process(&mut buf);
                for (k, c) in buf.iter_mut().enumerate() {
                    *c = op(k, *c);
                }
                self.inv[axis].process(&mut buf);
                buf.iter().map(|c| c.re * scale).collect()
            })
            .collect();
        let mut out = vec![0.0; v.len()];
        for (line, vals) in lines.into_iter().enumerate() {
            for (k, x) in vals.into_iter().enumerate() {
                let idx = if axis == 0 { k + n0 * line } else { line + n0 * k };
                out[idx] = x;
            }
        }
        out
    }

    fn diff(&self, v: &[f64], axis: usize) -> Vec<f64> {
        let kw = &self.wavenumber[axis];
        self.along(v, axis, |k, c| c * Complex::new(0.0, kw[k]))
    }

    fn filter(&self, v: &[f64]) -> Vec<f64> {
        let zero = Complex::new(0.0, 0.0);
        let a = self.along(v, 0, |k, c| if self.keep[0][k] { c } else { zero });
        self.along(&a, 1, |k, c| if self.keep[1][k] { c } else { zero })
    }
}

fn grid_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Band-limited quotient `q ~ w / u3`: least-squares solution of `u3 q = w`
/// over the retained modes, by conjugate gradients on the normal equations
/// `P(u3^2 q) = P(u3 w)`. Pointwise division is unstable wherever `u3`
/// changes sign across the slice, while the true quotient (`-f`) is smooth.
fn quotient(sp: &Spectral, w: &[f64], u3: &[f64], guess: &mut Vec<f64>) -> usize {
    let apply = |q: &[f64]| -> Vec<f64> {
        let t: Vec<f64> = q.iter().zip(u3).map(|(q, u)| u * u * q).collect();
        sp.filter(&t)
    };
    let b = sp.filter(&w.iter().zip(u3).map(|(w, u)| w * u).collect::<Vec<_>>());
    let b_norm = grid_dot(&b, &b).sqrt();
    if b_norm == 0.0 {
        guess.iter_mut().for_each(|v| *v = 0.0);
        return 0;
    }
    let mut x = sp.filter(guess);
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = grid_dot(&r, &r);
    let mut it = 0;
    while rr.sqrt() > QUOTIENT_TOL * b_norm && it < QUOTIENT_MAX_ITER {
        let ap = apply(&p);
        let alpha = rr / grid_dot(&p, &ap);
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_next = grid_dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
        it += 1;
    }
    *guess = x;
    it
}

const QUOTIENT_TOL: f64 = 1e-13;
const QUOTIENT_MAX_ITER: usize = 5000;

fn rhs(sp: &Spectral, u: &[Vec<f64>; 3], q: &mut Vec<f64>) -> [Vec<f64>; 3] {
    let d1u1 = sp.diff(&u[0], 0);
    let d2u1 = sp.diff(&u[0], 1);
    let d1u2 = sp.diff(&u[1], 0);
    let d2u2 = sp.diff(&u[1], 1);
    let d1u3 = sp.diff(&u[2], 0);
    let d2u3 = sp.diff(&u[2], 1);
    let n = u[0].len();
    let w: Vec<f64> = (0..n).map(|i| d2u1[i] - d1u2[i]).collect();
    quotient(sp, &w, &u[2], q);
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        out[0][i] = d1u3[i] - u[1][i] * q[i];
        out[1][i] = d2u3[i] + u[0][i] * q[i];
        out[2][i] = -(d1u1[i] + d2u2[i]);
    }
    out
}

fn axpy(u: &[Vec<f64>; 3], a: f64, k: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
    std::array::from_fn(|c| u[c].iter().zip(&k[c]).map(|(x, y)| x + a * y).collect())
}

/// Marches `initial` to `initial.x3 + depth`. The result lives on a cartesian
/// grid with dims `[n1, n2, steps + 1]`, one layer per step.
pub fn march(initial: &CauchySlice, opts: &MarchOptions) -> Result<VectorField> {
    if !(opts.depth.is_finite() && opts.depth > 0.0) {
        return Err(CauchyError::InvalidOptions(format!("depth must be positive, got {}", opts.depth)));
    }
    if opts.steps < crate::grid::MIN_AXIS_NODES - 1 {
        return Err(CauchyError::InvalidOptions(format!("need at least {} steps", crate::grid::MIN_AXIS_NODES - 1)));
    }
    if !(opts.filter_frac > 0.0 && opts.filter_frac <= 1.0) {
        return Err(CauchyError::InvalidOptions(format!("filter_frac must lie in (0, 1], got {}", opts.filter_frac)));
    }
    check_shape(initial.period, initial.n)?;
    if initial.u.iter().any(|c| c.len() != initial.len()) {
        return Err(CauchyError::InvalidSlice("component lengths do not match the node count".into()));
    }
    if let Some(index) = initial.u.iter().flatten().position(|v| !v.is_finite()) {
        return Err(GridError::NonFiniteInput { index }.into());
    }
    let (index, value) = initial.min_abs_u3();
    if value < opts.u3_min {
        return Err(CauchyError::U3Vanished { x3: initial.x3, index, value });
    }

    let sp = Spectral::new(initial.n, initial.period, opts.filter_frac);
    let dz = opts.depth / opts.steps as f64;
    let bound = opts.blowup * initial.sup_norm();
    let [h1, h2] = initial.spacing();
    let grid = Grid::new(
        [initial.lo[0], initial.lo[1], initial.x3],
        [h1, h2, dz],
        [initial.n[0], initial.n[1], opts.steps + 1],
        CoordSystem::Cartesian,
    )?;

    let mut values = Vec::with_capacity(grid.len());
    let push = |values: &mut Vec<[f64; 3]>, u: &[Vec<f64>; 3]| {
        values.extend((0..u[0].len()).map(|i| [u[0][i], u[1][i], u[2][i]]));
    };
    let mut u = initial.u.clone();
    let mut q = vec![0.0; initial.len()];
    push(&mut values, &u);
    for step in 1..=opts.steps {
        let k1 = rhs(&sp, &u, &mut q);
        let k2 = rhs(&sp, &axpy(&u, 0.5 * dz, &k1), &mut q);
        let k3 = rhs(&sp, &axpy(&u, 0.5 * dz, &k2), &mut q);
        let k4 = rhs(&sp, &axpy(&u, dz, &k3), &mut q);
        let next: [Vec<f64>; 3] = std::array::from_fn(|c| {
            let raw: Vec<f64> = (0..u[c].len())
                .map(|i| u[c][i] + dz / 6.0 * (k1[c][i] + 2.0 * k2[c][i] + 2.0 * k3[c][i] + k4[c][i]))
                .collect();
            sp.filter(&raw)
        });
        u = next;
        let x3 = initial.x3 + step as f64 * dz;
        let norm = u.iter().flatten().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
        if !(norm <= bound) {
            return Err(CauchyError::BlowUp { x3, norm, bound });
        }
        let (index, value) = u[2].iter().enumerate().fold((0, f64::INFINITY), |b, (i, v)| if v.abs() < b.1 { (i, v.abs()) } else { b });
        if value < opts.u3_min {
            return Err(CauchyError::U3Vanished { x3, index, value });
        }
        push(&mut values, &u);
    }
    Ok(VectorField { grid, values })
}

/// `f = (d1 u2 - d2 u1) / u3` by finite differences on the grid of `u`.
pub fn recover_f(u: &VectorField, stencil: Stencil, u3_min: f64) -> Result<ScalarField> {
    u.check_finite()?;
    let g = &u.grid;
    if g.coords() != CoordSystem::Cartesian {
        return Err(CauchyError::InvalidSlice("recover_f needs cartesian components".into()));
    }
    for (index, v) in u.values.iter().enumerate() {
        if !(v[2].abs() >= u3_min) {
            return Err(CauchyError::U3Vanished { x3: g.point(index)[2], index, value: v[2].abs() });
        }
    }
    let u1: Vec<f64> = u.values.iter().map(|v| v[0]).collect();
    let u2: Vec<f64> = u.values.iter().map(|v| v[1]).collect();
    let d2u1 = diff_axis(&u1, g, 1, stencil);
    let d1u2 = diff_axis(&u2, g, 0, stencil);
    let values = (0..g.len()).map(|i| (d1u2[i] - d2u1[i]) / u.values[i][2]).collect();
    Ok(ScalarField { grid: g.clone(), values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_derivative_of_band_limited_data_is_exact() {
        let n = [16, 12];
        let period = [2.0 * std::f64::consts::PI, 3.0];
        let s = CauchySlice::from_fn([0.0, 0.0], period, n, 0.0, |p| {
            [(2.0 * p[0]).sin() * (2.0 * std::f64::consts::PI * p[1] / 3.0).cos(), 0.0, 1.0]
        })
        .unwrap();
        let sp = Spectral::new(n, period, 1.0);
        let d0 = sp.diff(&s.u[0], 0);
        let d1 = sp.diff(&s.u[0], 1);
        let h = s.spacing();
        for j in 0..n[1] {
            for i in 0..n[0] {
                let (x, y) = (i as f64 * h[0], j as f64 * h[1]);
                let w = 2.0 * std::f64::consts::PI / 3.0;
                assert!((d0[i + n[0] * j] - 2.0 * (2.0 * x).cos() * (w * y).cos()).abs() < 1e-12);
                assert!((d1[i + n[0] * j] + w * (2.0 * x).sin() * (w * y).sin()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn filter_removes_high_modes_only() {
        let n = [12, 12];
        let period = [1.0, 1.0];
        let tau = 2.0 * std::f64::consts::PI;
        let s = CauchySlice::from_fn([0.0, 0.0], period, n, 0.0, |p| [(tau * p[0]).cos() + (5.0 * tau * p[1]).sin(), 0.0, 1.0]).unwrap();
        let sp = Spectral::new(n, period, 2.0 / 3.0);
        let out = sp.filter(&s.u[0]);
        let h = s.spacing();
        for j in 0..n[1] {
            for i in 0..n[0] {
                assert!((out[i + n[0] * j] - (tau * i as f64 * h[0]).cos()).abs() < 1e-13);
            }
        }
    }
}
