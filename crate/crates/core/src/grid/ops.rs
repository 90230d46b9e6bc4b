//! Finite-difference vector calculus on [`Grid`]s.
//!
//! Every operator is a tensor product of 1D difference stencils, so mixed
//! differences commute exactly and `div(curl u)` and `curl(grad f)` vanish to
//! round-off in Cartesian coordinates. Cylindrical divergence and the
//! `z`-component of curl use the conservative `(1/r) d/dr (r .)` form.

use rayon::prelude::*;
use serde::Serialize;

use super::{CoordSystem, Grid, GridError, Result, ScalarField, VectorField};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// Centered second order, one-sided second order at boundaries.
    #[default]
    Second,
    /// Centered fourth order with fourth-order one-sided boundary closures.
    Fourth,
}

type Taps = &'static [(isize, f64)];

const D1_2_IN: Taps = &[(-1, -0.5), (1, 0.5)];
const D1_2_LO: Taps = &[(0, -1.5), (1, 2.0), (2, -0.5)];
const D1_2_HI: Taps = &[(0, 1.5), (-1, -2.0), (-2, 0.5)];

const D1_4_IN: Taps = &[(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
const D1_4_LO0: Taps =
    &[(0, -25.0 / 12.0), (1, 48.0 / 12.0), (2, -36.0 / 12.0), (3, 16.0 / 12.0), (4, -3.0 / 12.0)];
const D1_4_LO1: Taps =
    &[(-1, -3.0 / 12.0), (0, -10.0 / 12.0), (1, 18.0 / 12.0), (2, -6.0 / 12.0), (3, 1.0 / 12.0)];
const D1_4_HI1: Taps =
    &[(1, 3.0 / 12.0), (0, 10.0 / 12.0), (-1, -18.0 / 12.0), (-2, 6.0 / 12.0), (-3, -1.0 / 12.0)];
const D1_4_HI0: Taps =
    &[(0, 25.0 / 12.0), (-1, -48.0 / 12.0), (-2, 36.0 / 12.0), (-3, -16.0 / 12.0), (-4, 3.0 / 12.0)];

const D2_IN: Taps = &[(-1, 1.0), (0, -2.0), (1, 1.0)];
const D2_LO: Taps = &[(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)];
const D2_HI: Taps = &[(0, 2.0), (-1, -5.0), (-2, 4.0), (-3, -1.0)];

fn first_taps(stencil: Stencil, pos: usize, n: usize) -> Taps {
    match stencil {
        Stencil::Second => {
            if pos == 0 {
                D1_2_LO
            } else if pos + 1 == n {
                D1_2_HI
            } else {
                D1_2_IN
            }
        }
        Stencil::Fourth => match pos {
            0 => D1_4_LO0,
            1 => D1_4_LO1,
            p if p + 1 == n => D1_4_HI0,
            p if p + 2 == n => D1_4_HI1,
            _ => D1_4_IN,
        },
    }
}

fn second_taps(pos: usize, n: usize) -> Taps {
    if pos == 0 {
        D2_LO
    } else if pos + 1 == n {
        D2_HI
    } else {
        D2_IN
    }
}

fn apply_axis(values: &[f64], grid: &Grid, axis: usize, scale: f64, taps_at: impl Fn(usize) -> Taps + Sync) -> Vec<f64> {
    let n = grid.dims()[axis];
    if n == 1 {
        return vec![0.0; values.len()];
    }
    let stride = grid.strides()[axis] as isize;
    (0..values.len())
        .into_par_iter()
        .map(|idx| {
            let pos = (idx / stride as usize) % n;
            let mut acc = 0.0;
            for &(off, w) in taps_at(pos) {
                acc += w * values[(idx as isize + off * stride) as usize];
            }
            acc * scale
        })
        .collect()
}

/// First partial derivative along a native coordinate axis (`d/dtheta` on
/// the theta axis, without the `1/r`). Zero along unused axes.
pub fn diff_axis(values: &[f64], grid: &Grid, axis: usize, stencil: Stencil) -> Vec<f64> {
    let n = grid.dims()[axis];
    apply_axis(values, grid, axis, 1.0 / grid.spacing()[axis], |pos| first_taps(stencil, pos, n))
}

/// Second partial derivative along a native axis, second order everywhere.
pub fn diff2_axis(values: &[f64], grid: &Grid, axis: usize) -> Vec<f64> {
    let n = grid.dims()[axis];
    let h = grid.spacing()[axis];
    apply_axis(values, grid, axis, 1.0 / (h * h), |pos| second_taps(pos, n))
}

fn radius(grid: &Grid, idx: usize) -> f64 {
    grid.point(idx)[0]
}

fn check_unit(e: &VectorField) -> Result<()> {
    for (index, v) in e.values.iter().enumerate() {
        let norm = super::norm(*v);
        if !((norm - 1.0).abs() <= 1e-8) {
            return Err(GridError::NotUnit { index, norm });
        }
    }
    Ok(())
}

pub fn gradient(f: &ScalarField, stencil: Stencil) -> Result<VectorField> {
    f.check_finite()?;
    let g = &f.grid;
    let d: [Vec<f64>; 3] = std::array::from_fn(|a| diff_axis(&f.values, g, a, stencil));
    let cyl = g.coords() == CoordSystem::CylindricalRz;
    let values = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let t = if cyl { d[1][i] / radius(g, i) } else { d[1][i] };
            [d[0][i], t, d[2][i]]
        })
        .collect();
    Ok(VectorField { grid: g.clone(), values })
}

/// Raw partials `P[m][k] = d u^m / d x^k` in native coordinates.
fn raw_partials(u: &VectorField, stencil: Stencil) -> [[Vec<f64>; 3]; 3] {
    std::array::from_fn(|m| {
        let comp: Vec<f64> = u.values.iter().map(|v| v[m]).collect();
        std::array::from_fn(|k| diff_axis(&comp, &u.grid, k, stencil))
    })
}

/// Covariant Jacobian `J[m][k] = <(e_k . nabla) u, e_m>` in the grid's
/// orthonormal frame, per node.
pub fn jacobian(u: &VectorField, stencil: Stencil) -> Result<Vec<[[f64; 3]; 3]>> {
    u.check_finite()?;
    let g = &u.grid;
    let p = raw_partials(u, stencil);
    let cyl = g.coords() == CoordSystem::CylindricalRz;
    Ok((0..g.len())
        .into_par_iter()
        .map(|i| {
            let mut j: [[f64; 3]; 3] = std::array::from_fn(|m| std::array::from_fn(|k| p[m][k][i]));
            if cyl {
                let r = radius(g, i);
                let v = u.values[i];
                j[0][1] = (j[0][1] - v[1]) / r;
                j[1][1] = (j[1][1] + v[0]) / r;
                j[2][1] /= r;
            }
            j
        })
        .collect())
}

pub fn curl(u: &VectorField, stencil: Stencil) -> Result<VectorField> {
    u.check_finite()?;
    let g = &u.grid;
    let values = match g.coords() {
        CoordSystem::Cartesian => {
            let p = raw_partials(u, stencil);
            (0..g.len())
                .into_par_iter()
                .map(|i| [p[2][1][i] - p[1][2][i], p[0][2][i] - p[2][0][i], p[1][0][i] - p[0][1][i]])
                .collect()
        }
        CoordSystem::CylindricalRz => {
            let comp = |m: usize| -> Vec<f64> { u.values.iter().map(|v| v[m]).collect() };
            let (ur, ut, uz) = (comp(0), comp(1), comp(2));
            let r_ut: Vec<f64> = (0..g.len()).map(|i| radius(g, i) * ut[i]).collect();
            let dt_uz = diff_axis(&uz, g, 1, stencil);
            let dz_ut = diff_axis(&ut, g, 2, stencil);
            let dz_ur = diff_axis(&ur, g, 2, stencil);
            let dr_uz = diff_axis(&uz, g, 0, stencil);
            let dr_rut = diff_axis(&r_ut, g, 0, stencil);
            let dt_ur = diff_axis(&ur, g, 1, stencil);
            (0..g.len())
                .into_par_iter()
                .map(|i| {
                    let r = radius(g, i);
                    [dt_uz[i] / r - dz_ut[i], dz_ur[i] - dr_uz[i], (dr_rut[i] - dt_ur[i]) / r]
                })
                .collect()
        }
    };
    Ok(VectorField { grid: g.clone(), values })
}

pub fn divergence(u: &VectorField, stencil: Stencil) -> Result<ScalarField> {
    u.check_finite()?;
    let g = &u.grid;
    let comp = |m: usize| -> Vec<f64> { u.values.iter().map(|v| v[m]).collect() };
    let values = match g.coords() {
        CoordSystem::Cartesian => {
            let d: [Vec<f64>; 3] = std::array::from_fn(|a| diff_axis(&comp(a), g, a, stencil));
            (0..g.len()).into_par_iter().map(|i| d[0][i] + d[1][i] + d[2][i]).collect()
        }
        CoordSystem::CylindricalRz => {
            let r_ur: Vec<f64> = u.values.iter().enumerate().map(|(i, v)| radius(g, i) * v[0]).collect();
            let dr = diff_axis(&r_ur, g, 0, stencil);
            let dt = diff_axis(&comp(1), g, 1, stencil);
            let dz = diff_axis(&comp(2), g, 2, stencil);
            (0..g.len()).into_par_iter().map(|i| (dr[i] + dt[i]) / radius(g, i) + dz[i]).collect()
        }
    };
    Ok(ScalarField { grid: g.clone(), values })
}

/// Laplacian. The second-order stencil uses compact second differences; the
/// fourth-order stencil composes divergence and gradient.
pub fn laplacian(f: &ScalarField, stencil: Stencil) -> Result<ScalarField> {
    f.check_finite()?;
    if stencil == Stencil::Fourth {
        return divergence(&gradient(f, stencil)?, stencil);
    }
    let g = &f.grid;
    let d2: [Vec<f64>; 3] = std::array::from_fn(|a| diff2_axis(&f.values, g, a));
    let values = match g.coords() {
        CoordSystem::Cartesian => (0..g.len()).into_par_iter().map(|i| d2[0][i] + d2[1][i] + d2[2][i]).collect(),
        CoordSystem::CylindricalRz => {
            let dr = diff_axis(&f.values, g, 0, stencil);
            (0..g.len())
                .into_par_iter()
                .map(|i| {
                    let r = radius(g, i);
                    d2[0][i] + dr[i] / r + d2[1][i] / (r * r) + d2[2][i]
                })
                .collect()
        }
    };
    Ok(ScalarField { grid: g.clone(), values })
}

/// `(e . nabla) f` for a unit direction field `e`.
pub fn directional_derivative(f: &ScalarField, e: &VectorField, stencil: Stencil) -> Result<ScalarField> {
    f.grid.same_as(&e.grid)?;
    check_unit(e)?;
    let grad = gradient(f, stencil)?;
    grad.dot(e)
}

/// `(e . nabla) u` for a unit direction field `e`, covariant in cylindrical grids.
pub fn directional_derivative_vector(u: &VectorField, e: &VectorField, stencil: Stencil) -> Result<VectorField> {
    u.grid.same_as(&e.grid)?;
    check_unit(e)?;
    let j = jacobian(u, stencil)?;
    let values = j
        .par_iter()
        .zip(e.values.par_iter())
        .map(|(j, e)| std::array::from_fn(|m| j[m][0] * e[0] + j[m][1] * e[1] + j[m][2] * e[2]))
        .collect();
    Ok(VectorField { grid: u.grid.clone(), values })
}
