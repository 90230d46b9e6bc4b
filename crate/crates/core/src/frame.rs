//! Adapted orthonormal frames for the level surfaces of a scalar field and
//! their connection coefficients.
//!
//! Conventions: `e3 = grad f / |grad f|`, `e2 = e3 x e1`, and
//!
//! * `g = -ln |grad f|`, `g_i = e_i(g)`
//! * `h_ij = <nabla_{e_j} e_i, e3>` for `i, j in {1, 2}` (second fundamental form),
//!   evaluated as `-<e_i, nabla_{e_j} e3>` with `h12` symmetrised
//! * `k_i = <nabla_{e_i} e2, e1>`
//!
//! so that `nabla_X e_i = sum_j w^j_i(X) e_j` with `w^3_1 = (h11, h12, g1)`,
//! `w^3_2 = (h12, h22, g2)` and `w^1_2 = (k1, k2, k3)` in the coframe.
//! In a principal frame `e1` carries the smaller principal curvature of the
//! shape operator `S(X) = -nabla_X e3`.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::grid::ops::{directional_derivative, gradient, jacobian};
use crate::grid::{cross, dot, norm, scale, sub, GridError, ScalarField, Stencil, VectorField};

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("|grad f| = {magnitude:e} at node {index} is below the tolerance {tol:e}")]
    GradientTooSmall { index: usize, magnitude: f64, tol: f64 },
    #[error("principal directions are undefined at {umbilic_nodes} of {total} nodes (umbilic within tolerance)")]
    AmbiguousPrincipalDirections { umbilic_nodes: usize, total: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type Result<T, E = FrameError> = std::result::Result<T, E>;

/// How to choose `e1`, `e2` inside the tangent planes of the level surfaces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameMode {
    /// Principal curvature directions; fails at umbilic points.
    Principal,
    /// A smooth completion built from a fixed reference axis; the only option
    /// for totally umbilic level surfaces.
    Completion,
    /// Completion when every node is umbilic, principal when none is, error otherwise.
    #[default]
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Principal,
    Completion,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrameOptions {
    /// Smallest admissible `|grad f|`.
    pub grad_tol: f64,
    /// Umbilic tolerance: a node is umbilic when `|h2| <= eps (1 + |h1|)`.
    pub umbilic_eps: f64,
    pub mode: FrameMode,
    pub stencil: Stencil,
}

impl Default for FrameOptions {
    fn default() -> Self {
        FrameOptions { grad_tol: 1e-10, umbilic_eps: 1e-6, mode: FrameMode::Auto, stencil: Stencil::Second }
    }
}

#[derive(Clone, Debug)]
pub struct AdaptedFrame {
    pub e1: VectorField,
    pub e2: VectorField,
    pub e3: VectorField,
    pub kind: FrameKind,
    /// Adjacent node pairs whose `e1` point in opposite directions after the
    /// continuity sweep. Nonzero only when no globally continuous principal
    /// frame was found; reported, not repaired.
    pub seams: usize,
    pub stencil: Stencil,
}

#[derive(Clone, Debug)]
pub struct FrameInvariants {
    pub g: ScalarField,
    pub g1: ScalarField,
    pub g2: ScalarField,
    pub g3: ScalarField,
    pub h11: ScalarField,
    pub h12: ScalarField,
    pub h22: ScalarField,
    pub k1: ScalarField,
    pub k2: ScalarField,
    pub k3: ScalarField,
}

impl FrameInvariants {
    /// Mean part `(h11 + h22) / 2`.
    pub fn h1(&self) -> ScalarField {
        self.h11.lin_comb(0.5, &self.h22, 0.5).expect("invariants share a grid")
    }

    /// Umbilic-defect part `(h11 - h22) / 2`.
    pub fn h2(&self) -> ScalarField {
        self.h11.lin_comb(0.5, &self.h22, -0.5).expect("invariants share a grid")
    }

    pub fn named(&self) -> [(&'static str, &ScalarField); 10] {
        [
            ("g", &self.g),
            ("g1", &self.g1),
            ("g2", &self.g2),
            ("g3", &self.g3),
            ("h11", &self.h11),
            ("h12", &self.h12),
            ("h22", &self.h22),
            ("k1", &self.k1),
            ("k2", &self.k2),
            ("k3", &self.k3),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UmbilicType {
    TotallyUmbilic,
    NoUmbilicPoints,
    Mixed,
}

fn unit_normal(f: &ScalarField, opts: &FrameOptions) -> Result<(VectorField, Vec<f64>)> {
    let grad = gradient(f, opts.stencil)?;
    let mags: Vec<f64> = grad.values.iter().map(|v| norm(*v)).collect();
    if let Some(index) = mags.iter().position(|m| !(*m >= opts.grad_tol)) {
        return Err(FrameError::GradientTooSmall { index, magnitude: mags[index], tol: opts.grad_tol });
    }
    let values = grad.values.iter().zip(&mags).map(|(v, m)| scale(*v, 1.0 / m)).collect();
    Ok((VectorField { grid: f.grid.clone(), values }, mags))
}

/// Reference-axis completion: the grid frame axis least aligned with `e3`
/// over the whole grid, projected into the tangent planes. Ties prefer the
/// third axis, then the first: `f = z` gets `(e_x, e_y)`, `f = theta` gets
/// `(e_z, e_r)` on both grid kinds.
fn completion(e3: &VectorField) -> VectorField {
    let worst: [f64; 3] =
        std::array::from_fn(|m| e3.values.iter().map(|v| v[m].abs()).fold(0.0, f64::max));
    let mut axis = 2;
    for m in [0, 1] {
        if worst[m] < worst[axis] {
            axis = m;
        }
    }
    let values = e3
        .values
        .par_iter()
        .map(|n| {
            let mut a = [0.0; 3];
            a[axis] = 1.0;
            let t = sub(a, scale(*n, n[axis]));
            scale(t, 1.0 / norm(t))
        })
        .collect();
    VectorField { grid: e3.grid.clone(), values }
}

/// Shape operator in the tangent basis `(a, e3 x a)`, symmetrized:
/// returns `(s11, s12, s22)`.
fn shape_in_basis(j3: &[[f64; 3]; 3], n: [f64; 3], a: [f64; 3]) -> (f64, f64, f64) {
    let b = cross(n, a);
    let apply = |x: [f64; 3]| -> [f64; 3] {
        std::array::from_fn(|m| -(j3[m][0] * x[0] + j3[m][1] * x[1] + j3[m][2] * x[2]))
    };
    let sa = apply(a);
    let sb = apply(b);
    (dot(a, sa), 0.5 * (dot(a, sb) + dot(b, sa)), dot(b, sb))
}

fn is_umbilic(s11: f64, s12: f64, s22: f64, eps: f64) -> bool {
    let h1 = 0.5 * (s11 + s22);
    let h2 = 0.5 * ((s11 - s22).powi(2) + 4.0 * s12 * s12).sqrt();
    h2 <= eps * (1.0 + h1.abs())
}

pub fn adapted_frame(f: &ScalarField, opts: &FrameOptions) -> Result<AdaptedFrame> {
    f.check_finite()?;
    let (e3, _) = unit_normal(f, opts)?;
    let grid = f.grid.clone();
    let reference = completion(&e3);

    let want_completion = match opts.mode {
        FrameMode::Completion => true,
        FrameMode::Principal | FrameMode::Auto => {
            let j3 = jacobian(&e3, opts.stencil)?;
            let shapes: Vec<(f64, f64, f64)> = (0..grid.len())
                .into_par_iter()
                .map(|i| shape_in_basis(&j3[i], e3.values[i], reference.values[i]))
                .collect();
            let umbilic = shapes.iter().filter(|(p, q, s)| is_umbilic(*p, *q, *s, opts.umbilic_eps)).count();
            if umbilic == grid.len() && opts.mode == FrameMode::Auto {
                true
            } else if umbilic > 0 {
                return Err(FrameError::AmbiguousPrincipalDirections { umbilic_nodes: umbilic, total: grid.len() });
            } else {
                let e1: Vec<[f64; 3]> = (0..grid.len())
                    .into_par_iter()
                    .map(|i| {
                        let (p, q, s) = shapes[i];
                        let a = reference.values[i];
                        let b = cross(e3.values[i], a);
                        // (cos t, sin t) spans the larger eigenvalue; take its normal.
                        let t = 0.5 * (2.0 * q).atan2(p - s);
                        let (st, ct) = t.sin_cos();
                        std::array::from_fn(|m| -st * a[m] + ct * b[m])
                    })
                    .collect();
                let mut e1 = VectorField { grid: grid.clone(), values: e1 };
                orient_by_continuity(&mut e1);
                let seams = count_seams(&e1);
                let e2 = cross_field(&e3, &e1);
                return Ok(AdaptedFrame { e1, e2, e3, kind: FrameKind::Principal, seams, stencil: opts.stencil });
            }
        }
    };
    debug_assert!(want_completion);
    let e2 = cross_field(&e3, &reference);
    Ok(AdaptedFrame { e1: reference, e2, e3, kind: FrameKind::Completion, seams: 0, stencil: opts.stencil })
}

fn cross_field(a: &VectorField, b: &VectorField) -> VectorField {
    let values = a.values.par_iter().zip(b.values.par_iter()).map(|(x, y)| cross(*x, *y)).collect();
    VectorField { grid: a.grid.clone(), values }
}

fn neighbours(grid: &crate::grid::Grid, idx: usize) -> impl Iterator<Item = usize> + '_ {
    let ijk = grid.ijk(idx);
    let dims = grid.dims();
    let strides = grid.strides();
    (0..3).flat_map(move |a| {
        let lo = (ijk[a] > 0).then(|| idx - strides[a]);
        let hi = (ijk[a] + 1 < dims[a]).then(|| idx + strides[a]);
        lo.into_iter().chain(hi)
    })
}

/// Breadth-first sign propagation from the lowest-index interior node; the
/// seed's largest component is made positive.
fn orient_by_continuity(e1: &mut VectorField) {
    let grid = e1.grid.clone();
    let n = grid.len();
    let seed = (0..n).find(|&i| grid.is_interior(i, 1)).unwrap_or(0);
    let v = e1.values[seed];
    let big = (0..3).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
    if v[big] < 0.0 {
        e1.values[seed] = scale(v, -1.0);
    }
    let mut visited = vec![false; n];
    visited[seed] = true;
    let mut queue = VecDeque::from([seed]);
    while let Some(i) = queue.pop_front() {
        let here = e1.values[i];
        for j in neighbours(&grid, i) {
            if !visited[j] {
                visited[j] = true;
                if dot(here, e1.values[j]) < 0.0 {
                    e1.values[j] = scale(e1.values[j], -1.0);
                }
                queue.push_back(j);
            }
        }
    }
}

fn count_seams(e1: &VectorField) -> usize {
    let grid = &e1.grid;
    let strides = grid.strides();
    (0..grid.len())
        .map(|i| {
            let ijk = grid.ijk(i);
            (0..3)
                .filter(|&a| ijk[a] + 1 < grid.dims()[a] && dot(e1.values[i], e1.values[i + strides[a]]) < 0.0)
                .count()
        })
        .sum()
}

/// Components `<nabla_{e_a} e_b, e_c>` for all `a, b, c`, per node.
fn connection_table(fr: &AdaptedFrame) -> Result<Vec<[[[f64; 3]; 3]; 3]>> {
    let frames = [&fr.e1, &fr.e2, &fr.e3];
    let jac: Vec<Vec<[[f64; 3]; 3]>> =
        frames.iter().map(|e| jacobian(e, fr.stencil)).collect::<std::result::Result<_, _>>()?;
    let n = fr.e1.grid.len();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let basis = [fr.e1.values[i], fr.e2.values[i], fr.e3.values[i]];
            std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    let j = &jac[b][i];
                    let ea = basis[a];
                    let d: [f64; 3] = std::array::from_fn(|m| j[m][0] * ea[0] + j[m][1] * ea[1] + j[m][2] * ea[2]);
                    std::array::from_fn(|c| dot(d, basis[c]))
                })
            })
        })
        .collect())
}

pub fn frame_invariants(f: &ScalarField, fr: &AdaptedFrame) -> Result<FrameInvariants> {
    f.grid.same_as(&fr.e1.grid)?;
    let grid = &f.grid;
    let grad = gradient(f, fr.stencil)?;
    let g = ScalarField { grid: grid.clone(), values: grad.values.iter().map(|v| -norm(*v).ln()).collect() };
    g.check_finite()?;
    let g1 = directional_derivative(&g, &fr.e1, fr.stencil)?;
    let g2 = directional_derivative(&g, &fr.e2, fr.stencil)?;
    let g3 = directional_derivative(&g, &fr.e3, fr.stencil)?;
    let table = connection_table(fr)?;
    // table[a][b][c] = <nabla_{e_a} e_b, e_c>, zero-based.
    let pick = |a: usize, b: usize, c: usize| ScalarField {
        grid: grid.clone(),
        values: table.iter().map(|t| t[a][b][c]).collect(),
    };
    Ok(FrameInvariants {
        g,
        g1,
        g2,
        g3,
        // h_ij = -<e_i, nabla_{e_j} e3>, the shape operator read off e3 as in
        // adapted_frame; h12 is the symmetric part
        h11: pick(0, 2, 0).map(|v| -v),
        h12: ScalarField {
            grid: grid.clone(),
            values: table.iter().map(|t| -0.5 * (t[1][2][0] + t[0][2][1])).collect(),
        },
        h22: pick(1, 2, 1).map(|v| -v),
        k1: pick(0, 1, 0),
        k2: pick(1, 1, 0),
        k3: pick(2, 1, 0),
    })
}

/// Pointwise norm of the mismatch in the first structure equations
/// `d w^i = -w^i_j ^ w^j`, evaluated on every frame pair `(e_a, e_b)`.
///
/// The left side comes from finite differences of the frame,
/// `d w^i (e_a, e_b) = -<nabla_{e_a} e_b - nabla_{e_b} e_a, e_i>`; the right
/// side from the supplied invariants.
pub fn structure_residual(fr: &AdaptedFrame, inv: &FrameInvariants) -> Result<ScalarField> {
    let grid = fr.e1.grid.clone();
    grid.same_as(&inv.g.grid)?;
    let table = connection_table(fr)?;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|p| {
            // w[i][j][a] = w^i_j(e_a)
            let mut w = [[[0.0; 3]; 3]; 3];
            let w31 = [inv.h11.values[p], inv.h12.values[p], inv.g1.values[p]];
            let w32 = [inv.h12.values[p], inv.h22.values[p], inv.g2.values[p]];
            let w12 = [inv.k1.values[p], inv.k2.values[p], inv.k3.values[p]];
            for a in 0..3 {
                w[2][0][a] = w31[a];
                w[0][2][a] = -w31[a];
                w[2][1][a] = w32[a];
                w[1][2][a] = -w32[a];
                w[0][1][a] = w12[a];
                w[1][0][a] = -w12[a];
            }
            let t = &table[p];
            let mut sum = 0.0;
            for i in 0..3 {
                for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                    let lhs = -(t[a][b][i] - t[b][a][i]);
                    let rhs = -w[i][b][a] + w[i][a][b];
                    sum += (lhs - rhs).powi(2);
                }
            }
            sum.sqrt()
        })
        .collect();
    Ok(ScalarField { grid, values })
}

pub fn umbilic_classify(inv: &FrameInvariants, eps: f64) -> UmbilicType {
    let h1 = inv.h1();
    let h2 = inv.h2();
    let umbilic = h1.values.iter().zip(&h2.values).filter(|(a, b)| b.abs() <= eps * (1.0 + a.abs())).count();
    if umbilic == h1.values.len() {
        UmbilicType::TotallyUmbilic
    } else if umbilic == 0 {
        UmbilicType::NoUmbilicPoints
    } else {
        UmbilicType::Mixed
    }
}

/// Largest deviation from orthonormality and right-handedness over the grid.
pub fn orthonormality_defect(fr: &AdaptedFrame) -> f64 {
    (0..fr.e1.grid.len())
        .into_par_iter()
        .map(|i| {
            let e = [fr.e1.values[i], fr.e2.values[i], fr.e3.values[i]];
            let mut worst: f64 = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    let target = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((dot(e[a], e[b]) - target).abs());
                }
            }
            let det = dot(cross(e[0], e[1]), e[2]);
            worst.max((det - 1.0).abs())
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CoordSystem, Grid};

    #[test]
    fn planes_are_flat() {
        let g = Grid::cartesian([0.0; 3], [1.0; 3], [9, 9, 9]).unwrap();
        let f = ScalarField::from_fn(&g, |p| p[2]);
        let fr = adapted_frame(&f, &FrameOptions::default()).unwrap();
        assert_eq!(fr.kind, FrameKind::Completion);
        assert_eq!(fr.e1.values[0], [1.0, 0.0, 0.0]);
        let inv = frame_invariants(&f, &fr).unwrap();
        for (_, field) in inv.named() {
            assert!(field.sup_norm() < 1e-12);
        }
        assert_eq!(umbilic_classify(&inv, 1e-6), UmbilicType::TotallyUmbilic);
        assert!(structure_residual(&fr, &inv).unwrap().sup_norm() <= 1e-10);
    }

    #[test]
    fn cylinder_in_cylindrical_coordinates() {
        let g = Grid::from_bounds([0.5, 0.0, 0.0], [1.5, 0.5, 1.0], [9, 9, 9], CoordSystem::CylindricalRz).unwrap();
        let f = ScalarField::from_fn(&g, |p| p[0]);
        let fr = adapted_frame(&f, &FrameOptions::default()).unwrap();
        assert_eq!(fr.kind, FrameKind::Principal);
        assert_eq!(fr.seams, 0);
        let inv = frame_invariants(&f, &fr).unwrap();
        for i in 0..g.len() {
            let r = g.point(i)[0];
            assert!((inv.h11.values[i] + 1.0 / r).abs() < 1e-12);
            assert!(inv.h22.values[i].abs() < 1e-12);
        }
        assert!(orthonormality_defect(&fr) < 1e-14);
    }
}
