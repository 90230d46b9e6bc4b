use rayon::prelude::*;
use serde::Serialize;

use super::banded::BandMatrix;
use super::{Plane, Result, SymmetricError};
use crate::expr::Expr;
use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Convergence threshold on the sup-norm of the discrete residual.
    pub tol: f64,
    /// Smallest damping factor tried before giving up.
    pub damping_floor: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iter: 50, tol: 1e-10, damping_floor: 1.0 / 1024.0 }
    }
}

/// Source `s(H) = (Phi' Phi)(H)` and `s'(H) = Phi'' Phi + Phi'^2`.
struct Source<'a> {
    phi: &'a Expr,
    phi_p: &'a Expr,
    phi_pp: Expr,
}

impl Source<'_> {
    fn value(&self, h: f64) -> Result<f64> {
        Ok(self.phi_p.eval_t(h)? * self.phi.eval_t(h)?)
    }

    fn slope(&self, h: f64) -> Result<f64> {
        let p = self.phi.eval_t(h)?;
        let dp = self.phi_p.eval_t(h)?;
        Ok(self.phi_pp.eval_t(h)? * p + dp * dp)
    }
}

/// Five-point stencil `(centre, west, east, south, north)` and the weight of
/// the source term at interior node `(i, j)`.
fn stencil(p: &Plane, i: usize) -> ([f64; 5], f64) {
    let (ia, ib) = (1.0 / (p.ha * p.ha), 1.0 / (p.hb * p.hb));
    if p.rotation {
        let r = p.r0 + i as f64 * p.ha;
        let (rm, rp) = (r - 0.5 * p.ha, r + 0.5 * p.ha);
        let (w, e, s) = (ia / rm, ia / rp, ib / r);
        ([-(w + e + 2.0 * s), w, e, s, s], 1.0 / r)
    } else {
        ([-2.0 * (ia + ib), ia, ia, ib, ib], 1.0)
    }
}

fn residual(grid: &Grid, p: &Plane, src: Option<&Source>, h: &[f64]) -> Result<Vec<f64>> {
    (0..p.unknowns())
        .into_par_iter()
        .map(|q| {
            let (i, j) = (q % (p.na - 2) + 1, q / (p.na - 2) + 1);
            let (c, w) = stencil(p, i);
            let hc = h[p.node(grid, i, j)];
            let mut r = c[0] * hc
                + c[1] * h[p.node(grid, i - 1, j)]
                + c[2] * h[p.node(grid, i + 1, j)]
                + c[3] * h[p.node(grid, i, j - 1)]
                + c[4] * h[p.node(grid, i, j + 1)];
            if let Some(s) = src {
                r += w * s.value(hc)?;
            }
            Ok(r)
        })
        .collect()
}

fn jacobian(grid: &Grid, p: &Plane, src: Option<&Source>, h: &[f64]) -> Result<BandMatrix> {
    let m = p.na - 2;
    let mut jac = BandMatrix::zeros(p.unknowns(), m, m);
    for j in 1..p.nb - 1 {
        for i in 1..p.na - 1 {
            let q = p.unknown(i, j);
            let (c, w) = stencil(p, i);
            let mut diag = c[0];
            if let Some(s) = src {
                diag += w * s.slope(h[p.node(grid, i, j)])?;
            }
            jac.add(q, q, diag);
            if i > 1 {
                jac.add(q, q - 1, c[1]);
            }
            if i + 2 < p.na {
                jac.add(q, q + 1, c[2]);
            }
            if j > 1 {
                jac.add(q, q - m, c[3]);
            }
            if j + 2 < p.nb {
                jac.add(q, q + m, c[4]);
            }
        }
    }
    Ok(jac)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn update(grid: &Grid, p: &Plane, h: &[f64], delta: &[f64], lambda: f64) -> Vec<f64> {
    let mut out = h.to_vec();
    for j in 1..p.nb - 1 {
        for i in 1..p.na - 1 {
            out[p.node(grid, i, j)] += lambda * delta[p.unknown(i, j)];
        }
    }
    out
}

fn newton_direction(grid: &Grid, p: &Plane, src: Option<&Source>, h: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
    jacobian(grid, p, src, h)?.solve(&rhs).map_err(|s| SymmetricError::SingularJacobian { column: s.column })
}

/// Harmonic extension of the boundary data, then damped Newton on the full problem.
pub(super) fn run(
    grid: &Grid,
    p: &Plane,
    phi: &Expr,
    phi_p: &Expr,
    h0: Vec<f64>,
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let r0 = residual(grid, p, None, &h0)?;
    let mut h = update(grid, p, &h0, &newton_direction(grid, p, None, &h0, &r0)?, 1.0);

    let src = Source { phi, phi_p, phi_pp: phi_p.differentiate(crate::expr::Var::T) };
    let mut r = residual(grid, p, Some(&src), &h)?;
    let mut norm = sup(&r);
    let mut history = vec![norm];
    for _ in 0..opts.max_iter {
        if norm <= opts.tol {
            return Ok((h, history));
        }
        let delta = newton_direction(grid, p, Some(&src), &h, &r)?;
        let mut lambda = 1.0;
        loop {
            let trial = update(grid, p, &h, &delta, lambda);
            // a domain error in Phi at the trial point counts as no decrease
            if let Ok(rt) = residual(grid, p, Some(&src), &trial) {
                let nt = sup(&rt);
                if nt < norm {
                    h = trial;
                    r = rt;
                    norm = nt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < opts.damping_floor {
                return Err(SymmetricError::NewtonDiverged { history });
            }
        }
        history.push(norm);
    }
    if norm <= opts.tol {
        Ok((h, history))
    } else {
        Err(SymmetricError::NewtonDiverged { history })
    }
}
