//! Residuals of `curl u = f u`, `div u = 0` and `u . grad f = 0` for sampled fields.

use serde::Serialize;

use crate::grid::ops::{curl, divergence, gradient, jacobian};
use crate::grid::{CoordSystem, Grid, GridError, ScalarField, Stencil, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    /// `sup |curl u - f u| / max(sup |u|, eps)`
    pub curl_res: f64,
    /// `sup |div u| / max(sup |grad u|, sup |u| / L)`, Frobenius norm of the
    /// Jacobian, `L` the largest extent of the grid; the floor keeps constant
    /// fields from dividing roundoff by roundoff.
    pub div_res: f64,
    /// `sup |u . grad f| / (sup |u| sup |grad f|)`; zero when either factor
    /// vanishes, where `grad f` at roundoff level of `f` counts as zero.
    pub ortho_res: f64,
}

impl VerifyReport {
    pub fn max(&self) -> f64 {
        self.curl_res.max(self.div_res).max(self.ortho_res)
    }
}

const EPS: f64 = 1e-300;

pub fn verify_beltrami(u: &VectorField, f: &ScalarField, stencil: Stencil) -> Result<VerifyReport, GridError> {
    u.grid.same_as(&f.grid)?;
    u.check_finite()?;
    f.check_finite()?;
    let u_sup = u.sup_norm();

    let c = curl(u, stencil)?;
    let fu = u.scale_by(f)?;
    let curl_res = c.lin_comb(1.0, &fu, -1.0)?.sup_norm() / u_sup.max(EPS);

    let div = divergence(u, stencil)?;
    let grad_u_sup = jacobian(u, stencil)?
        .iter()
        .map(|j| j.iter().flatten().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let div_res = div.sup_norm() / grad_u_sup.max(u_sup / extent(&u.grid)).max(EPS);

    let grad_f = gradient(f, stencil)?;
    let gf_sup = grad_f.sup_norm();
    let roundoff = 1e3 * f64::EPSILON * f.sup_norm() / u.grid.h_min();
    let ortho_res = if gf_sup <= roundoff || u_sup == 0.0 { 0.0 } else { u.dot(&grad_f)?.sup_norm() / (u_sup * gf_sup) };
    Ok(VerifyReport { curl_res, div_res, ortho_res })
}

/// Largest side of the grid's bounding box in physical length.
fn extent(grid: &Grid) -> f64 {
    let (lo, hi) = (grid.origin(), grid.upper());
    let mut side = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    if grid.coords() == CoordSystem::CylindricalRz {
        side[1] *= hi[0];
    }
    side.into_iter().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;


    #[test]
    fn zero_field_has_zero_residuals() {
        let g = Grid::cartesian([0.0; 3], [1.0; 3], [6, 6, 6]).unwrap();
        let r = verify_beltrami(&VectorField::zeros(&g), &ScalarField::constant(&g, 2.0), Stencil::Second).unwrap();
        assert_eq!(r, VerifyReport { curl_res: 0.0, div_res: 0.0, ortho_res: 0.0 });
    }
}
