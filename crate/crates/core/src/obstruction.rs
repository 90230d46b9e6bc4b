//! Torsion coefficients of the Beltrami system in an adapted frame and the
//! resulting three-way classification of proportionality factors.
//!
//! With `p1, p2` the free first-order unknowns, the system can be made
//! involutive only where
//!
//! ```text
//! c_p1 p1 + c_u1 u1 + c_u2 u2 = 0
//! c_p1 = 2 (h11 - h22)
//! c_u1 = e3(g1) + e1(h11) - e1(h22) - g1 h22 + g2 (k3 - 2 f)
//! c_u2 = e3(g2) + e2(h22) - e2(h11) - g1 (k3 - 2 f) - g2 h11
//! ```
//!
//! When `c_p1 != 0` a second condition has leading coefficient `2 k3 - f`.
//!
//! Classification:
//! * level surfaces totally umbilic and normal lines straight (`g1 = g2 = 0`):
//!   parallel planes or concentric spheres, solutions depend on two functions
//!   of one variable;
//! * totally umbilic with curved normal lines: no nonzero solutions;
//! * no umbilic points: at most a three-dimensional solution space.
//!
//! "Vanishes identically" on a grid means a sup norm at most `eps` times the
//! curvature scale `kappa` of the level-surface family (see [`Diagnostics`]).

use serde::Serialize;

use crate::frame::{
    adapted_frame, frame_invariants, AdaptedFrame, FrameError, FrameInvariants, FrameKind, FrameMode, FrameOptions,
};
use crate::grid::ops::directional_derivative;
use crate::grid::{ScalarField, Stencil};

#[derive(Clone, Debug)]
pub struct TorsionReport {
    pub c_p1: ScalarField,
    pub c_u1: ScalarField,
    pub c_u2: ScalarField,
    pub second_level: ScalarField,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupNorms {
    pub c_p1: f64,
    pub c_u1: f64,
    pub c_u2: f64,
    pub second_level: f64,
}

impl TorsionReport {
    pub fn sup_norms(&self) -> SupNorms {
        SupNorms {
            c_p1: self.c_p1.sup_norm(),
            c_u1: self.c_u1.sup_norm(),
            c_u2: self.c_u2.sup_norm(),
            second_level: self.second_level.sup_norm(),
        }
    }
}

pub fn torsion_coefficients(inv: &FrameInvariants, f: &ScalarField, fr: &AdaptedFrame) -> Result<TorsionReport, FrameError> {
    let d = |s: &ScalarField, e: &crate::grid::VectorField| directional_derivative(s, e, fr.stencil);
    let g13 = d(&inv.g1, &fr.e3)?;
    let g23 = d(&inv.g2, &fr.e3)?;
    let h11_1 = d(&inv.h11, &fr.e1)?;
    let h22_1 = d(&inv.h22, &fr.e1)?;
    let h11_2 = d(&inv.h11, &fr.e2)?;
    let h22_2 = d(&inv.h22, &fr.e2)?;
    let n = f.values.len();
    let mut c_p1 = Vec::with_capacity(n);
    let mut c_u1 = Vec::with_capacity(n);
    let mut c_u2 = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for i in 0..n {
        let (h11, h22) = (inv.h11.values[i], inv.h22.values[i]);
        let (g1, g2) = (inv.g1.values[i], inv.g2.values[i]);
        let k3 = inv.k3.values[i];
        let fv = f.values[i];
        c_p1.push(2.0 * (h11 - h22));
        c_u1.push(g13.values[i] + h11_1.values[i] - h22_1.values[i] - g1 * h22 + g2 * (k3 - 2.0 * fv));
        c_u2.push(g23.values[i] + h22_2.values[i] - h11_2.values[i] - g1 * (k3 - 2.0 * fv) - g2 * h11);
        second.push(2.0 * k3 - fv);
    }
    let wrap = |values| ScalarField { grid: f.grid.clone(), values };
    Ok(TorsionReport { c_p1: wrap(c_p1), c_u1: wrap(c_u1), c_u2: wrap(c_u2), second_level: wrap(second) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    #[serde(rename = "Case1_ParallelPlanes")]
    ParallelPlanes,
    #[serde(rename = "Case1_ConcentricSpheres")]
    ConcentricSpheres,
    #[serde(rename = "Case2_UmbilicNoSolutions")]
    UmbilicNoSolutions,
    #[serde(rename = "Case3_NonUmbilic")]
    NonUmbilic { second_level_vanishes: bool },
    #[serde(rename = "Indeterminate_Mixed")]
    IndeterminateMixed,
}

impl Case {
    pub fn label(&self) -> &'static str {
        match self {
            Case::ParallelPlanes => "Case1_ParallelPlanes",
            Case::ConcentricSpheres => "Case1_ConcentricSpheres",
            Case::UmbilicNoSolutions => "Case2_UmbilicNoSolutions",
            Case::NonUmbilic { .. } => "Case3_NonUmbilic",
            Case::IndeterminateMixed => "Indeterminate_Mixed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolutionSpace {
    TwoFunctionsOfOneVariable,
    None,
    /// At most this many dimensions.
    AtMostFiniteDim(u32),
    Unknown,
}

impl SolutionSpace {
    pub fn label(&self) -> String {
        match self {
            SolutionSpace::TwoFunctionsOfOneVariable => "TwoFunctionsOfOneVariable".into(),
            SolutionSpace::None => "None".into(),
            SolutionSpace::AtMostFiniteDim(d) => format!("AtMostFiniteDim({d})"),
            SolutionSpace::Unknown => "Unknown".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassifyConfig {
    pub eps: f64,
    pub stencil: Stencil,
    pub grad_tol: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        // Fourth order: with second-order differences the umbilic defect of a
        // sphere family on a 33^3 grid sits near 1e-3, above a 1e-4 threshold.
        ClassifyConfig { eps: 1e-4, stencil: Stencil::Fourth, grad_tol: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub eps: f64,
    pub stencil: Stencil,
    /// Nodes closer than this to a boundary are excluded from all tests.
    pub margin: usize,
    /// Curvature scale: the largest of `sup(|h11| + |h22| + 2|h12|)`,
    /// `sup(|g1| + |g2| + |g3|)`, `sup(|k1| + |k2| + |k3|)` and `1 / diameter`.
    pub kappa: f64,
    /// Sup and min over nodes of the principal-curvature gap `|kappa_1 - kappa_2|`.
    pub umbilic_gap_sup: f64,
    pub umbilic_gap_min: f64,
    /// `sup max(|g1|, |g2|)`: curvature of the normal lines.
    pub normal_curvature_sup: f64,
    /// `sup |(h11 + h22) / 2|`.
    pub mean_curvature_sup: f64,
    pub frame: Option<FrameKind>,
    pub seams: usize,
    pub sup_norms: Option<SupNorms>,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub case: Case,
    pub predicted_solution_space: SolutionSpace,
    pub diagnostics: Diagnostics,
    pub torsion: Option<TorsionReport>,
}

fn curvature_scale(inv: &FrameInvariants, diameter: f64, keep: &[bool]) -> f64 {
    let mut kappa = if diameter > 0.0 { 1.0 / diameter } else { 0.0 };
    for i in (0..keep.len()).filter(|&i| keep[i]) {
        let h = inv.h11.values[i].abs() + inv.h22.values[i].abs() + 2.0 * inv.h12.values[i].abs();
        let g = inv.g1.values[i].abs() + inv.g2.values[i].abs() + inv.g3.values[i].abs();
        let k = inv.k1.values[i].abs() + inv.k2.values[i].abs() + inv.k3.values[i].abs();
        kappa = kappa.max(h).max(g).max(k);
    }
    kappa
}

fn diameter(f: &ScalarField) -> f64 {
    let g = &f.grid;
    let a = g.cartesian_point(0);
    let b = g.cartesian_point(g.len() - 1);
    crate::grid::norm(crate::grid::sub(a, b))
}

/// Nodes kept by the classifier: those where the centered stencil fits. The
/// one-sided closures are an order of magnitude less accurate, and their
/// error at edges and corners would otherwise dominate every "vanishes
/// identically" test.
pub fn stencil_margin(stencil: Stencil) -> usize {
    match stencil {
        Stencil::Second => 1,
        Stencil::Fourth => 2,
    }
}

fn sup_kept(field: &ScalarField, keep: &[bool]) -> f64 {
    field.sup_norm_where(|i| keep[i])
}

fn masked_sup_norms(t: &TorsionReport, keep: &[bool]) -> SupNorms {
    SupNorms {
        c_p1: sup_kept(&t.c_p1, keep),
        c_u1: sup_kept(&t.c_u1, keep),
        c_u2: sup_kept(&t.c_u2, keep),
        second_level: sup_kept(&t.second_level, keep),
    }
}

pub fn classify(f: &ScalarField, cfg: &ClassifyConfig) -> Result<Classification, FrameError> {
    let opts = FrameOptions { grad_tol: cfg.grad_tol, umbilic_eps: 0.0, mode: FrameMode::Completion, stencil: cfg.stencil };
    let completion = adapted_frame(f, &opts)?;
    let inv_c = frame_invariants(f, &completion)?;
    let grid = &f.grid;
    let margin = stencil_margin(cfg.stencil);
    let keep: Vec<bool> = (0..grid.len()).map(|i| grid.is_interior(i, margin)).collect();
    if !keep.iter().any(|k| *k) {
        return Err(FrameError::Grid(crate::grid::GridError::TooFewNodes {
            axis: (0..3).find(|&a| grid.is_used(a)).unwrap_or(0),
            nodes: grid.dims().into_iter().filter(|&d| d > 1).min().unwrap_or(1),
        }));
    }
    let kappa = curvature_scale(&inv_c, diameter(f), &keep);
    let tol = cfg.eps * kappa;

    let gap: Vec<f64> = (0..grid.len())
        .filter(|&i| keep[i])
        .map(|i| {
            let d = inv_c.h11.values[i] - inv_c.h22.values[i];
            let q = inv_c.h12.values[i];
            (d * d + 4.0 * q * q).sqrt()
        })
        .collect();
    let gap_sup = gap.iter().fold(0.0f64, |m, v| m.max(*v));
    let gap_min = gap.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let normal_curv = sup_kept(&inv_c.g1, &keep).max(sup_kept(&inv_c.g2, &keep));
    let mean_curv = sup_kept(&inv_c.h1(), &keep);

    let mut diagnostics = Diagnostics {
        eps: cfg.eps,
        stencil: cfg.stencil,
        margin,
        kappa,
        umbilic_gap_sup: gap_sup,
        umbilic_gap_min: gap_min,
        normal_curvature_sup: normal_curv,
        mean_curvature_sup: mean_curv,
        frame: None,
        seams: 0,
        sup_norms: None,
    };

    if gap_sup <= tol {
        let torsion = torsion_coefficients(&inv_c, f, &completion)?;
        diagnostics.frame = Some(FrameKind::Completion);
        diagnostics.sup_norms = Some(masked_sup_norms(&torsion, &keep));
        let (case, space) = if normal_curv <= tol {
            if mean_curv <= tol {
                (Case::ParallelPlanes, SolutionSpace::TwoFunctionsOfOneVariable)
            } else {
                (Case::ConcentricSpheres, SolutionSpace::TwoFunctionsOfOneVariable)
            }
        } else {
            (Case::UmbilicNoSolutions, SolutionSpace::None)
        };
        return Ok(Classification { case, predicted_solution_space: space, diagnostics, torsion: Some(torsion) });
    }

    if gap_min > tol {
        let principal = adapted_frame(f, &FrameOptions { mode: FrameMode::Principal, ..opts })?;
        let inv = frame_invariants(f, &principal)?;
        let torsion = torsion_coefficients(&inv, f, &principal)?;
        let f_scale = kappa.max(sup_kept(f, &keep));
        let second_level_vanishes = sup_kept(&torsion.second_level, &keep) <= cfg.eps * f_scale;
        diagnostics.frame = Some(FrameKind::Principal);
        diagnostics.seams = principal.seams;
        diagnostics.sup_norms = Some(masked_sup_norms(&torsion, &keep));
        return Ok(Classification {
            case: Case::NonUmbilic { second_level_vanishes },
            predicted_solution_space: SolutionSpace::AtMostFiniteDim(3),
            diagnostics,
            torsion: Some(torsion),
        });
    }

    Ok(Classification {
        case: Case::IndeterminateMixed,
        predicted_solution_space: SolutionSpace::Unknown,
        diagnostics,
        torsion: None,
    })
}
