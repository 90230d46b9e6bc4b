use beltrami::bessel::{j0, j1};
use beltrami::frame::*;
use beltrami::frame_pde::*;
use beltrami::verify::verify_beltrami;
use beltrami::*;

fn setup(f: &ScalarField) -> (AdaptedFrame, FrameInvariants) {
    let fr = adapted_frame(f, &FrameOptions::default()).unwrap();
    let inv = frame_invariants(f, &fr).unwrap();
    (fr, inv)
}

fn sup(res: &SystemResidual) -> [f64; 4] {
    [res.r1.sup_norm(), res.r2.sup_norm(), res.r3.sup_norm(), res.r4.sup_norm()]
}

/// Planes `f = z`: rotate a Cauchy-Riemann pair `(v, w)` by `z^2 / 2`.
fn rotated_cr(v: f64, w: f64, z: f64) -> [f64; 2] {
    let (s, c) = (0.5 * z * z).sin_cos();
    [v * c + w * s, -v * s + w * c]
}

fn planes(n: usize) -> ScalarField {
    let g = Grid::cartesian([0.0; 3], [1.0; 3], [n, n, n]).unwrap();
    ScalarField::from_fn(&g, |p| p[2])
}

fn cylinders(n: usize) -> ScalarField {
    let g = Grid::from_bounds([1.0, 0.0, 0.0], [2.0, 1.0, 1.0], [n, n, n], CoordSystem::CylindricalRz).unwrap();
    ScalarField::from_fn(&g, |p| p[0])
}

fn half_planes(n: usize) -> ScalarField {
    let g = Grid::from_bounds([1.0, 0.2, 0.0], [2.0, 0.8, 1.0], [n, n, n], CoordSystem::CylindricalRz).unwrap();
    ScalarField::from_fn(&g, |p| p[1])
}

#[test]
fn zero_data_has_zero_residual() {
    for f in [planes(9), cylinders(9), half_planes(9)] {
        let (fr, inv) = setup(&f);
        let res = system_residual(&TangentialField::zeros(&f.grid), &inv, &f, &fr).unwrap();
        assert_eq!(sup(&res), [0.0; 4]);
    }
}

#[test]
fn cauchy_riemann_data_on_planes() {
    let run = |n: usize| {
        let f = planes(n);
        let (fr, inv) = setup(&f);
        let tf = TangentialField::from_fn(&f.grid, |p| rotated_cr(p[0], -p[1], p[2]));
        let r = sup(&system_residual(&tf, &inv, &f, &fr).unwrap());
        (r.into_iter().fold(0.0, f64::max), f.grid.h_max())
    };
    let (a, _) = run(17);
    let (b, h) = run(33);
    assert!(b <= 20.0 * h * h, "{b}");
    assert!((a / b).log2() >= 1.9, "slope {}", (a / b).log2());
}

#[test]
fn lundquist_data_on_cylinders() {
    // level sets r = const, proportionality factor the constant c
    let c = 1.5;
    let run = |n: usize| {
        let levels = cylinders(n);
        let (fr, inv) = setup(&levels);
        let factor = ScalarField::constant(&levels.grid, c);
        let tf = TangentialField::from_fn(&levels.grid, |p| [j1(c * p[0]), j0(c * p[0])]);
        let r = sup(&system_residual(&tf, &inv, &factor, &fr).unwrap());
        (r.into_iter().fold(0.0, f64::max), levels.grid.h_max())
    };
    let (a, _) = run(17);
    let (b, h) = run(33);
    assert!(b <= 20.0 * h * h, "{b}");
    assert!((a / b).log2() >= 1.9, "slope {}", (a / b).log2());
}

#[test]
fn small_residuals_reconstruct_beltrami_fields() {
    // planes with the Cauchy-Riemann pair (x^2 - y^2, -2xy)
    let f = planes(33);
    let (fr, inv) = setup(&f);
    let tf = TangentialField::from_fn(&f.grid, |p| rotated_cr(p[0] * p[0] - p[1] * p[1], -2.0 * p[0] * p[1], p[2]));
    let rho = sup(&system_residual(&tf, &inv, &f, &fr).unwrap()).into_iter().fold(0.0, f64::max);
    let u = tf.reconstruct(&fr).unwrap();
    let rep = verify_beltrami(&u, &f, Stencil::Second).unwrap();
    let h = f.grid.h_max();
    assert!(rep.curl_res <= 10.0 * (rho + h * h), "{rep:?} rho {rho}");
    assert!(rep.div_res <= 10.0 * (rho + h * h), "{rep:?} rho {rho}");
    for i in 0..u.values.len() {
        assert_eq!(u.values[i][2], 0.0, "u is tangent to the planes");
    }

    // cylinders with Lundquist data
    let c = 1.5;
    let levels = cylinders(33);
    let (fr, inv) = setup(&levels);
    let factor = ScalarField::constant(&levels.grid, c);
    let tf = TangentialField::from_fn(&levels.grid, |p| [j1(c * p[0]), j0(c * p[0])]);
    let rho = sup(&system_residual(&tf, &inv, &factor, &fr).unwrap()).into_iter().fold(0.0, f64::max);
    let rep = verify_beltrami(&tf.reconstruct(&fr).unwrap(), &factor, Stencil::Second).unwrap();
    let h = levels.grid.h_max();
    assert!(rep.curl_res <= 10.0 * (rho + h * h), "{rep:?} rho {rho}");
    assert!(rep.div_res <= 10.0 * (rho + h * h), "{rep:?} rho {rho}");
}

#[test]
fn projection_inverts_reconstruction() {
    let f = half_planes(9);
    let (fr, _) = setup(&f);
    let tf = TangentialField::from_fn(&f.grid, |p| [p[0] * p[2], 1.0 - p[1]]);
    let back = TangentialField::project(&tf.reconstruct(&fr).unwrap(), &fr).unwrap();
    for i in 0..f.grid.len() {
        assert!((back.u1.values[i] - tf.u1.values[i]).abs() <= 1e-14);
        assert!((back.u2.values[i] - tf.u2.values[i]).abs() <= 1e-14);
    }
}

#[test]
fn zero_data_evolves_to_zero() {
    let f = planes(9);
    let (fr, inv) = setup(&f);
    let zero = |_: [f64; 3]| [0.0, 0.0];
    let ev = evolve_level_surfaces(&InitialData::Sampler(&zero), &inv, &f, &fr, &EvolveOptions::default()).unwrap();
    assert!(ev.evolved.iter().all(|e| *e));
    assert_eq!(ev.field, TangentialField::zeros(&f.grid));
    assert_eq!(ev.final_residual, 0.0);
    assert!(!ev.incompatible);
}

#[test]
fn evolution_is_linear_in_the_data() {
    let f = planes(17);
    let (fr, inv) = setup(&f);
    let opts = EvolveOptions::default();
    let a = |p: [f64; 3]| [p[0], -p[1]];
    let b = |p: [f64; 3]| [p[1], p[0]];
    let ab = |p: [f64; 3]| [2.0 * p[0] - 3.0 * p[1], -2.0 * p[1] - 3.0 * p[0]];
    let ea = evolve_level_surfaces(&InitialData::Sampler(&a), &inv, &f, &fr, &opts).unwrap();
    let eb = evolve_level_surfaces(&InitialData::Sampler(&b), &inv, &f, &fr, &opts).unwrap();
    let eab = evolve_level_surfaces(&InitialData::Sampler(&ab), &inv, &f, &fr, &opts).unwrap();
    let scale = eab.field.u1.sup_norm().max(eab.field.u2.sup_norm());
    for i in 0..f.grid.len() {
        let want1 = 2.0 * ea.field.u1.values[i] - 3.0 * eb.field.u1.values[i];
        let want2 = 2.0 * ea.field.u2.values[i] - 3.0 * eb.field.u2.values[i];
        assert!((eab.field.u1.values[i] - want1).abs() <= 1e-10 * scale);
        assert!((eab.field.u2.values[i] - want2).abs() <= 1e-10 * scale);
    }
}

#[test]
fn planes_with_cauchy_riemann_data_are_compatible() {
    let f = planes(17);
    let (fr, inv) = setup(&f);
    let cr = |p: [f64; 3]| [p[0] * p[0] - p[1] * p[1], -2.0 * p[0] * p[1]];
    let ev = evolve_level_surfaces(&InitialData::Sampler(&cr), &inv, &f, &fr, &EvolveOptions::default()).unwrap();
    let h = f.grid.h_max();
    assert!(ev.evolved.iter().all(|e| *e));
    assert!(ev.final_residual <= 20.0 * h * h, "{}", ev.final_residual);
    assert!(!ev.incompatible);
    // the transported field is the rotation by z^2 / 2
    for i in 0..f.grid.len() {
        let p = f.grid.point(i);
        let want = rotated_cr(p[0] * p[0] - p[1] * p[1], -2.0 * p[0] * p[1], p[2]);
        assert!((ev.field.u1.values[i] - want[0]).abs() <= 1e-8);
        assert!((ev.field.u2.values[i] - want[1]).abs() <= 1e-8);
    }
}

/// Gradient `(A_r, A_z)` of an axisymmetric harmonic function; on a half-plane
/// `theta = const` it satisfies the tangential equations in the frame
/// `(e_z, e_r, e_theta)`.
fn harmonic_gradient(p: [f64; 3]) -> [f64; 2] {
    let (r, z) = (p[0], p[2]);
    let (c0, c1, c2, c3, zs) = (1.0, 0.3, 0.2, 0.5, 3.5);
    let rho3 = (r * r + (z - zs) * (z - zs)).powf(1.5);
    let ar = 2.0 * c1 * r - 3.0 * c2 * r * z - c3 * r / rho3;
    let az = c0 - 4.0 * c1 * z + c2 * (3.0 * z * z - 1.5 * r * r) - c3 * (z - zs) / rho3;
    [az, ar]
}

#[test]
fn half_planes_are_incompatible() {
    let f = half_planes(33);
    let (fr, inv) = setup(&f);
    let ev = evolve_level_surfaces(&InitialData::Sampler(&harmonic_gradient), &inv, &f, &fr, &EvolveOptions::default())
        .unwrap();
    assert!(ev.evolved.iter().all(|e| *e));
    assert!(ev.amplification >= 10.0, "{ev:?}");
    assert!(ev.incompatible);
}

#[test]
fn incompatible_initial_data_is_rejected() {
    let f = planes(9);
    let (fr, inv) = setup(&f);
    let bad = |p: [f64; 3]| [p[0], p[1]];
    let r = evolve_level_surfaces(&InitialData::Sampler(&bad), &inv, &f, &fr, &EvolveOptions::default());
    assert!(matches!(r, Err(FramePdeError::IncompatibleInitialData { .. })));
}

#[test]
fn cylinder_ode_without_factor_is_explicit() {
    let zero = parse("0").unwrap();
    let sol = cylinder_ode_solve(&zero, 1.0, [0.7, -0.4], 3.0, 1e-2).unwrap();
    for (r, u) in sol.r().iter().zip(sol.u()) {
        assert!((u[0] - 0.7 / r).abs() <= 1e-9);
        assert!((u[1] + 0.4).abs() <= 1e-15);
    }
}

#[test]
fn cylinder_ode_matches_bessel_functions() {
    let c = 2.0;
    let phi = parse("2").unwrap();
    let r0 = 0.5;
    for r1 in [3.0, 0.1] {
        let sol = cylinder_ode_solve(&phi, r0, [j1(c * r0), j0(c * r0)], r1, 1e-3).unwrap();
        for (r, u) in sol.r().iter().zip(sol.u()) {
            assert!((u[0] - j1(c * r)).abs() <= 1e-8, "r = {r}");
            assert!((u[1] - j0(c * r)).abs() <= 1e-8, "r = {r}");
        }
    }
}

#[test]
fn cylinder_ode_is_linear() {
    let phi = parse("r + sin(r)").unwrap();
    let a = cylinder_ode_solve(&phi, 1.0, [0.3, 1.1], 2.5, 1e-3).unwrap();
    let b = cylinder_ode_solve(&phi, 1.0, [0.6, 2.2], 2.5, 1e-3).unwrap();
    let e1 = cylinder_ode_solve(&phi, 1.0, [1.0, 0.0], 2.5, 1e-3).unwrap();
    let e2 = cylinder_ode_solve(&phi, 1.0, [0.0, 1.0], 2.5, 1e-3).unwrap();
    for i in 0..a.u().len() {
        for k in 0..2 {
            assert!((b.u()[i][k] - 2.0 * a.u()[i][k]).abs() <= 1e-12);
            let sup = 0.3 * e1.u()[i][k] + 1.1 * e2.u()[i][k];
            assert!((a.u()[i][k] - sup).abs() <= 1e-12);
        }
    }
}

#[test]
fn cylinder_ode_rejects_the_axis() {
    let phi = parse("1").unwrap();
    assert!(matches!(cylinder_ode_solve(&phi, 1.0, [1.0, 0.0], -1.0, 1e-3), Err(FramePdeError::Domain(_))));
    assert!(matches!(cylinder_ode_solve(&phi, 0.0, [1.0, 0.0], 1.0, 1e-3), Err(FramePdeError::Domain(_))));
}
