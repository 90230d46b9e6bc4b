use beltrami::frame::*;
use beltrami::frame_pde::cylinder_ode_solve;
use beltrami::grid::io::{self, FieldData};
use beltrami::grid::{cross, dot};
use beltrami::obstruction::torsion_coefficients;
use beltrami::*;
use proptest::prelude::*;

fn coords() -> impl Strategy<Value = CoordSystem> {
    prop_oneof![Just(CoordSystem::Cartesian), Just(CoordSystem::CylindricalRz)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bfg1_round_trip(cs in coords(), dims in (5usize..8, 5usize..8, 5usize..8), seed in prop::collection::vec(-1e6f64..1e6, 8)) {
        let g = Grid::new([0.5, -1.0, 2.0], [0.1, 0.3, 0.7], [dims.0, dims.1, dims.2], cs).unwrap();
        let f = ScalarField::from_fn(&g, |p| seed[0] * (seed[1] * p[0]).sin() + seed[2] * p[1] * p[2] + seed[3] * 1e-200);
        let u = VectorField::from_fn(&g, |p| [seed[4] / p[0], (seed[5] * p[1]).cos(), seed[6] * p[2] - seed[7]]);
        let mut buf = Vec::new();
        io::write_scalar(&mut buf, &f).unwrap();
        match io::read(buf.as_slice()).unwrap() {
            FieldData::Scalar(back) => prop_assert_eq!(back, f),
            FieldData::Vector(_) => prop_assert!(false, "scalar read back as vector"),
        }
        let mut buf = Vec::new();
        io::write_vector(&mut buf, &u).unwrap();
        match io::read(buf.as_slice()).unwrap() {
            FieldData::Vector(back) => prop_assert_eq!(back, u),
            FieldData::Scalar(_) => prop_assert!(false, "vector read back as scalar"),
        }
    }

    #[test]
    fn cylinder_ode_superposition(a in -2.0f64..2.0, b in -2.0f64..2.0, k in 0.1f64..3.0) {
        let phi = parse(&format!("{k} * (1 + r^2)")).unwrap();
        let u = cylinder_ode_solve(&phi, 1.0, [a, b], 2.0, 1e-2).unwrap();
        let e1 = cylinder_ode_solve(&phi, 1.0, [1.0, 0.0], 2.0, 1e-2).unwrap();
        let e2 = cylinder_ode_solve(&phi, 1.0, [0.0, 1.0], 2.0, 1e-2).unwrap();
        for i in 0..u.u().len() {
            for c in 0..2 {
                let s = a * e1.u()[i][c] + b * e2.u()[i][c];
                prop_assert!((u.u()[i][c] - s).abs() <= 1e-12 * (1.0 + s.abs()));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frames_are_orthonormal_and_c_p1_matches(p in -1.0f64..1.0, q in -1.0f64..1.0, s in -0.2f64..0.2) {
        let g = Grid::cartesian([1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [9, 9, 9]).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0] + p * x[1] + q * x[2] + s * (x[0] * x[0] - x[1] * x[2]));
        let fr = adapted_frame(&f, &FrameOptions { mode: FrameMode::Completion, ..FrameOptions::default() }).unwrap();
        prop_assert!(orthonormality_defect(&fr) <= 1e-8);
        for i in 0..g.len() {
            prop_assert!(dot(cross(fr.e1.values[i], fr.e2.values[i]), fr.e3.values[i]) > 0.0);
        }
        let inv = frame_invariants(&f, &fr).unwrap();
        let t = torsion_coefficients(&inv, &f, &fr).unwrap();
        for i in 0..g.len() {
            let want = 2.0 * (inv.h11.values[i] - inv.h22.values[i]);
            prop_assert!((t.c_p1.values[i] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }
}
