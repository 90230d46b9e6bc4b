use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn beltrami(args: &[&str]) -> Run {
    beltrami_env(args, &[])
}

fn beltrami_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_beltrami"));
    cmd.args(args).env_remove("BELTRAMI_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn report(dir: &Path) -> Value {
    let text = std::fs::read_to_string(dir.join("report.json")).expect("report written");
    serde_json::from_str(&text).expect("valid JSON")
}

fn out(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn classify_parallel_planes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "c");
    let r = beltrami(&["classify", "--f", "z", "--grid", "0,0,0:1,1,1:17,17,17", "--out", s(&o)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.stdout.trim(), "Case1_ParallelPlanes");
    let rep = report(&o);
    assert_eq!(rep["schema"], "beltrami-report/1");
    assert_eq!(rep["command"], "classify");
    assert_eq!(rep["status"], "ok");
    assert_eq!(rep["classification"]["case"], "Case1_ParallelPlanes");
    assert_eq!(rep["classification"]["predicted_solution_space"], "TwoFunctionsOfOneVariable");
    assert_eq!(rep["grid"]["dims"], serde_json::json!([17, 17, 17]));
    for key in ["c_p1", "c_u1", "c_u2", "second_level"] {
        assert!(rep["classification"]["sup_norms"][key].is_number(), "{key}");
    }
}

#[test]
fn classify_half_planes_on_a_cartesian_wedge() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "w");
    let r = beltrami(&["classify", "--f", "atan(y/x)", "--grid", "1,0.2,0:2,0.8,1:33,33,33", "--out", s(&o)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(report(&o)["classification"]["case"], "Case2_UmbilicNoSolutions");
}

#[test]
fn mixed_umbilic_type_exits_with_4() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "m");
    let r = beltrami(&["classify", "--f", "z - 0.5*(x^2 + y^2)", "--grid=-1,-1,0:1,1,1:17,17,17", "--out", s(&o)]);
    assert_eq!(r.code, 4, "{}", r.stderr);
    let rep = report(&o);
    assert_eq!(rep["status"], "indeterminate");
    assert_eq!(rep["classification"]["case"], "Indeterminate_Mixed");
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (out(&tmp, "a"), out(&tmp, "b"));
    let args = |o: &Path| -> Vec<String> {
        ["classify", "--f", "sqrt(x^2 + y^2 + z^2)", "--grid", "1,1,1:2,2,2:17,17,17", "--out", s(o)]
            .iter()
            .map(|x| x.to_string())
            .collect()
    };
    let aa = args(&a);
    let bb = args(&b);
    assert_eq!(beltrami(&aa.iter().map(String::as_str).collect::<Vec<_>>()).code, 0);
    let r = beltrami_env(&bb.iter().map(String::as_str).collect::<Vec<_>>(), &[("BELTRAMI_THREADS", "1")]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let ra = std::fs::read(a.join("report.json")).unwrap();
    let rb = std::fs::read(b.join("report.json")).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "cfg");
    let cfg = data("classify.cfg");
    let r = beltrami(&["--config", &cfg, "classify", "--f", "z", "--out", s(&o)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(&o);
    assert_eq!(rep["classification"]["eps"], 1e-3);
    assert_eq!(rep["grid"]["dims"][0], 17);

    let r = beltrami(&["classify", "--config", &cfg, "--f", "z", "--eps", "1e-5", "--out", s(&o)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(report(&o)["classification"]["eps"], 1e-5);
}

#[test]
fn oracle_output_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, v) = (out(&tmp, "o"), out(&tmp, "v"));
    let r = beltrami(&["oracle", "--kind", "abc", "--b", "0.7", "--c", "0.4", "--grid", "0,0,0:2,2,2:33,33,33", "--out", s(&o), "--vtk"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let vtk = std::fs::read_to_string(o.join("oracle.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0\n"));
    assert!(vtk.contains("DATASET STRUCTURED_POINTS"));

    let (u, f) = (o.join("u.bfg1"), o.join("f.bfg1"));
    let r = beltrami(&["verify", "--u", s(&u), "--f", s(&f), "--out", s(&v)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(&v);
    let h: f64 = 2.0 / 32.0;
    for key in ["curl_res", "div_res", "ortho_res"] {
        let x = rep["verify"][key].as_f64().unwrap();
        assert!(x <= 20.0 * h * h, "{key} = {x}");
    }
    assert_eq!(rep["h_max"], h);
}

#[test]
fn every_oracle_kind_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["--kind", "harmonic-gradient", "--potential", "x^2 - y^2", "--grid=-1,-1,-1:1,1,1:9,9,9"],
        &["--kind", "planar-cr", "--phi", "1 + z", "--v", "x", "--w", "-y", "--grid", "0,0,0:1,1,1:9,9,9"],
        &["--kind", "lundquist", "--c", "2", "--grid", "1,0,0:2,1,1:9,9,9:cylindrical_rz"],
        &["--kind", "cylinder", "--phi", "r", "--r0", "1.5", "--grid", "1,0,0:2,1,1:9,9,9:cylindrical_rz"],
    ];
    for (i, extra) in cases.iter().enumerate() {
        let o = out(&tmp, &format!("k{i}"));
        let mut args = vec!["oracle", "--out", s(&o)];
        args.extend_from_slice(extra);
        let r = beltrami(&args);
        assert_eq!(r.code, 0, "{extra:?}: {}", r.stderr);
        assert!(o.join("u.bfg1").exists() && o.join("f.bfg1").exists());
    }
    let o = out(&tmp, "bad");
    let r = beltrami(&["oracle", "--kind", "planar-cr", "--phi", "1", "--v", "x", "--w", "y", "--grid", "0,0,0:1,1,1:9,9,9", "--out", s(&o)]);
    assert_eq!(r.code, 2, "a non-Cauchy-Riemann pair is an input error");
    let r = beltrami(&["oracle", "--kind", "planar-cr", "--grid", "0,0,0:1,1,1:9,9,9", "--out", s(&o)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("--phi is required"), "{}", r.stderr);
}

#[test]
fn verify_inline_expressions() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "v");
    // curl (-y, x, 0) = (0, 0, 2), so f = 0 fails and u = e_z passes
    let r = beltrami(&["verify", "--u", "-y, x, 0", "--f", "0", "--grid", "0,0,0:1,1,1:9,9,9", "--out", s(&o)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(report(&o)["verify"]["curl_res"].as_f64().unwrap() > 1.0);
    let r = beltrami(&["verify", "--u", "0, 0, 1", "--f", "0", "--grid", "0,0,0:1,1,1:9,9,9", "--out", s(&o)]);
    assert_eq!(r.code, 0);
    assert_eq!(report(&o)["verify"]["curl_res"], 0.0);

    let r = beltrami(&["verify", "--u", "0, 0, 1", "--f", "0", "--out", s(&o)]);
    assert_eq!(r.code, 2, "expressions need a grid");
}

#[test]
fn construct_nonlinear_translation_field() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "t");
    let r = beltrami(&[
        "construct",
        "--symmetry",
        "translation",
        "--phi",
        "t^2 / 2",
        "--bc",
        "1.3849210498948732 - 0.25*((x-0.5)^2 + (y-0.5)^2)",
        "--grid",
        "0,0,0:1,1,0:33,33,1",
        "--out",
        s(&o),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    for f in ["H.bfg1", "u.bfg1", "f.bfg1"] {
        assert!(o.join(f).exists(), "{f}");
    }
    let rep = report(&o);
    assert!(rep["newton"]["residual"].as_f64().unwrap() <= 1e-10);
    assert!(rep["phi_prime"].is_string());
    let h: f64 = 1.0 / 32.0;
    for key in ["curl_res", "div_res", "ortho_res"] {
        assert!(rep["verify"][key].as_f64().unwrap() <= 20.0 * h * h, "{key}");
    }
}

#[test]
fn construct_rotation_field() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "r");
    let r = beltrami(&[
        "construct",
        "--symmetry",
        "rotation",
        "--phi",
        "2*t",
        "--bc",
        "r^2 * cos(2*z)",
        "--grid",
        "0.5,0,0:1.5,0,1:33,1,33:cylindrical_rz",
        "--out",
        s(&o),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(&o);
    assert_eq!(rep["field_grid"]["coords"], "cylindrical_rz");
    assert!(rep["verify"]["curl_res"].as_f64().unwrap() <= 20.0 / (32.0 * 32.0));
}

#[test]
fn construct_with_boundary_data_from_a_file() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "f");
    let bc = data("saddle_bc.bfg1");
    let r = beltrami(&["construct", "--symmetry", "translation", "--phi", "0", "--bc", &bc, "--grid=-1,-1,0:1,1,0:9,9,1", "--out", s(&o)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(&o);
    assert_eq!(rep["newton"]["iterations"], 0);
    assert!(rep["verify"]["curl_res"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn divergent_newton_exits_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "d");
    let r = beltrami(&[
        "construct",
        "--symmetry",
        "translation",
        "--phi",
        "sqrt(40) * exp(t/2)",
        "--bc",
        "0",
        "--grid",
        "0,0,0:1,1,0:17,17,1",
        "--out",
        s(&o),
    ]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    let rep = report(&o);
    assert_eq!(rep["status"], "failed");
    assert!(rep["error"].as_str().unwrap().contains("Newton"));
    assert!(rep["newton"]["history"].is_array());
}

const SLICE_64: &str = "origin=0.04908738521234052,0.04908738521234052,0;spacing=0.09817477042468103,0.09817477042468103,1;dims=64,64,1";

#[test]
fn march_abc_slice() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "m");
    // ABC field with A = B = 1, C = 1/2
    let u = "sin(z) + 0.5*cos(y), sin(x) + cos(z), 0.5*sin(y) + cos(x)";
    let r = beltrami(&["march", "--u", u, "--grid", SLICE_64, "--out", s(&o)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(&o);
    let range = rep["f_range"].as_array().unwrap();
    for v in range {
        assert!((v.as_f64().unwrap() - 1.0).abs() <= 1e-3, "{range:?}");
    }
    assert!(rep["verify"]["curl_res"].as_f64().unwrap() <= 1e-3);
    assert_eq!(rep["field_grid"]["dims"], serde_json::json!([64, 64, 41]));
}

#[test]
fn march_blow_up_exits_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "b");
    let grid = "origin=0,0,0;spacing=0.09817477042468103,0.09817477042468103,1;dims=64,64,1";
    let r = beltrami(&["march", "--u", "0.001*sin(20*x), 0, 1", "--grid", grid, "--depth", "2", "--steps", "200", "--out", s(&o)]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert_eq!(report(&o)["status"], "failed");
}

#[test]
fn ode_writes_solution_table() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "ode");
    let r = beltrami(&["ode", "--phi", "0", "--r0", "1", "--u0", "0.7,-0.4", "--r1", "2", "--step", "0.01", "--out", s(&o)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(&o);
    let rs = rep["solution"]["r"].as_array().unwrap();
    let u1 = rep["solution"]["u1"].as_array().unwrap();
    let u2 = rep["solution"]["u2"].as_array().unwrap();
    assert_eq!(rs.len(), 101);
    for i in 0..rs.len() {
        let r = rs[i].as_f64().unwrap();
        assert!((u1[i].as_f64().unwrap() - 0.7 / r).abs() <= 1e-9);
        assert_eq!(u2[i].as_f64().unwrap(), -0.4);
    }
    let table = std::fs::read_to_string(o.join("solution.csv")).unwrap();
    assert!(table.starts_with("r,u1,u2\n"));
    assert_eq!(table.lines().count(), 102);

    let r = beltrami(&["ode", "--phi", "1", "--r0", "1", "--u0", "0,1", "--r1", "-1", "--out", s(&o)]);
    assert_eq!(r.code, 2, "the interval must stay off the axis");
}

#[test]
fn frame_with_evolution() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "planes");
    let r = beltrami(&[
        "frame", "--f", "z", "--grid", "0,0,0:1,1,1:17,17,17", "--u1", "x^2 - y^2", "--u2", "-2*x*y", "--out", s(&o), "--vtk",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.stdout.trim(), "compatible");
    let rep = report(&o);
    assert_eq!(rep["frame"]["kind"], "completion");
    assert_eq!(rep["evolution"]["incompatible"], false);
    for f in ["e1.bfg1", "h11.bfg1", "k3.bfg1", "u1_evolved.bfg1", "residual_r1.bfg1", "frame.vtk"] {
        assert!(o.join(f).exists(), "{f}");
    }

    // gradient of an axisymmetric harmonic function on the half-planes theta = const
    let o = out(&tmp, "wedge");
    let r = beltrami(&[
        "frame",
        "--f",
        "theta",
        "--grid",
        "1,0.2,0:2,0.8,1:33,33,33:cylindrical_rz",
        "--u1",
        "1 - 1.2*z + 0.5*(3*z^2 - 1.5*r^2)",
        "--u2",
        "0.6*r - 1.5*r*z",
        "--out",
        s(&o),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(&o);
    assert_eq!(rep["evolution"]["incompatible"], true, "{}", rep["evolution"]);
}

#[test]
fn frame_reports_the_cylinder_coefficients() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "cyl");
    let r = beltrami(&["frame", "--f", "r", "--grid", "1,0,0:2,1,1:17,17,17:cylindrical_rz", "--out", s(&o)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(&o);
    assert_eq!(rep["frame"]["kind"], "principal");
    assert_eq!(rep["frame"]["umbilic_type"], "no_umbilic_points");
    assert!((rep["frame"]["sup_norms"]["h11"].as_f64().unwrap() - 1.0).abs() <= 1e-3);

    let r = beltrami(&["frame", "--f", "x^2 + y^2 + z^2", "--grid=-1,-1,-1:1,1,1:9,9,9", "--out", s(&o)]);
    assert_eq!(r.code, 3, "critical point of f");
}

#[test]
fn input_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "e");
    let grid = "0,0,0:1,1,1:9,9,9";
    let cases: [&[&str]; 6] = [
        &["classify", "--f", "z +", "--grid", grid],
        &["classify", "--f", "z"],
        &["classify", "--f", "z", "--grid", "0,0,0:1,1,1:3,3,3"],
        &["classify", "--f", "missing.bfg1"],
        &["construct", "--symmetry", "sideways", "--phi", "t", "--bc", "0", "--grid", grid],
        &["nonsense"],
    ];
    for args in cases {
        let mut a = args.to_vec();
        a.extend(["--out", s(&o)]);
        let r = beltrami(&a);
        assert_eq!(r.code, 2, "{args:?}: {}", r.stderr);
        assert!(!r.stderr.is_empty());
    }

    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "not_a_flag = 1\n").unwrap();
    let r = beltrami(&["--config", s(&cfg), "classify", "--f", "z", "--grid", grid, "--out", s(&o)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("not-a-flag"), "{}", r.stderr);

    let r = beltrami_env(&["classify", "--f", "z", "--grid", grid, "--out", s(&o)], &[("BELTRAMI_THREADS", "0")]);
    assert_eq!(r.code, 2);
}

#[test]
fn help_and_version_exit_cleanly() {
    let r = beltrami(&["--help"]);
    assert_eq!(r.code, 0);
    for sub in ["classify", "frame", "construct", "verify", "march", "oracle", "ode"] {
        assert!(r.stdout.contains(sub), "{sub}");
    }
    assert_eq!(beltrami(&["--version"]).code, 0);
}
