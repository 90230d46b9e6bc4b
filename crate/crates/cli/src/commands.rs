use std::fmt::Display;
use std::path::Path;

use anyhow::{anyhow, Context};
use beltrami::cauchy::{march, recover_f, CauchyError, CauchySlice, MarchOptions};
use beltrami::frame::{
    adapted_frame, frame_invariants, orthonormality_defect, structure_residual, umbilic_classify, FrameError, FrameMode,
    FrameOptions,
};
use beltrami::frame_pde::{cylinder_ode_solve, evolve_level_surfaces, EvolveOptions, FramePdeError, InitialData, TangentialField};
use beltrami::grid::io::{save_scalar, save_vector};
use beltrami::grid::vtk::save_vtk;
use beltrami::obstruction::{classify, Case, ClassifyConfig};
use beltrami::reference::{materialize, OracleKind, OracleSpec, ReferenceError};
use beltrami::report::{classification_json, grid_json, Report};
use beltrami::symmetric::{assemble, solve_rotation, solve_translation, Boundary, NewtonOptions, SymmetricError};
use beltrami::verify::{verify_beltrami, VerifyReport};
use beltrami::{Grid, ScalarField, Stencil, VectorField};
use serde_json::json;

use crate::cli::*;
use crate::inputs;

/// Why a run stopped; selects the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config, expressions, grids or input files.
    Config(anyhow::Error),
    /// The numerics did not produce an answer.
    Numerical(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

#[derive(Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Indeterminate,
}

type Outcome = Result<Status, Failure>;

/// Output directory plus the report under construction.
struct Sink<'a> {
    out: &'a Output,
    report: Report,
}

impl<'a> Sink<'a> {
    fn new(command: &str, out: &'a Output) -> Result<Self, Failure> {
        std::fs::create_dir_all(&out.out).with_context(|| format!("creating {}", out.out.display()))?;
        Ok(Sink { out, report: Report::new(command) })
    }

    fn path(&self, name: &str) -> std::path::PathBuf {
        self.out.out.join(name)
    }

    fn scalar(&self, name: &str, f: &ScalarField) -> Result<(), Failure> {
        save_scalar(self.path(&format!("{name}.bfg1")), f).with_context(|| format!("writing {name}.bfg1"))?;
        Ok(())
    }

    fn vector(&self, name: &str, u: &VectorField) -> Result<(), Failure> {
        save_vector(self.path(&format!("{name}.bfg1")), u).with_context(|| format!("writing {name}.bfg1"))?;
        Ok(())
    }

    fn vtk(&self, name: &str, grid: &Grid, scalars: &[(&str, &ScalarField)], vectors: &[(&str, &VectorField)]) -> Result<(), Failure> {
        if self.out.vtk {
            save_vtk(self.path(&format!("{name}.vtk")), name, grid, scalars, vectors)
                .with_context(|| format!("writing {name}.vtk"))?;
        }
        Ok(())
    }

    fn finish(mut self, status: Status) -> Outcome {
        let label = match status {
            Status::Ok => "ok",
            Status::Indeterminate => "indeterminate",
        };
        self.report.set("status", label);
        self.save()?;
        Ok(status)
    }

    /// Records a numerical failure in the report before giving up.
    fn fail(mut self, e: impl Display) -> Failure {
        let msg = e.to_string();
        self.report.set("status", "failed").set("error", &msg);
        if let Err(io) = self.save() {
            return Failure::Config(io);
        }
        Failure::Numerical(anyhow!(msg))
    }

    fn save(&self) -> anyhow::Result<()> {
        let p = self.path("report.json");
        self.report.save(&p).with_context(|| format!("writing {}", p.display()))
    }
}

fn stencil_name(s: Stencil) -> &'static str {
    match s {
        Stencil::Second => "second",
        Stencil::Fourth => "fourth",
    }
}

fn verify_json(r: &VerifyReport, stencil: Stencil) -> serde_json::Value {
    json!({
        "curl_res": r.curl_res,
        "div_res": r.div_res,
        "ortho_res": r.ortho_res,
        "stencil": stencil_name(stencil),
    })
}

/// Frame errors other than grid-level input errors mean the level sets of f
/// do not admit the requested frame.
fn frame_numerical(e: &FrameError) -> bool {
    !matches!(e, FrameError::Grid(_))
}

pub fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Classify(a) => run_classify(a),
        Command::Frame(a) => run_frame(a),
        Command::Construct(a) => run_construct(a),
        Command::Verify(a) => run_verify(a),
        Command::March(a) => run_march(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Ode(a) => run_ode(a),
    }
}

fn run_classify(a: ClassifyArgs) -> Outcome {
    let grid = inputs::common_grid(&[&a.f], a.grid.as_deref())?;
    let f = inputs::scalar(&a.f, grid.as_ref(), "f")?;
    let mut sink = Sink::new("classify", &a.output)?;
    sink.report.set("input", json!({ "f": a.f })).set("grid", grid_json(&f.grid));
    let cfg = ClassifyConfig { eps: a.eps, stencil: a.stencil.into(), grad_tol: a.grad_tol };
    let c = match classify(&f, &cfg) {
        Ok(c) => c,
        Err(e) if frame_numerical(&e) => return Err(sink.fail(e)),
        Err(e) => return Err(Failure::Config(e.into())),
    };
    sink.report.set("classification", classification_json(&c));
    if let Some(t) = &c.torsion {
        sink.vtk(
            "classify",
            &f.grid,
            &[("f", &f), ("c_p1", &t.c_p1), ("c_u1", &t.c_u1), ("c_u2", &t.c_u2), ("second_level", &t.second_level)],
            &[],
        )?;
    } else {
        sink.vtk("classify", &f.grid, &[("f", &f)], &[])?;
    }
    println!("{}", c.case.label());
    let status = if c.case == Case::IndeterminateMixed { Status::Indeterminate } else { Status::Ok };
    sink.finish(status)
}

fn run_frame(a: FrameArgs) -> Outcome {
    let sources: Vec<&str> = [Some(a.f.as_str()), a.u1.as_deref(), a.u2.as_deref()].into_iter().flatten().collect();
    let grid = inputs::common_grid(&sources, a.grid.as_deref())?;
    let f = inputs::scalar(&a.f, grid.as_ref(), "f")?;
    let data = match (&a.u1, &a.u2) {
        (Some(u1), Some(u2)) => Some(TangentialField {
            u1: inputs::scalar(u1, Some(&f.grid), "u1")?,
            u2: inputs::scalar(u2, Some(&f.grid), "u2")?,
        }),
        _ => None,
    };
    let mut sink = Sink::new("frame", &a.output)?;
    sink.report
        .set("input", json!({ "f": a.f, "u1": a.u1, "u2": a.u2, "level": a.level }))
        .set("grid", grid_json(&f.grid));

    let mode = match a.mode {
        ModeArg::Auto => FrameMode::Auto,
        ModeArg::Principal => FrameMode::Principal,
        ModeArg::Completion => FrameMode::Completion,
    };
    let opts = FrameOptions { grad_tol: a.grad_tol, umbilic_eps: a.eps, mode, stencil: a.stencil.into() };
    let fr = match adapted_frame(&f, &opts) {
        Ok(fr) => fr,
        Err(e) if frame_numerical(&e) => return Err(sink.fail(e)),
        Err(e) => return Err(Failure::Config(e.into())),
    };
    let inv = frame_invariants(&f, &fr).map_err(|e| Failure::Config(e.into()))?;
    let structure = structure_residual(&fr, &inv).map_err(|e| Failure::Config(e.into()))?;

    for (name, u) in [("e1", &fr.e1), ("e2", &fr.e2), ("e3", &fr.e3)] {
        sink.vector(name, u)?;
    }
    let mut sups = serde_json::Map::new();
    for (name, s) in inv.named() {
        sink.scalar(name, s)?;
        sups.insert(name.into(), json!(s.sup_norm()));
    }
    sink.report.set(
        "frame",
        json!({
            "kind": fr.kind,
            "seams": fr.seams,
            "stencil": stencil_name(fr.stencil),
            "orthonormality_defect": orthonormality_defect(&fr),
            "structure_residual": structure.sup_norm(),
            "umbilic_type": umbilic_classify(&inv, a.eps),
            "sup_norms": sups,
        }),
    );
    let mut scalars: Vec<(&str, &ScalarField)> = vec![("f", &f)];
    scalars.extend(inv.named());

    if let Some(data) = data {
        let eopts = EvolveOptions { level: a.level, ..Default::default() };
        let ev = match evolve_level_surfaces(&InitialData::Field(&data), &inv, &f, &fr, &eopts) {
            Ok(ev) => ev,
            Err(e @ FramePdeError::IncompatibleInitialData { .. }) => return Err(Failure::Config(e.into())),
            Err(e @ FramePdeError::Grid(_)) => return Err(Failure::Config(e.into())),
            Err(e) => return Err(sink.fail(e)),
        };
        sink.scalar("u1_evolved", &ev.field.u1)?;
        sink.scalar("u2_evolved", &ev.field.u2)?;
        for (name, r) in [("r1", &ev.residual.r1), ("r2", &ev.residual.r2), ("r3", &ev.residual.r3), ("r4", &ev.residual.r4)] {
            sink.scalar(&format!("residual_{name}"), r)?;
        }
        sink.report.set(
            "evolution",
            json!({
                "level": ev.level,
                "evolved_nodes": ev.evolved.iter().filter(|e| **e).count(),
                "initial_residual": ev.initial_residual,
                "final_residual": ev.final_residual,
                "amplification": ev.amplification,
                "truncation_floor": ev.truncation_floor,
                "incompatible": ev.incompatible,
            }),
        );
        let u = ev.field.reconstruct(&fr).map_err(|e| Failure::Config(e.into()))?;
        sink.vtk("frame", &f.grid, &scalars, &[("e1", &fr.e1), ("e2", &fr.e2), ("e3", &fr.e3), ("u", &u)])?;
        println!("{}", if ev.incompatible { "incompatible" } else { "compatible" });
    } else {
        sink.vtk("frame", &f.grid, &scalars, &[("e1", &fr.e1), ("e2", &fr.e2), ("e3", &fr.e3)])?;
    }
    sink.finish(Status::Ok)
}

fn run_construct(a: ConstructArgs) -> Outcome {
    let grid = inputs::grid_spec(&a.grid)?;
    let phi = inputs::expr(&a.phi, "phi")?;
    let bc = if inputs::is_file(&a.bc) {
        Boundary::Field(inputs::scalar(&a.bc, Some(&grid), "bc")?)
    } else {
        Boundary::Expr(inputs::expr(&a.bc, "bc")?)
    };
    let newton = NewtonOptions { tol: a.newton_tol, max_iter: a.newton_max_iter, ..Default::default() };
    let mut sink = Sink::new("construct", &a.output)?;
    let symmetry = match a.symmetry {
        SymmetryArg::Translation => "translation",
        SymmetryArg::Rotation => "rotation",
    };
    sink.report
        .set("input", json!({ "symmetry": symmetry, "phi": a.phi, "bc": a.bc }))
        .set("grid", grid_json(&grid))
        .set("newton_options", newton);

    let solved = match a.symmetry {
        SymmetryArg::Translation => solve_translation(&phi, &grid, &bc, &newton),
        SymmetryArg::Rotation => solve_rotation(&phi, &grid, &bc, &newton),
    };
    let fs = match solved {
        Ok(fs) => fs,
        Err(e @ (SymmetricError::NewtonDiverged { .. } | SymmetricError::SingularJacobian { .. })) => {
            if let SymmetricError::NewtonDiverged { history } = &e {
                sink.report.set("newton", json!({ "history": history }));
            }
            return Err(sink.fail(e));
        }
        Err(SymmetricError::Expr(e)) => return Err(sink.fail(e)),
        Err(e) => return Err(Failure::Config(e.into())),
    };
    let (u, f) = assemble(&fs).map_err(|e| Failure::Config(e.into()))?;
    let stencil: Stencil = a.stencil.into();
    let rep = verify_beltrami(&u, &f, stencil).map_err(|e| Failure::Config(e.into()))?;
    sink.scalar("H", &fs.h)?;
    sink.vector("u", &u)?;
    sink.scalar("f", &f)?;
    sink.vtk("construct", &u.grid, &[("f", &f)], &[("u", &u)])?;
    sink.report
        .set(
            "newton",
            json!({ "history": fs.history, "iterations": fs.iterations(), "residual": fs.residual() }),
        )
        .set("phi_prime", fs.phi_prime.to_string())
        .set("field_grid", grid_json(&u.grid))
        .set("verify", verify_json(&rep, stencil));
    println!("curl_res {:e} div_res {:e} ortho_res {:e}", rep.curl_res, rep.div_res, rep.ortho_res);
    sink.finish(Status::Ok)
}

fn run_verify(a: VerifyArgs) -> Outcome {
    let grid = inputs::common_grid(&[&a.u, &a.f], a.grid.as_deref())?;
    let u = inputs::vector(&a.u, grid.as_ref(), "u")?;
    let f = inputs::scalar(&a.f, Some(&u.grid), "f")?;
    let stencil: Stencil = a.stencil.into();
    let rep = verify_beltrami(&u, &f, stencil).context("verifying")?;
    let mut sink = Sink::new("verify", &a.output)?;
    sink.report
        .set("input", json!({ "u": a.u, "f": a.f }))
        .set("grid", grid_json(&u.grid))
        .set("h_max", u.grid.h_max())
        .set("verify", verify_json(&rep, stencil));
    sink.vtk("verify", &u.grid, &[("f", &f)], &[("u", &u)])?;
    println!("curl_res {:e} div_res {:e} ortho_res {:e}", rep.curl_res, rep.div_res, rep.ortho_res);
    sink.finish(Status::Ok)
}

fn run_march(a: MarchArgs) -> Outcome {
    let grid = inputs::common_grid(&[&a.u], a.grid.as_deref())?;
    let slice_field = inputs::vector(&a.u, grid.as_ref(), "u")?;
    let slice = CauchySlice::from_field(&slice_field).map_err(|e| Failure::Config(e.into()))?;
    let opts = MarchOptions { depth: a.depth, steps: a.steps, filter_frac: a.filter_frac, u3_min: a.u3_min, ..Default::default() };
    let mut sink = Sink::new("march", &a.output)?;
    sink.report
        .set("input", json!({ "u": a.u }))
        .set("slice_grid", grid_json(&slice_field.grid))
        .set("period", slice.period)
        .set("march_options", opts);
    let u = match march(&slice, &opts) {
        Ok(u) => u,
        Err(e @ (CauchyError::InvalidSlice(_) | CauchyError::InvalidOptions(_) | CauchyError::Grid(_))) => {
            return Err(Failure::Config(e.into()))
        }
        Err(e) => return Err(sink.fail(e)),
    };
    let stencil: Stencil = a.stencil.into();
    let f = match recover_f(&u, stencil, a.u3_min) {
        Ok(f) => f,
        Err(e) => return Err(sink.fail(e)),
    };
    let rep = verify_beltrami(&u, &f, stencil).map_err(|e| Failure::Config(e.into()))?;
    sink.vector("u", &u)?;
    sink.scalar("f", &f)?;
    sink.vtk("march", &u.grid, &[("f", &f)], &[("u", &u)])?;
    let (fmin, fmax) = f.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    sink.report
        .set("field_grid", grid_json(&u.grid))
        .set("f_range", [fmin, fmax])
        .set("verify", verify_json(&rep, stencil));
    println!("curl_res {:e} div_res {:e} f in [{fmin}, {fmax}]", rep.curl_res, rep.div_res);
    sink.finish(Status::Ok)
}

fn required<'a>(v: &'a Option<String>, flag: &str, kind: &str) -> Result<&'a str, Failure> {
    v.as_deref().ok_or_else(|| Failure::Config(anyhow!("--{flag} is required for --kind {kind}")))
}

fn run_oracle(a: OracleArgs) -> Outcome {
    let grid = inputs::grid_spec(&a.grid)?;
    let (kind, label, params) = match a.kind {
        OracleArg::Abc => (
            OracleKind::Abc { a: a.a, b: a.b, c: a.c, k: a.k },
            "abc",
            json!({ "a": a.a, "b": a.b, "c": a.c, "k": a.k }),
        ),
        OracleArg::HarmonicGradient => {
            let p = required(&a.potential, "potential", "harmonic-gradient")?;
            (OracleKind::HarmonicGradient { potential: inputs::expr(p, "potential")? }, "harmonic-gradient", json!({ "potential": p }))
        }
        OracleArg::PlanarCr => {
            let (phi, v, w) =
                (required(&a.phi, "phi", "planar-cr")?, required(&a.v, "v", "planar-cr")?, required(&a.w, "w", "planar-cr")?);
            (
                OracleKind::PlanarCr { phi: inputs::expr(phi, "phi")?, v: inputs::expr(v, "v")?, w: inputs::expr(w, "w")? },
                "planar-cr",
                json!({ "phi": phi, "v": v, "w": w }),
            )
        }
        OracleArg::Lundquist => (OracleKind::Lundquist { c: a.c }, "lundquist", json!({ "c": a.c })),
        OracleArg::Cylinder => {
            let phi = required(&a.phi, "phi", "cylinder")?;
            (
                OracleKind::Cylinder { phi: inputs::expr(phi, "phi")?, u1_0: a.u1_0, u2_0: a.u2_0, r0: a.r0 },
                "cylinder",
                json!({ "phi": phi, "u1_0": a.u1_0, "u2_0": a.u2_0, "r0": a.r0 }),
            )
        }
    };
    let mut sink = Sink::new("oracle", &a.output)?;
    sink.report.set("oracle", json!({ "kind": label, "parameters": params })).set("grid", grid_json(&grid));
    let (u, f) = match materialize(&OracleSpec { kind, grid }) {
        Ok(uf) => uf,
        Err(e @ ReferenceError::FramePde(_)) => return Err(sink.fail(e)),
        Err(e) => return Err(Failure::Config(e.into())),
    };
    let stencil: Stencil = a.stencil.into();
    let rep = verify_beltrami(&u, &f, stencil).map_err(|e| Failure::Config(e.into()))?;
    sink.vector("u", &u)?;
    sink.scalar("f", &f)?;
    sink.vtk("oracle", &u.grid, &[("f", &f)], &[("u", &u)])?;
    sink.report.set("h_max", u.grid.h_max()).set("verify", verify_json(&rep, stencil));
    println!("curl_res {:e} div_res {:e} ortho_res {:e}", rep.curl_res, rep.div_res, rep.ortho_res);
    sink.finish(Status::Ok)
}

fn run_ode(a: OdeArgs) -> Outcome {
    let phi = inputs::expr(&a.phi, "phi")?;
    let u0 = inputs::pair(&a.u0, "u0")?;
    let mut sink = Sink::new("ode", &a.output)?;
    sink.report.set("input", json!({ "phi": a.phi, "r0": a.r0, "u0": u0, "r1": a.r1, "step": a.step }));
    let sol = match cylinder_ode_solve(&phi, a.r0, u0, a.r1, a.step) {
        Ok(s) => s,
        Err(e @ FramePdeError::Expr(_)) => return Err(sink.fail(e)),
        Err(e) => return Err(Failure::Config(e.into())),
    };
    let u1: Vec<f64> = sol.u().iter().map(|u| u[0]).collect();
    let u2: Vec<f64> = sol.u().iter().map(|u| u[1]).collect();
    let last = *sol.u().last().expect("the solution includes the initial point");
    sink.report.set("solution", json!({ "r": sol.r(), "u1": u1, "u2": u2 }));
    write_table(&sink.path("solution.csv"), sol.r(), sol.u())?;
    println!("u({}) = ({}, {})", a.r1, last[0], last[1]);
    sink.finish(Status::Ok)
}

fn write_table(path: &Path, r: &[f64], u: &[[f64; 2]]) -> Result<(), Failure> {
    let mut s = String::from("r,u1,u2\n");
    for (r, u) in r.iter().zip(u) {
        s.push_str(&format!("{r},{},{}\n", u[0], u[1]));
    }
    std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
