use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use stationary_core::catalog::{make_patch, riemann_minimal_spec, FamilySpec};
use stationary_core::curve::CurveSpec;
use stationary_core::cyclic::{integrate_neg2_family, CyclicSpec, Neg2Family};
use stationary_core::flow::{descend, radial_noise, sample_mesh, write_trace_csv, StepRule, TriMesh};
use stationary_core::inversion::{image_alpha, verify_shift_directed, ShiftDirection};
use stationary_core::ruled::{coeff_table, write_coeff_csv, RuledSpec};
use stationary_core::stationary::{axis_samples, energy, fourier_defect, residual_grid};
use stationary_core::{Error, ParametricPatch, Result, Vec3, DOMAIN_MARGIN};

use crate::args::{Command, Direction, Rule};
use crate::family::compile;
use crate::output::Outputs;

fn json_bytes<T: serde::Serialize>(x: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(x)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn is_csv(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn obj_bytes(patch: &ParametricPatch, grid: (usize, usize)) -> Result<Vec<u8>> {
    let mesh = sample_mesh(patch, grid.0, grid.1)?;
    let mut buf = Vec::new();
    mesh.write_obj(&mut buf)?;
    Ok(buf)
}

/// Replace families that are generated on load by the tables they produce.
fn materialize(spec: &FamilySpec) -> Result<(FamilySpec, Option<Neg2Family>)> {
    let cyclic = |c: CyclicSpec| match c {
        CyclicSpec::Parallel { a, b, r, u_range } => FamilySpec::ParallelCyclic { a, b, r, u_range },
        CyclicSpec::Frenet { frame, a, b, c, r, u_range } => FamilySpec::FrenetCyclic { frame, a, b, c, r, u_range },
    };
    Ok(match spec {
        FamilySpec::Neg2Family { kappa, a0, da0, r0, dr0, u_range } => {
            let fam = integrate_neg2_family(kappa, *a0, *da0, *r0, *dr0, *u_range)?;
            (cyclic(fam.spec.clone()), Some(fam))
        }
        FamilySpec::RiemannMinimal { c_drift, r0, span } => (cyclic(riemann_minimal_spec(*c_drift, *r0, *span)?), None),
        FamilySpec::Inverted { inner } => {
            let (inner, fam) = materialize(inner)?;
            (FamilySpec::Inverted { inner: Box::new(inner) }, fam)
        }
        other => (other.clone(), None),
    })
}

fn ruled_of(spec: &FamilySpec) -> Result<RuledSpec> {
    match spec {
        FamilySpec::Helicoid { pitch, s_range, .. } => Ok(RuledSpec {
            gamma: CurveSpec::Line { point: Vec3::zeros(), direction: Vec3::z() * *pitch },
            beta: CurveSpec::equator(),
            s_range: *s_range,
            cylindrical: false,
        }),
        FamilySpec::RuledGeneric { ruled, .. } => Ok(ruled.clone()),
        _ => Err(Error::SpecValidation("coeffs needs a non-cylindrical ruled family (helicoid or ruled_generic)".into())),
    }
}

/// Execute one command; returns the summary line. Files are only written
/// after everything has been computed.
pub fn run(cmd: Command) -> Result<String> {
    let mut out = Outputs::default();
    let summary = match cmd {
        Command::Verify { surface, alpha, grid, out: path } => {
            let patch = make_patch(&compile(&surface)?)?;
            let rep = residual_grid(&patch, alpha, grid.0, grid.1)?;
            if let Some(p) = path {
                if is_csv(&p) {
                    out.add_with(&p, |b| rep.write_csv(b))?;
                } else {
                    out.add(&p, json_bytes(&rep)?);
                }
            }
            format!("{}: {}", patch.label, rep.summary())
        }
        Command::Energy { surface, alpha, grid, out: path } => {
            let patch = make_patch(&compile(&surface)?)?;
            let e = energy(&patch, alpha, grid.0, grid.1)?;
            if let Some(p) = path {
                let rec = serde_json::json!({ "label": patch.label, "alpha": alpha, "nu": grid.0, "nv": grid.1, "energy": e });
                out.add(&p, json_bytes(&rec)?);
            }
            format!("{}: E_alpha = {e:.15e} (alpha = {alpha}, {}x{} nodes)", patch.label, grid.0, grid.1)
        }
        Command::Coeffs { surface, alpha, samples, out: path } => {
            let spec = ruled_of(&compile(&surface)?)?;
            let rows = coeff_table(&spec, alpha, samples)?;
            if let Some(p) = path {
                out.add_with(&p, |b| write_coeff_csv(&rows, b))?;
            }
            let m = rows.iter().flat_map(|r| r.coeffs()).map(f64::abs).fold(0.0, f64::max);
            format!("max |A_n| = {m:.3e} over {} samples (alpha = {alpha})", rows.len())
        }
        Command::Fourier { surface, alpha, n_max, nv, samples, out: path } => {
            let patch = make_patch(&compile(&surface)?)?;
            if samples < 2 {
                return Err(Error::Precondition("--samples must be at least 2".into()));
            }
            let us = axis_samples(patch.u_range, samples, false, DOMAIN_MARGIN);
            let rows = us.iter().map(|&u| fourier_defect(&patch, alpha, u, n_max, nv)).collect::<Result<Vec<_>>>()?;
            if let Some(p) = path {
                if is_csv(&p) {
                    out.add_with(&p, |b| {
                        use std::io::Write;
                        writeln!(b, "u,n,a,b")?;
                        for r in &rows {
                            for n in 0..=n_max {
                                writeln!(b, "{},{},{},{}", r.u, n, r.a[n], r.b[n])?;
                            }
                        }
                        Ok(())
                    })?;
                } else {
                    out.add(&p, json_bytes(&rows)?);
                }
            }
            let m = rows.iter().map(|r| r.max_abs()).fold(0.0, f64::max);
            let tail = rows.iter().map(|r| r.tail).fold(0.0, f64::max);
            format!("max harmonic (n <= {n_max}) = {m:.3e}, max tail = {tail:.3e} over {} circles", rows.len())
        }
        Command::Generate { surface, out: path, table, export, grid } => {
            let (spec, fam) = materialize(&compile(&surface)?)?;
            let patch = make_patch(&spec)?;
            out.add(&path, json_bytes(&spec)?);
            if let Some(t) = table {
                let fam = fam.ok_or_else(|| Error::SpecValidation("--table needs an integrated family (neg2-ode)".into()))?;
                out.add_with(&t, |b| fam.write_csv(b))?;
            }
            if let Some(e) = export {
                out.add(&e, obj_bytes(&patch, grid)?);
            }
            format!("generated {} over u in [{}, {}]", patch.label, patch.u_range[0], patch.u_range[1])
        }
        Command::Invert { surface, alpha, grid, out: path, export } => {
            let (inner, _) = materialize(&compile(&surface)?)?;
            let spec = FamilySpec::Inverted { inner: Box::new(inner) };
            let patch = make_patch(&spec)?;
            let mut line = format!("inverted {}", patch.label);
            if let Some(a) = alpha {
                let rep = residual_grid(&patch, image_alpha(a), grid.0, grid.1)?;
                line = format!("{line}: {}", rep.summary());
            }
            if let Some(p) = path {
                out.add(&p, json_bytes(&spec)?);
            }
            if let Some(e) = export {
                out.add(&e, obj_bytes(&patch, grid)?);
            }
            line
        }
        Command::VerifyShift { surface, alpha, grid, direction, out: path } => {
            let patch = make_patch(&compile(&surface)?)?;
            let dir = match direction {
                Direction::Forward => ShiftDirection::Forward,
                Direction::Inverse => ShiftDirection::Inverse,
            };
            let rep = verify_shift_directed(&patch, alpha, grid.0, grid.1, dir)?;
            if let Some(p) = path {
                out.add(&p, json_bytes(&rep)?);
            }
            rep.summary()
        }
        Command::Flow { surface, mesh, alpha, grid, steps, rule, dt, dt_max, noise, seed, trace, export } => {
            let start = match mesh {
                Some(p) => {
                    if surface.family.is_some() || surface.spec.is_some() {
                        return Err(Error::SpecValidation("--mesh cannot be combined with --family or --spec".into()));
                    }
                    let f = File::open(&p).map_err(|e| Error::Io(format!("--mesh {}: {e}", p.display())))?;
                    TriMesh::read_obj(BufReader::new(f))?
                }
                None => sample_mesh(&make_patch(&compile(&surface)?)?, grid.0, grid.1)?,
            };
            if !(0.0..1.0).contains(&noise) {
                return Err(Error::SpecValidation(format!("--noise must be in [0, 1), got {noise}")));
            }
            let start = if noise > 0.0 { radial_noise(&start, noise, seed) } else { start };
            let rule = match rule {
                Rule::Fixed => StepRule::Fixed { dt },
                Rule::Backtracking => StepRule::Backtracking { dt, dt_max },
            };
            let (end, rows) = descend(&start, alpha, steps, rule)?;
            if let Some(p) = trace {
                out.add_with(&p, |b| write_trace_csv(&rows, b))?;
            }
            if let Some(e) = export {
                let mut buf = Vec::new();
                end.write_obj(&mut buf)?;
                out.add(&e, buf);
            }
            let (first, last) = (rows[0], rows[rows.len() - 1]);
            format!(
                "energy {:.9e} -> {:.9e} over {} steps; max gradient {:.3e} -> {:.3e}",
                first.energy, last.energy, last.step, first.grad_max, last.grad_max
            )
        }
        Command::Export { surface, grid, export } => {
            let patch = make_patch(&compile(&surface)?)?;
            let mesh = sample_mesh(&patch, grid.0, grid.1)?;
            let mut buf = Vec::new();
            mesh.write_obj(&mut buf)?;
            out.add(&export, buf);
            format!(
                "{}: {} vertices, {} triangles, {}",
                patch.label,
                mesh.vertices.len(),
                mesh.triangles.len(),
                if mesh.is_closed() { "closed" } else { "open" }
            )
        }
    };
    out.commit()?;
    Ok(summary)
}
