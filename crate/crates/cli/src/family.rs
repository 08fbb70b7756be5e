//! Compile `--family` plus parameter flags (or `--spec`) into a [`FamilySpec`].

use std::f64::consts::FRAC_PI_2;
use std::fs;

use stationary_core::catalog::{Directrix, FamilySpec};
use stationary_core::curve::EulerCurve;
use stationary_core::expr::ScalarFn;
use stationary_core::{Error, Result, Vec3};

use crate::args::SurfaceArgs;

pub const FAMILIES: &[&str] = &[
    "vector-plane",
    "affine-plane",
    "sphere",
    "helicoid",
    "catenoid",
    "torus",
    "log-spiral",
    "neg2-ode",
    "riemann-minimal",
    "euler-cylinder",
];

fn v3(x: [f64; 3]) -> Vec3 {
    Vec3::new(x[0], x[1], x[2])
}

/// Names of the parameter flags that were given.
fn given(a: &SurfaceArgs) -> Vec<&'static str> {
    let mut out = Vec::new();
    let mut note = |set: bool, name: &'static str| {
        if set {
            out.push(name)
        }
    };
    note(a.center.is_some(), "center");
    note(a.radius.is_some(), "radius");
    note(a.normal.is_some(), "normal");
    note(a.offset.is_some(), "offset");
    note(a.pitch.is_some(), "pitch");
    note(a.waist.is_some(), "waist");
    note(a.axis_offset.is_some(), "axis-offset");
    note(a.major.is_some(), "major");
    note(a.minor.is_some(), "minor");
    note(a.kappa.is_some(), "kappa");
    note(a.u.is_some(), "u");
    note(a.t.is_some(), "t");
    note(a.a0.is_some(), "a0");
    note(a.da0.is_some(), "da0");
    note(a.r0.is_some(), "r0");
    note(a.dr0.is_some(), "dr0");
    note(a.c_drift.is_some(), "c-drift");
    note(a.span.is_some(), "span");
    note(a.curve_alpha.is_some(), "curve-alpha");
    note(a.theta0.is_some(), "theta0");
    note(a.heading.is_some(), "heading");
    note(a.length.is_some(), "length");
    out
}

fn allowed(family: &str) -> &'static [&'static str] {
    match family {
        "vector-plane" => &["normal", "u"],
        "affine-plane" => &["normal", "offset", "u"],
        "sphere" => &["center", "radius"],
        "helicoid" => &["pitch", "u", "t"],
        "catenoid" => &["waist", "axis-offset", "u"],
        "torus" => &["center", "major", "minor"],
        "log-spiral" => &["u"],
        "neg2-ode" => &["kappa", "u", "a0", "da0", "r0", "dr0"],
        "riemann-minimal" => &["c-drift", "r0", "span"],
        "euler-cylinder" => &["curve-alpha", "r0", "theta0", "heading", "length", "t"],
        _ => &[],
    }
}

fn normalize(name: &str) -> String {
    let n = name.trim().to_ascii_lowercase().replace('_', "-");
    match n.as_str() {
        "log-spiral-neg2" => "log-spiral".into(),
        "neg2-family" | "neg2" => "neg2-ode".into(),
        "riemann" => "riemann-minimal".into(),
        "cylinder" | "cylinder-over-curve" => "euler-cylinder".into(),
        _ => n,
    }
}

fn required<T: Copy>(x: Option<T>, flag: &str, family: &str) -> Result<T> {
    x.ok_or_else(|| Error::SpecValidation(format!("--{flag} is required for family {family}")))
}

fn from_flags(name: &str, a: &SurfaceArgs) -> Result<FamilySpec> {
    let family = normalize(name);
    if !FAMILIES.contains(&family.as_str()) {
        return Err(Error::SpecValidation(format!(
            "unknown --family '{name}' (expected one of: {}; other kinds need --spec)",
            FAMILIES.join(", ")
        )));
    }
    let ok = allowed(&family);
    if let Some(bad) = given(a).into_iter().find(|f| !ok.contains(f)) {
        return Err(Error::SpecValidation(format!("--{bad} does not apply to family {family}")));
    }
    let normal = v3(a.normal.unwrap_or([0.0, 0.0, 1.0]));
    let spec = match family.as_str() {
        "vector-plane" => FamilySpec::VectorPlane { normal, rho_range: a.u.unwrap_or([0.5, 2.0]) },
        "affine-plane" => FamilySpec::AffinePlane { normal, offset: a.offset.unwrap_or(1.0), range: a.u.unwrap_or([-2.0, 2.0]) },
        "sphere" => FamilySpec::Sphere { center: v3(a.center.unwrap_or([0.0; 3])), radius: a.radius.unwrap_or(1.0) },
        "helicoid" => FamilySpec::Helicoid {
            pitch: a.pitch.unwrap_or(1.0),
            s_range: a.u.unwrap_or([0.5, 3.5]),
            t_range: a.t.unwrap_or([-1.5, 1.5]),
        },
        "catenoid" => FamilySpec::Catenoid {
            waist: a.waist.unwrap_or(1.0),
            axis_offset: v3(a.axis_offset.unwrap_or([0.0; 3])),
            u_range: a.u.unwrap_or([-1.0, 1.0]),
        },
        "torus" => FamilySpec::Torus {
            center: v3(a.center.unwrap_or([0.0; 3])),
            major: a.major.unwrap_or(2.0),
            minor: a.minor.unwrap_or(0.5),
        },
        "log-spiral" => FamilySpec::LogSpiralNeg2 { u_range: a.u.unwrap_or([0.5, 3.0]) },
        "neg2-ode" => {
            let src = a.kappa.as_deref().ok_or_else(|| Error::SpecValidation("--kappa is required for family neg2-ode".into()))?;
            FamilySpec::Neg2Family {
                kappa: ScalarFn::parse(src).map_err(|e| Error::SpecValidation(format!("--kappa: {e}")))?,
                a0: a.a0.unwrap_or(0.0),
                da0: a.da0.unwrap_or(0.0),
                r0: required(a.r0, "r0", &family)?,
                dr0: required(a.dr0, "dr0", &family)?,
                u_range: required(a.u, "u", &family)?,
            }
        }
        "riemann-minimal" => FamilySpec::RiemannMinimal {
            c_drift: a.c_drift.unwrap_or(0.5),
            r0: a.r0.unwrap_or(1.0),
            span: a.span.unwrap_or(1.0),
        },
        "euler-cylinder" => FamilySpec::CylinderOverCurve {
            directrix: Directrix::Euler(EulerCurve {
                alpha: required(a.curve_alpha, "curve-alpha", &family)?,
                r0: a.r0.unwrap_or(1.0),
                theta0: a.theta0.unwrap_or(0.0),
                heading: a.heading.unwrap_or(FRAC_PI_2),
                length: a.length.unwrap_or(2.0),
            }),
            w: None,
            t_range: a.t.unwrap_or([-1.0, 1.0]),
        },
        _ => unreachable!("family list and match disagree"),
    };
    Ok(spec)
}

pub fn read_spec(path: &std::path::Path) -> Result<FamilySpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("--spec {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("--spec {}: {e}", path.display())))
}

pub fn compile(a: &SurfaceArgs) -> Result<FamilySpec> {
    let spec = match (&a.family, &a.spec) {
        (Some(name), None) => from_flags(name, a)?,
        (None, Some(path)) => {
            if let Some(flag) = given(a).first() {
                return Err(Error::SpecValidation(format!("--{flag} cannot be combined with --spec")));
            }
            read_spec(path)?
        }
        _ => return Err(Error::SpecValidation("exactly one of --family or --spec is required".into())),
    };
    Ok(if a.inverted { FamilySpec::Inverted { inner: Box::new(spec) } } else { spec })
}
