//! Named surface families as patches with analytic (or tabulated) jets.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::curve::{planar_samples, CurveSpec, EulerCurve, PlanarSample};
use crate::cyclic::{build_cyclic, integrate_neg2_family, log_spiral_example, CyclicSpec, FrameSpec, NODE_SPACING};
use crate::error::{Error, Result};
use crate::expr::ScalarFn;
use crate::interp::HermiteTable;
use crate::inversion::invert_patch;
use crate::jet::{Dual2, Scalar};
use crate::kernel::{ParametricPatch, UClosure, Vec3, DOMAIN_MARGIN};
use crate::ode;
use crate::ruled::{cylinder_check, cylinder_spec, RuledSpec};
use crate::stationary::{axis_samples, fourier_defect};

/// Directrix of a cylinder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Directrix {
    Curve { curve: CurveSpec, s_range: [f64; 2] },
    Euler(EulerCurve),
}

impl Directrix {
    fn resolve(&self) -> Result<(CurveSpec, [f64; 2])> {
        match self {
            Directrix::Curve { curve, s_range } => Ok((curve.clone(), *s_range)),
            Directrix::Euler(e) => Ok((e.integrate()?, [0.0, e.length])),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn ring() -> [f64; 2] {
    [0.5, 2.0]
}
fn square() -> [f64; 2] {
    [-2.0, 2.0]
}
fn unit_range() -> [f64; 2] {
    [-1.0, 1.0]
}
fn helicoid_s() -> [f64; 2] {
    [0.5, 3.5]
}
fn helicoid_t() -> [f64; 2] {
    [-1.5, 1.5]
}
fn log_spiral_u() -> [f64; 2] {
    [0.5, 3.0]
}

/// Serializable description of a surface; the payload of the command line
/// `--family` / `--spec` options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// The plane through 0 with the given normal, in polar coordinates
    /// `rho` in `rho_range` (the origin itself is left out).
    VectorPlane {
        normal: Vec3,
        #[serde(default = "ring")]
        rho_range: [f64; 2],
    },
    /// `{ <x, normal> = offset }` over a square.
    AffinePlane {
        normal: Vec3,
        offset: f64,
        #[serde(default = "square")]
        range: [f64; 2],
    },
    /// Latitude `u` in `[-pi/2, pi/2]`, longitude `v` periodic.
    Sphere { center: Vec3, radius: f64 },
    /// `gamma(s) - t w` over a planar directrix.
    CylinderOverCurve {
        directrix: Directrix,
        #[serde(default)]
        w: Option<Vec3>,
        #[serde(default = "unit_range")]
        t_range: [f64; 2],
    },
    /// `(t cos s, t sin s, pitch s)`.
    Helicoid {
        #[serde(default = "one")]
        pitch: f64,
        #[serde(default = "helicoid_s")]
        s_range: [f64; 2],
        #[serde(default = "helicoid_t")]
        t_range: [f64; 2],
    },
    /// `axis_offset + (waist cosh(u/waist) cos v, waist cosh(u/waist) sin v, u)`.
    Catenoid {
        #[serde(default = "one")]
        waist: f64,
        #[serde(default)]
        axis_offset: Vec3,
        #[serde(default = "unit_range")]
        u_range: [f64; 2],
    },
    RuledGeneric {
        ruled: RuledSpec,
        #[serde(default = "unit_range")]
        t_range: [f64; 2],
    },
    /// Circles of radius `r(u)` centred at `(a(u), b(u), u)` in the planes `z = u`.
    ParallelCyclic { a: ScalarFn, b: ScalarFn, r: ScalarFn, u_range: [f64; 2] },
    /// Circles of radius `r` centred at `Gamma + a t + b n + c b` in the
    /// normal planes of a curve `Gamma`.
    FrenetCyclic { frame: FrameSpec, a: ScalarFn, b: ScalarFn, c: ScalarFn, r: ScalarFn, u_range: [f64; 2] },
    Inverted { inner: Box<FamilySpec> },
    /// `(-u sin(log u) cos v, u cos(log u) cos v, u sin v)`.
    LogSpiralNeg2 {
        #[serde(default = "log_spiral_u")]
        u_range: [f64; 2],
    },
    /// Cyclic `(-2)`-stationary surface over a planar centre curve with
    /// curvature `kappa`, integrated from `(a0, da0, r0, dr0)`.
    Neg2Family { kappa: ScalarFn, a0: f64, da0: f64, r0: f64, dr0: f64, u_range: [f64; 2] },
    RiemannMinimal { c_drift: f64, r0: f64, span: f64 },
    /// Torus of revolution about the `z`-axis through `center`.
    Torus {
        #[serde(default)]
        center: Vec3,
        major: f64,
        minor: f64,
    },
}

/// Orthonormal `(e1, e2)` spanning the plane orthogonal to `n`.
fn plane_basis(n: &Vec3) -> Result<(Vec3, Vec3, Vec3)> {
    let norm = n.norm();
    if !(norm > 1e-12) || !norm.is_finite() {
        return Err(Error::SpecValidation(format!("plane normal must be nonzero, got {n:?}")));
    }
    let n = n / norm;
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = n.cross(&helper).normalize();
    Ok((n, e1, n.cross(&e1)))
}

fn check_range(name: &str, r: [f64; 2]) -> Result<()> {
    if r[0].is_finite() && r[1].is_finite() && r[1] > r[0] {
        Ok(())
    } else {
        Err(Error::SpecValidation(format!("{name} must be an increasing finite range, got {r:?}")))
    }
}

fn vec_label(v: &Vec3) -> String {
    format!("({},{},{})", v.x, v.y, v.z)
}

fn combine(p: Vec3, e1: Vec3, e2: Vec3, x: Dual2, y: Dual2) -> [Dual2; 3] {
    std::array::from_fn(|i| x * e1[i] + y * e2[i] + p[i])
}

/// Smallest `|p|` over an interior sampling grid of the patch.
fn min_distance_to_origin(patch: &ParametricPatch, n: usize) -> Result<f64> {
    let us = axis_samples(patch.u_range, n, patch.u_closure == UClosure::Periodic, DOMAIN_MARGIN);
    let vs = axis_samples(patch.v_range, n, patch.v_periodic, DOMAIN_MARGIN);
    let mut m = f64::INFINITY;
    for &u in &us {
        for &v in &vs {
            m = m.min(patch.position(u, v)?.norm());
        }
    }
    Ok(m)
}

pub fn make_patch(spec: &FamilySpec) -> Result<ParametricPatch> {
    match spec {
        FamilySpec::VectorPlane { normal, rho_range } => {
            check_range("rho_range", *rho_range)?;
            if !(rho_range[0] > 0.0) {
                return Err(Error::SpecValidation("vector plane needs rho_range above 0".into()));
            }
            let (n, e1, e2) = plane_basis(normal)?;
            Ok(ParametricPatch::from_fn(
                move |r, t| Ok(combine(Vec3::zeros(), e1, e2, r * t.cos(), r * t.sin())),
                *rho_range,
                [0.0, TAU],
                format!("vector_plane(normal={})", vec_label(&n)),
            )
            .periodic_v())
        }
        FamilySpec::AffinePlane { normal, offset, range } => {
            check_range("range", *range)?;
            let (n, e1, e2) = plane_basis(normal)?;
            let p0 = n * *offset;
            Ok(ParametricPatch::from_fn(
                move |x, y| Ok(combine(p0, e1, e2, x, y)),
                *range,
                *range,
                format!("affine_plane(normal={},offset={offset})", vec_label(&n)),
            ))
        }
        FamilySpec::Sphere { center, radius } => {
            if !(*radius > 0.0) {
                return Err(Error::SpecValidation(format!("sphere radius must be positive, got {radius}")));
            }
            let (c, r) = (*center, *radius);
            Ok(ParametricPatch::from_fn(
                move |u, v| Ok([u.cos() * v.cos() * r + c.x, u.cos() * v.sin() * r + c.y, u.sin() * r + c.z]),
                [-FRAC_PI_2, FRAC_PI_2],
                [0.0, TAU],
                format!("sphere(center={},R={r})", vec_label(&c)),
            )
            .periodic_v()
            .with_u_closure(UClosure::Poles))
        }
        FamilySpec::CylinderOverCurve { directrix, w, t_range } => {
            check_range("t_range", *t_range)?;
            let (gamma, s_range) = directrix.resolve()?;
            check_range("s_range", s_range)?;
            // rejects non-planar or singular directrices
            cylinder_check(&gamma, s_range, 0.0, 65, *w)?;
            let label = match directrix {
                Directrix::Euler(e) => format!(
                    "cylinder(euler(alpha={},r0={},theta0={},heading={},length={}))",
                    e.alpha, e.r0, e.theta0, e.heading, e.length
                ),
                Directrix::Curve { .. } => "cylinder(curve)".to_string(),
            };
            Ok(cylinder_spec(gamma, s_range, *w)?.patch(*t_range)?.with_label(label))
        }
        FamilySpec::Helicoid { pitch, s_range, t_range } => {
            check_range("s_range", *s_range)?;
            check_range("t_range", *t_range)?;
            if *pitch == 0.0 || !pitch.is_finite() {
                return Err(Error::SpecValidation(format!("helicoid pitch must be nonzero, got {pitch}")));
            }
            let h = *pitch;
            Ok(ParametricPatch::from_fn(
                move |s, t| Ok([t * s.cos(), t * s.sin(), s * h]),
                *s_range,
                *t_range,
                format!("helicoid(pitch={h})"),
            ))
        }
        FamilySpec::Catenoid { waist, axis_offset, u_range } => {
            check_range("u_range", *u_range)?;
            if !(*waist > 0.0) {
                return Err(Error::SpecValidation(format!("catenoid waist must be positive, got {waist}")));
            }
            let (c, o) = (*waist, *axis_offset);
            Ok(ParametricPatch::from_fn(
                move |u, v| {
                    let rho = (u / c).cosh() * c;
                    Ok([rho * v.cos() + o.x, rho * v.sin() + o.y, u + o.z])
                },
                *u_range,
                [0.0, TAU],
                format!("catenoid(waist={c},axis_offset={})", vec_label(&o)),
            )
            .periodic_v())
        }
        FamilySpec::RuledGeneric { ruled, t_range } => {
            check_range("t_range", *t_range)?;
            ruled.patch(*t_range)
        }
        FamilySpec::ParallelCyclic { a, b, r, u_range } => {
            let spec = CyclicSpec::Parallel { a: a.clone(), b: b.clone(), r: r.clone(), u_range: *u_range };
            build_cyclic(&spec)
        }
        FamilySpec::FrenetCyclic { frame, a, b, c, r, u_range } => {
            let spec = CyclicSpec::Frenet {
                frame: frame.clone(),
                a: a.clone(),
                b: b.clone(),
                c: c.clone(),
                r: r.clone(),
                u_range: *u_range,
            };
            build_cyclic(&spec)
        }
        FamilySpec::Inverted { inner } => {
            let inner = make_patch(inner)?;
            let d = min_distance_to_origin(&inner, 33)?;
            if !(d > 1e-6) {
                return Err(Error::SpecValidation(format!(
                    "inverted: inner surface {} reaches the origin (min |p| = {d:e})",
                    inner.label
                )));
            }
            Ok(invert_patch(&inner))
        }
        FamilySpec::LogSpiralNeg2 { u_range } => log_spiral_example(*u_range),
        FamilySpec::Neg2Family { kappa, a0, da0, r0, dr0, u_range } => {
            let fam = integrate_neg2_family(kappa, *a0, *da0, *r0, *dr0, *u_range)?;
            Ok(build_cyclic(&fam.spec)?.with_label(format!("neg2_family(a0={a0},da0={da0},r0={r0},dr0={dr0})")))
        }
        FamilySpec::RiemannMinimal { c_drift, r0, span } => riemann_minimal(*c_drift, *r0, *span),
        FamilySpec::Torus { center, major, minor } => {
            if !(*minor > 0.0 && *major > *minor) {
                return Err(Error::SpecValidation(format!("torus needs 0 < minor < major, got {minor}, {major}")));
            }
            let (c, big, small) = (*center, *major, *minor);
            Ok(ParametricPatch::from_fn(
                move |u, v| {
                    let rho = v.cos() * small + big;
                    Ok([rho * u.cos() + c.x, rho * u.sin() + c.y, v.sin() * small + c.z])
                },
                [0.0, TAU],
                [0.0, TAU],
                format!("torus(center={},R={big},r={small})", vec_label(&c)),
            )
            .periodic_v()
            .with_u_closure(UClosure::Periodic))
        }
    }
}

/// Samples `(s, gamma, n, kappa)` of a planar Euler curve.
pub fn euler_planar_curve(curve: &EulerCurve, n: usize) -> Result<Vec<PlanarSample>> {
    if n < 2 {
        return Err(Error::Precondition("need at least two samples".into()));
    }
    let table = curve.integrate()?;
    planar_samples(&table, Vec3::z(), [0.0, curve.length], n)
}

/// `(a'', r'')` that make the harmonics 0 and 1 of the minimality defect of
/// the parallel foliation vanish, given `(a, a', r, r')` at height `u`.
///
/// The defect is affine in `(a'', r'')`, so three evaluations determine it.
pub fn riemann_second_derivatives(u: f64, a: f64, da: f64, r: f64, dr: f64) -> Result<(f64, f64)> {
    let harmonics = |dda: f64, ddr: f64| -> Result<[f64; 2]> {
        let patch = ParametricPatch::from_fn(
            move |uu, v| {
                let x = uu - u;
                let av = x * x * (0.5 * dda) + x * da + a;
                let rv = x * x * (0.5 * ddr) + x * dr + r;
                Ok([rv * v.cos() + av, rv * v.sin(), uu])
            },
            [u - 1.0, u + 1.0],
            [0.0, TAU],
            "local",
        )
        .periodic_v();
        let f = fourier_defect(&patch, 0.0, u, 4, 32)?;
        Ok([f.a[0], f.a[1]])
    };
    let d0 = harmonics(0.0, 0.0)?;
    let da_col = harmonics(1.0, 0.0)?;
    let dr_col = harmonics(0.0, 1.0)?;
    let m = [[da_col[0] - d0[0], dr_col[0] - d0[0]], [da_col[1] - d0[1], dr_col[1] - d0[1]]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    if !(det.abs() > 1e-12 * scale * scale) {
        return Err(Error::DegenerateFamily { u, det });
    }
    let dda = (-d0[0] * m[1][1] + d0[1] * m[0][1]) / det;
    let ddr = (-d0[1] * m[0][0] + d0[0] * m[1][0]) / det;
    Ok((dda, ddr))
}

/// Minimal surface foliated by circles in the planes `z = u`, centre
/// `(a(u), 0, u)` and radius `r(u)`, over `|u| <= span`, with `a(0) = 0`,
/// `a'(0) = c_drift`, `r(0) = r0`, `r'(0) = 0`. `c_drift = 0` is the catenoid.
pub fn riemann_minimal(c_drift: f64, r0: f64, span: f64) -> Result<ParametricPatch> {
    let spec = riemann_minimal_spec(c_drift, r0, span)?;
    Ok(build_cyclic(&spec)?.with_label(format!("riemann_minimal(c_drift={c_drift},r0={r0},span={span})")))
}

/// The tabulated parallel cyclic spec behind [`riemann_minimal`].
pub fn riemann_minimal_spec(c_drift: f64, r0: f64, span: f64) -> Result<CyclicSpec> {
    if !(r0 > 0.0) {
        return Err(Error::SpecValidation(format!("riemann_minimal needs r0 > 0, got {r0}")));
    }
    if !(span > 0.0 && span.is_finite()) {
        return Err(Error::SpecValidation(format!("riemann_minimal needs span > 0, got {span}")));
    }
    let rhs = |u: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        if !(y[2] > 1e-9) {
            return Err(Error::FoliationCollapse { u, r: y[2] });
        }
        let (dda, ddr) = riemann_second_derivatives(u, y[0], y[1], y[2], y[3])?;
        Ok([y[1], dda, y[3], ddr])
    };
    let collapse = |u: f64, y: &mut [f64; 4]| if y[2] > 1e-9 { Ok(()) } else { Err(Error::FoliationCollapse { u, r: y[2] }) };
    let y0 = [0.0, c_drift, r0, 0.0];
    let substeps = (NODE_SPACING / crate::cyclic::MAX_STEP).round() as usize;
    let (ub, yb) = ode::integrate_substeps(rhs, 0.0, y0, -span, NODE_SPACING, substeps, collapse)?;
    let (uf, yf) = ode::integrate_substeps(rhs, 0.0, y0, span, NODE_SPACING, substeps, collapse)?;
    let mut nodes = Vec::with_capacity(ub.len() + uf.len());
    let mut a_ch = Vec::with_capacity(nodes.capacity());
    let mut r_ch = Vec::with_capacity(nodes.capacity());
    for (u, y) in ub.iter().zip(&yb).rev().chain(uf.iter().zip(&yf).skip(1)) {
        let (dda, ddr) = riemann_second_derivatives(*u, y[0], y[1], y[2], y[3])?;
        nodes.push(*u);
        a_ch.push([y[0], y[1], dda]);
        r_ch.push([y[2], y[3], ddr]);
    }
    let table = |ch| HermiteTable::new(nodes.clone(), vec![ch]).map(ScalarFn::Table);
    Ok(CyclicSpec::Parallel { a: table(a_ch)?, b: ScalarFn::Const(0.0), r: table(r_ch)?, u_range: [-span, span] })
}
