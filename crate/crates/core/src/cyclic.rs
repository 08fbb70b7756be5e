//! Surfaces foliated by circles.
//!
//! Two foliations are supported:
//!
//! - *parallel*: circles in the planes `z = u`,
//!   `Psi(u, v) = (a(u), b(u), u) + r(u) (cos v, sin v, 0)`;
//! - *frenet*: circles in the normal planes of a space curve `Gamma` with
//!   Frenet frame `{t, n, b}`, centre `c = a t + b n + c b` and radius `r`,
//!   `Psi(u, v) = c(u) + r(u) (cos v n(u) + sin v b(u))`.
//!
//! The module also carries the closed-form top harmonics of the weighted
//! defect for both foliations, and the ODE family of cyclic surfaces that
//! are critical for `alpha = -2`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ScalarFn;
use crate::interp::HermiteTable;
use crate::jet::{Dual2, Scalar, Taylor3};
use crate::kernel::{ParametricPatch, Surface, Vec3};
use crate::ode;

/// Largest RK4 step for frames and ODE families.
pub const MAX_STEP: f64 = 1e-3;
/// Largest node spacing of the resulting tables. Much finer tables lose
/// second-derivative accuracy to rounding in the stored values.
pub const NODE_SPACING: f64 = 1e-2;
const SUBSTEPS: usize = 10;

fn lift(u: Dual2, t: Taylor3) -> Dual2 {
    u.lift(t.0)
}

// ---------------------------------------------------------------------------
// Frenet frames

/// Initial point and orthonormal frame of a curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameInit {
    pub gamma: Vec3,
    pub t: Vec3,
    pub n: Vec3,
    pub b: Vec3,
}

impl Default for FrameInit {
    fn default() -> Self {
        Self { gamma: Vec3::zeros(), t: Vec3::x(), n: Vec3::y(), b: Vec3::z() }
    }
}

/// Inputs from which a [`CurveFrame`] is integrated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub kappa: ScalarFn,
    #[serde(default = "zero_fn")]
    pub tau: ScalarFn,
    #[serde(default)]
    pub init: FrameInit,
}

fn zero_fn() -> ScalarFn {
    ScalarFn::Const(0.0)
}

/// A curve with its Frenet frame, sampled along arc length.
#[derive(Clone, Debug)]
pub struct CurveFrame {
    /// Channels: `Gamma` (0..3), `t` (3..6), `n` (6..9), `b` (9..12).
    table: HermiteTable,
    pub kappa: ScalarFn,
    pub tau: ScalarFn,
    /// Largest deviation from orthonormality seen before re-projection.
    pub max_drift: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameSample {
    pub u: f64,
    pub gamma: Vec3,
    pub t: Vec3,
    pub n: Vec3,
    pub b: Vec3,
    pub kappa: f64,
    pub tau: f64,
}

fn orthonormal_error(t: &Vec3, n: &Vec3, b: &Vec3) -> f64 {
    [
        t.norm_squared() - 1.0,
        n.norm_squared() - 1.0,
        b.norm_squared() - 1.0,
        t.dot(n),
        t.dot(b),
        n.dot(b),
        t.cross(n).dot(b) - 1.0,
    ]
    .iter()
    .map(|x| x.abs())
    .fold(0.0, f64::max)
}

/// Integrate the Frenet equations `t' = kappa n`, `n' = -kappa t + tau b`,
/// `b' = -tau n` together with `Gamma' = t` over `u_range`.
pub fn frame_from_curvature(
    kappa: &ScalarFn,
    tau: &ScalarFn,
    u_range: [f64; 2],
    init: FrameInit,
) -> Result<CurveFrame> {
    if orthonormal_error(&init.t, &init.n, &init.b) > 1e-10 {
        return Err(Error::Frame("initial frame is not orthonormal and right-handed".into()));
    }
    if !(u_range[1] > u_range[0]) {
        return Err(Error::SpecValidation(format!("empty frame range {u_range:?}")));
    }
    let curv = |u: f64| -> Result<(Taylor3, Taylor3)> {
        let k = kappa.eval(u)?;
        if !(k.d(0) > 0.0) {
            return Err(Error::FrameUndefined { u, kappa: k.d(0) });
        }
        Ok((k, tau.eval(u)?))
    };
    let rhs = |u: f64, y: &[f64; 12]| -> Result<[f64; 12]> {
        let (k, tt) = curv(u)?;
        let (k, tt) = (k.d(0), tt.d(0));
        let mut d = [0.0; 12];
        for i in 0..3 {
            let (t, n, b) = (y[3 + i], y[6 + i], y[9 + i]);
            d[i] = t;
            d[3 + i] = k * n;
            d[6 + i] = -k * t + tt * b;
            d[9 + i] = -tt * n;
        }
        Ok(d)
    };
    let mut drift: f64 = 0.0;
    let y0 = pack(&init);
    let (us, ys) = ode::integrate_substeps(rhs, u_range[0], y0, u_range[1], NODE_SPACING, SUBSTEPS, |_, y| {
        let f = unpack(y);
        drift = drift.max(orthonormal_error(&f.t, &f.n, &f.b));
        let t = f.t.normalize();
        let n = (f.n - t * t.dot(&f.n)).normalize();
        let b = t.cross(&n);
        *y = pack(&FrameInit { gamma: f.gamma, t, n, b });
        Ok(())
    })?;
    let mut channels = (0..12).map(|_| Vec::with_capacity(us.len())).collect::<Vec<_>>();
    for (&u, y) in us.iter().zip(&ys) {
        let (k, tt) = curv(u)?;
        let (k0, k1, t0, t1) = (k.d(0), k.d(1), tt.d(0), tt.d(1));
        let f = unpack(y);
        let dt = f.n * k0;
        let dn = -f.t * k0 + f.b * t0;
        let db = -f.n * t0;
        let ddt = f.n * k1 + dn * k0;
        let ddn = -f.t * k1 - dt * k0 + f.b * t1 + db * t0;
        let ddb = -f.n * t1 - dn * t0;
        let rows = [(f.gamma, f.t, dt), (f.t, dt, ddt), (f.n, dn, ddn), (f.b, db, ddb)];
        for (v, (x, dx, ddx)) in rows.iter().enumerate() {
            for i in 0..3 {
                channels[3 * v + i].push([x[i], dx[i], ddx[i]]);
            }
        }
    }
    Ok(CurveFrame { table: HermiteTable::new(us, channels)?, kappa: kappa.clone(), tau: tau.clone(), max_drift: drift })
}

fn pack(f: &FrameInit) -> [f64; 12] {
    let mut y = [0.0; 12];
    for i in 0..3 {
        y[i] = f.gamma[i];
        y[3 + i] = f.t[i];
        y[6 + i] = f.n[i];
        y[9 + i] = f.b[i];
    }
    y
}

fn unpack(y: &[f64; 12]) -> FrameInit {
    let v = |o: usize| Vec3::new(y[o], y[o + 1], y[o + 2]);
    FrameInit { gamma: v(0), t: v(3), n: v(6), b: v(9) }
}

impl FrameSpec {
    pub fn build(&self, u_range: [f64; 2]) -> Result<CurveFrame> {
        frame_from_curvature(&self.kappa, &self.tau, u_range, self.init)
    }
}

impl CurveFrame {
    pub fn domain(&self) -> [f64; 2] {
        self.table.domain()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.table.nodes
    }

    pub fn sample(&self, u: f64) -> Result<FrameSample> {
        let ch = self.table.eval_all(u)?;
        let v = |o: usize| Vec3::new(ch[o].d(0), ch[o + 1].d(0), ch[o + 2].d(0));
        Ok(FrameSample {
            u,
            gamma: v(0),
            t: v(3),
            n: v(6),
            b: v(9),
            kappa: self.kappa.value(u)?,
            tau: self.tau.value(u)?,
        })
    }

    /// Frame vectors `t, n, b` as functions of the surface parameter `u`.
    fn frame_duals(&self, u: Dual2) -> Result<[[Dual2; 3]; 3]> {
        let ch = self.table.eval_all(u.v)?;
        Ok(std::array::from_fn(|v| std::array::from_fn(|i| lift(u, ch[3 + 3 * v + i]))))
    }
}

// ---------------------------------------------------------------------------
// Cyclic specs and patches

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CyclicSpec {
    Parallel { a: ScalarFn, b: ScalarFn, r: ScalarFn, u_range: [f64; 2] },
    Frenet { frame: FrameSpec, a: ScalarFn, b: ScalarFn, c: ScalarFn, r: ScalarFn, u_range: [f64; 2] },
}

impl CyclicSpec {
    pub fn u_range(&self) -> [f64; 2] {
        match self {
            CyclicSpec::Parallel { u_range, .. } | CyclicSpec::Frenet { u_range, .. } => *u_range,
        }
    }
}

struct ParallelSurface {
    a: ScalarFn,
    b: ScalarFn,
    r: ScalarFn,
}

impl Surface for ParallelSurface {
    fn jet(&self, u: f64, v: f64) -> Result<crate::Jet2> {
        let (uu, vv) = (Dual2::var_u(u), Dual2::var_v(v));
        let a = lift(uu, self.a.eval(u)?);
        let b = lift(uu, self.b.eval(u)?);
        let r = lift(uu, self.r.eval(u)?);
        if !(r.v > 0.0) {
            return Err(Error::SpecValidation(format!("radius must be positive, r({u}) = {}", r.v)));
        }
        Ok(crate::Jet2::from_duals([a + r * vv.cos(), b + r * vv.sin(), uu]))
    }
}

struct FrenetSurface {
    frame: CurveFrame,
    a: ScalarFn,
    b: ScalarFn,
    c: ScalarFn,
    r: ScalarFn,
}

impl Surface for FrenetSurface {
    fn jet(&self, u: f64, v: f64) -> Result<crate::Jet2> {
        let (uu, vv) = (Dual2::var_u(u), Dual2::var_v(v));
        let [t, n, bn] = self.frame.frame_duals(uu)?;
        let a = lift(uu, self.a.eval(u)?);
        let b = lift(uu, self.b.eval(u)?);
        let c = lift(uu, self.c.eval(u)?);
        let r = lift(uu, self.r.eval(u)?);
        if !(r.v > 0.0) {
            return Err(Error::SpecValidation(format!("radius must be positive, r({u}) = {}", r.v)));
        }
        let (cv, sv) = (vv.cos(), vv.sin());
        Ok(crate::Jet2::from_duals(std::array::from_fn(|i| {
            a * t[i] + b * n[i] + c * bn[i] + r * (cv * n[i] + sv * bn[i])
        })))
    }
}

fn check_positive(f: &ScalarFn, name: &str, u_range: [f64; 2]) -> Result<()> {
    const CHECKS: usize = 256;
    for k in 0..=CHECKS {
        let u = u_range[0] + (u_range[1] - u_range[0]) * k as f64 / CHECKS as f64;
        let x = f.value(u)?;
        if !(x > 0.0) {
            return Err(Error::SpecValidation(format!("{name}({u}) = {x} must be positive")));
        }
    }
    Ok(())
}

/// Patch of a cyclic spec with analytic jets; `v` runs over `[0, 2pi)`.
pub fn build_cyclic(spec: &CyclicSpec) -> Result<ParametricPatch> {
    let u_range = spec.u_range();
    if !(u_range[1] > u_range[0]) {
        return Err(Error::SpecValidation(format!("empty u range {u_range:?}")));
    }
    match spec {
        CyclicSpec::Parallel { a, b, r, .. } => {
            check_positive(r, "r", u_range)?;
            let s = ParallelSurface { a: a.clone(), b: b.clone(), r: r.clone() };
            Ok(ParametricPatch::new(s, u_range, [0.0, TAU], "cyclic:parallel").periodic_v())
        }
        CyclicSpec::Frenet { frame, a, b, c, r, .. } => {
            check_positive(r, "r", u_range)?;
            check_positive(&frame.kappa, "kappa", u_range)?;
            let frame = frame.build(u_range)?;
            let s = FrenetSurface { frame, a: a.clone(), b: b.clone(), c: c.clone(), r: r.clone() };
            Ok(ParametricPatch::new(s, u_range, [0.0, TAU], "cyclic:frenet").periodic_v())
        }
    }
}

// ---------------------------------------------------------------------------
// Closed-form harmonics

/// Third harmonic `(A3, B3)` of the weighted defect for the parallel
/// foliation with centre `(a, b, u)` and radius `r`.
pub fn parallel_a3b3(a: f64, da: f64, b: f64, db: f64, r: f64, alpha: f64, u: f64) -> (f64, f64) {
    let k = 0.25 * alpha * r.powi(3);
    let a3 = k * (-2.0 * b * da * db - (a - 3.0 * u * da) * db * db + (a - u * da) * da * da);
    let b3 = k * (da * (2.0 * a - 3.0 * u * da) * db + b * (da * da - db * db) + u * db.powi(3));
    (a3, b3)
}

/// Centre coordinates, radius and curve invariants at one `u` for the
/// frenet foliation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrenetPoint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub db: f64,
    pub dc: f64,
    pub r: f64,
    pub kappa: f64,
    pub tau: f64,
}

/// Fourth harmonic `(A4, B4)` of the weighted defect for the frenet
/// foliation.
pub fn frenet_a4b4(p: &FrenetPoint, alpha: f64) -> (f64, f64) {
    let FrenetPoint { a, b, c, db, dc, r, kappa: k, tau: t } = *p;
    let pre = 0.125 * (alpha + 4.0) * r.powi(4) * k;
    let a4 = pre
        * (2.0 * dc * (c * (a * k + db - c * t) + b * b * t)
            - b * (2.0 * a * k * (db - 2.0 * c * t) + a * a * k * k - 4.0 * c * t * db + db * db
                - t * t * (b * b - 3.0 * c * c)
                + r * r * k * k)
            + b * dc * dc);
    let b4 = -pre
        * (2.0 * a * k * (c * (db - c * t) + b * dc + b * b * t)
            + a * a * c * k * k
            + c * (db * db - (b * t + dc) * (3.0 * b * t + dc) + r * r * k * k)
            + 2.0 * b * db * (b * t + dc)
            - 2.0 * c * c * t * db
            + c.powi(3) * t * t);
    (a4, b4)
}

/// Factorized form of `c A4 - b B4`.
pub fn frenet_a4b4_combination(p: &FrenetPoint, alpha: f64) -> f64 {
    let FrenetPoint { a, b, c, db, dc, r, kappa: k, tau: t } = *p;
    0.25 * (alpha + 4.0) * r.powi(4) * k * (b * b + c * c) * (b * t + dc) * (a * k + db - c * t)
}

/// Evaluate the inputs of [`frenet_a4b4`] for a frenet spec at `u`.
pub fn frenet_point(spec: &CyclicSpec, u: f64) -> Result<FrenetPoint> {
    let CyclicSpec::Frenet { frame, a, b, c, r, .. } = spec else {
        return Err(Error::Precondition("frenet_point needs a frenet-mode spec".into()));
    };
    let (bb, cc) = (b.eval(u)?, c.eval(u)?);
    Ok(FrenetPoint {
        a: a.value(u)?,
        b: bb.d(0),
        c: cc.d(0),
        db: bb.d(1),
        dc: cc.d(1),
        r: r.value(u)?,
        kappa: frame.kappa.value(u)?,
        tau: frame.tau.value(u)?,
    })
}

// ---------------------------------------------------------------------------
// The alpha = -2 family with planar centre curve

/// `(a, a', a'', r, r', r'', kappa, kappa')` at one `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neg2State {
    pub a: f64,
    pub da: f64,
    pub dda: f64,
    pub r: f64,
    pub dr: f64,
    pub ddr: f64,
    pub kappa: f64,
    pub dkappa: f64,
}

/// First-harmonic condition of the `alpha = -2` family (cos v coefficient
/// of the weighted defect divided by `r^2`).
pub fn neg2_eq21(s: &Neg2State) -> f64 {
    let Neg2State { a, da, dda, r, dr, ddr, kappa: k, dkappa: dk } = *s;
    a * a * r * (k * (-3.0 * da * da + r * ddr + 3.0 * dr * dr) - r * dr * dk)
        + r.powi(3) * (k * (da * da + r * ddr - dr * dr) - r * dr * dk)
        + a.powi(3) * (r * k * dda + da * (2.0 * k * dr - r * dk))
        + a * r * r * (r * k * dda - da * (6.0 * k * dr + r * dk))
}

/// Constant-term condition (mean of the weighted defect divided by `r^2`).
pub fn neg2_eq22(s: &Neg2State) -> f64 {
    let Neg2State { a, da, dda, r, dr, ddr, kappa: k, .. } = *s;
    a * r * dr * (2.0 * (da * da + dr * dr) + r * r * k * k)
        + a.powi(4) * k * k * da
        + a * a * (r * dda * dr - r * da * ddr + da * dr * dr + r * r * k * k * da + da.powi(3))
        - r * r * (-r * dda * dr + da * (r * ddr + dr * dr) + da.powi(3))
        + a.powi(3) * r * k * k * dr
}

/// `r''`-free combination: `kappa r eq22 + a' eq21 = (a a' + r r') eq23`.
pub fn neg2_eq23(s: &Neg2State) -> f64 {
    let Neg2State { a, da, dda, r, dr, kappa: k, dkappa: dk, .. } = *s;
    a * r * k * (-2.0 * da * da + 2.0 * dr * dr + r * r * k * k)
        + r * r * (k * (r * dda - 2.0 * da * dr) - r * da * dk)
        + a * a * (k * (r * dda + 2.0 * da * dr) - r * da * dk)
        + a.powi(3) * r * k.powi(3)
}

/// Solve the two conditions for `(r'', a'')`; both are affine in them.
pub fn neg2_second_derivatives(s: &Neg2State, u: f64) -> Result<(f64, f64)> {
    let base = Neg2State { dda: 0.0, ddr: 0.0, ..*s };
    let f = |x: &Neg2State| (neg2_eq21(x), neg2_eq23(x));
    let (e0, g0) = f(&base);
    let (er, gr) = f(&Neg2State { ddr: 1.0, ..base });
    let (ea, ga) = f(&Neg2State { dda: 1.0, ..base });
    let (m11, m12, m21, m22) = (er - e0, ea - e0, gr - g0, ga - g0);
    let det = m11 * m22 - m12 * m21;
    let scale = (m11.abs() + m12.abs()) * (m21.abs() + m22.abs());
    if !(det.abs() > 1e-14 * scale) || !det.is_finite() {
        return Err(Error::DegenerateFamily { u, det });
    }
    let ddr = (-e0 * m22 + g0 * m12) / det;
    let dda = (-g0 * m11 + e0 * m21) / det;
    Ok((ddr, dda))
}

/// Result of integrating the `alpha = -2` family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neg2Family {
    pub spec: CyclicSpec,
    pub samples: Vec<(f64, Neg2State)>,
}

impl Neg2Family {
    /// Solution curves as CSV with header `u,a,r,kappa`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["u", "a", "r", "kappa"])?;
        for (u, s) in &self.samples {
            out.serialize((u, s.a, s.r, s.kappa))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Cyclic `(-2)`-stationary surfaces over a planar centre curve (`tau = 0`,
/// centre `a t`): given `kappa(u)` and initial `(a, a', r, r')` at
/// `u_range[0]`, integrate the two second-order conditions for `(a, r)`.
pub fn integrate_neg2_family(
    kappa: &ScalarFn,
    a0: f64,
    da0: f64,
    r0: f64,
    dr0: f64,
    u_range: [f64; 2],
) -> Result<Neg2Family> {
    if !(r0 > 0.0) {
        return Err(Error::SpecValidation(format!("r0 must be positive, got {r0}")));
    }
    if !(u_range[1] > u_range[0]) {
        return Err(Error::SpecValidation(format!("empty u range {u_range:?}")));
    }
    let state = |u: f64, y: &[f64; 4]| -> Result<Neg2State> {
        let k = kappa.eval(u)?;
        if !(k.d(0) > 0.0) {
            return Err(Error::FrameUndefined { u, kappa: k.d(0) });
        }
        if !(y[0] > 1e-9) {
            return Err(Error::FoliationCollapse { u, r: y[0] });
        }
        let mut s = Neg2State { a: y[2], da: y[3], dda: 0.0, r: y[0], dr: y[1], ddr: 0.0, kappa: k.d(0), dkappa: k.d(1) };
        let (ddr, dda) = neg2_second_derivatives(&s, u)?;
        s.ddr = ddr;
        s.dda = dda;
        Ok(s)
    };
    let rhs = |u: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        let s = state(u, y)?;
        Ok([s.dr, s.ddr, s.da, s.dda])
    };
    let (us, ys) = ode::integrate_substeps(rhs, u_range[0], [r0, dr0, a0, da0], u_range[1], NODE_SPACING, SUBSTEPS, |u, y| {
        if y[0] > 1e-9 {
            Ok(())
        } else {
            Err(Error::FoliationCollapse { u, r: y[0] })
        }
    })?;
    let samples = us.iter().zip(&ys).map(|(&u, y)| Ok((u, state(u, y)?))).collect::<Result<Vec<_>>>()?;
    let r_ch = samples.iter().map(|(_, s)| [s.r, s.dr, s.ddr]).collect();
    let a_ch = samples.iter().map(|(_, s)| [s.a, s.da, s.dda]).collect();
    let table = |ch| HermiteTable::new(us.clone(), vec![ch]).map(ScalarFn::Table);
    let spec = CyclicSpec::Frenet {
        frame: FrameSpec { kappa: kappa.clone(), tau: ScalarFn::Const(0.0), init: FrameInit::default() },
        a: table(a_ch)?,
        b: ScalarFn::Const(0.0),
        c: ScalarFn::Const(0.0),
        r: table(r_ch)?,
        u_range,
    };
    Ok(Neg2Family { spec, samples })
}

/// The explicit non-spherical `(-2)`-stationary surface with `r = u`,
/// `kappa = 1/u`:
/// `Psi(u, v) = (-u sin(log u) cos v, u cos(log u) cos v, u sin v)`.
pub fn log_spiral_example(u_range: [f64; 2]) -> Result<ParametricPatch> {
    if !(u_range[0] > 0.0 && u_range[1] > u_range[0]) {
        return Err(Error::SpecValidation(format!("log-spiral example needs 0 < u0 < u1, got {u_range:?}")));
    }
    Ok(ParametricPatch::from_fn(
        |u, v| {
            let th = u.ln();
            Ok([-(u * th.sin() * v.cos()), u * th.cos() * v.cos(), u * v.sin()])
        },
        u_range,
        [0.0, TAU],
        "log_spiral_neg2",
    )
    .periodic_v())
}
