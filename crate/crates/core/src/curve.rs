//! Space curves with derivatives up to order three.

use nalgebra::{Matrix3, Rotation3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::HermiteTable;
use crate::jet::{Scalar, Taylor3};
use crate::kernel::Vec3;
use crate::ode;

/// Position and first three derivatives of a curve at one parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveJet {
    pub p: Vec3,
    pub d1: Vec3,
    pub d2: Vec3,
    pub d3: Vec3,
}

impl CurveJet {
    fn from_taylor(x: [Taylor3; 3]) -> Self {
        let pick = |k: usize| Vec3::new(x[0].d(k), x[1].d(k), x[2].d(k));
        Self { p: pick(0), d1: pick(1), d2: pick(2), d3: pick(3) }
    }
}

/// A curve in R^3. Analytic variants are defined for every parameter;
/// tables only on their node range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CurveSpec {
    /// `point + s * direction`.
    Line { point: Vec3, direction: Vec3 },
    /// Circle in the plane `z = center.z`, counterclockwise, arc-length.
    Circle { center: Vec3, radius: f64 },
    /// `rotation * (cos s, sin s, 0)`: a great circle of the unit sphere.
    GreatCircle { rotation: Matrix3<f64> },
    /// `(rho cos s, rho sin s, h)`.
    Latitude { rho: f64, h: f64 },
    /// `offset + s * linear + sum_k cos_k cos(k s) + sin_k sin(k s)`, `k >= 1`.
    TrigPoly { offset: Vec3, linear: Vec3, cos: Vec<Vec3>, sin: Vec<Vec3> },
    /// A trigonometric polynomial projected radially onto the unit sphere.
    Spherical { inner: Box<CurveSpec> },
    /// Three quintic Hermite channels (x, y, z).
    Table(HermiteTable),
}

impl CurveSpec {
    pub fn great_circle_tilted(angle: f64) -> Self {
        CurveSpec::GreatCircle { rotation: *Rotation3::from_axis_angle(&Vec3::x_axis(), angle).matrix() }
    }

    pub fn equator() -> Self {
        CurveSpec::GreatCircle { rotation: Matrix3::identity() }
    }

    pub fn jet(&self, s: f64) -> Result<CurveJet> {
        if let CurveSpec::Table(t) = self {
            let ch = t.eval_all(s)?;
            return Ok(CurveJet::from_taylor([ch[0], ch[1], ch[2]]));
        }
        let x = self.eval_generic(Taylor3::var(s));
        let jet = CurveJet::from_taylor(x);
        if [jet.p, jet.d1, jet.d2, jet.d3].iter().all(|v| v.iter().all(|c| c.is_finite())) {
            Ok(jet)
        } else {
            Err(Error::Precondition(format!("curve not finite at s = {s}")))
        }
    }

    pub fn position(&self, s: f64) -> Result<Vec3> {
        self.jet(s).map(|j| j.p)
    }

    /// Domain of a tabulated curve; analytic curves return `None`.
    pub fn domain(&self) -> Option<[f64; 2]> {
        match self {
            CurveSpec::Table(t) => Some(t.domain()),
            _ => None,
        }
    }

    fn eval_generic<T: Scalar>(&self, s: T) -> [T; 3] {
        let c = |x: f64| T::cst(x);
        match self {
            CurveSpec::Line { point, direction } => {
                std::array::from_fn(|i| s * direction[i] + point[i])
            }
            CurveSpec::Circle { center, radius } => {
                let a = s / *radius;
                [a.cos() * *radius + center.x, a.sin() * *radius + center.y, c(center.z)]
            }
            CurveSpec::GreatCircle { rotation } => {
                let (cs, sn) = (s.cos(), s.sin());
                std::array::from_fn(|i| cs * rotation[(i, 0)] + sn * rotation[(i, 1)])
            }
            CurveSpec::Latitude { rho, h } => [s.cos() * *rho, s.sin() * *rho, c(*h)],
            CurveSpec::TrigPoly { offset, linear, cos, sin } => {
                let mut out: [T; 3] = std::array::from_fn(|i| s * linear[i] + offset[i]);
                for (k, (ck, sk)) in cos.iter().zip(sin.iter()).enumerate() {
                    let ks = s * (k + 1) as f64;
                    let (cc, ss) = (ks.cos(), ks.sin());
                    for i in 0..3 {
                        out[i] = out[i] + cc * ck[i] + ss * sk[i];
                    }
                }
                out
            }
            CurveSpec::Spherical { inner } => {
                let x = inner.eval_generic(s);
                let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                x.map(|xi| xi / norm)
            }
            CurveSpec::Table(_) => unreachable!("tables are evaluated directly"),
        }
    }
}

/// Sampled curve with unit tangent, normal `n = w x t` for a planar curve
/// with plane normal `w`, and signed curvature `<gamma'', n>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarSample {
    pub s: f64,
    pub position: Vec3,
    pub normal: Vec3,
    pub kappa: f64,
}

/// Integrate a planar arc-length curve in the `xy`-plane whose signed
/// curvature may depend on the current point and normal.
///
/// `kappa(s, position, normal)`; the normal is `e3 x tangent`. RK4 steps are
/// at most `max_step`, with table nodes every `substeps` steps. Returns a
/// three-channel table (positions with exact first/second derivatives at
/// the nodes).
pub fn integrate_planar<K>(
    kappa: K,
    start: Vec3,
    heading: f64,
    length: f64,
    max_step: f64,
    substeps: usize,
    min_radius: Option<f64>,
) -> Result<CurveSpec>
where
    K: Fn(f64, Vec3, Vec3) -> Result<f64>,
{
    let pos = |y: &[f64; 3]| Vec3::new(y[0], y[1], start.z);
    let nrm = |th: f64| Vec3::new(-th.sin(), th.cos(), 0.0);
    let rhs = |s: f64, y: &[f64; 3]| -> Result<[f64; 3]> {
        let k = kappa(s, pos(y), nrm(y[2]))?;
        Ok([y[2].cos(), y[2].sin(), k])
    };
    let (ss, ys) = ode::integrate_substeps(rhs, 0.0, [start.x, start.y, heading], length, max_step * substeps as f64, substeps, |s, y| {
        match min_radius {
            Some(r) if pos(y).norm() < r => Err(Error::OriginCollision { s }),
            _ => Ok(()),
        }
    })?;
    let mut chans = (0..3).map(|_| Vec::with_capacity(ss.len())).collect::<Vec<_>>();
    for (s, y) in ss.iter().zip(&ys) {
        let th = y[2];
        let k = kappa(*s, pos(y), nrm(th))?;
        let (c, sn) = (th.cos(), th.sin());
        chans[0].push([y[0], c, -k * sn]);
        chans[1].push([y[1], sn, k * c]);
        chans[2].push([start.z, 0.0, 0.0]);
    }
    Ok(CurveSpec::Table(HermiteTable::new(ss, chans)?))
}

/// Planar critical curve of the one-dimensional weighted length
/// `∫ |gamma|^alpha ds`, taken as solutions of `kappa = alpha <n, gamma> / |gamma|^2`.
///
/// Starts at `r0 (cos theta0, sin theta0, 0)` with tangent at angle
/// `heading` from the outward radial direction (`pi/2` is counterclockwise
/// transverse, `0` radial).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerCurve {
    pub alpha: f64,
    pub r0: f64,
    pub theta0: f64,
    pub heading: f64,
    pub length: f64,
}

impl EulerCurve {
    pub const MAX_STEP: f64 = 1e-3;
    pub const MIN_RADIUS: f64 = 1e-6;

    pub fn curvature(alpha: f64, p: Vec3, n: Vec3) -> f64 {
        alpha * n.dot(&p) / p.norm_squared()
    }

    pub fn integrate(&self) -> Result<CurveSpec> {
        if !(self.r0 > 0.0) {
            return Err(Error::SpecValidation(format!("euler curve needs r0 > 0, got {}", self.r0)));
        }
        let start = Vec3::new(self.theta0.cos(), self.theta0.sin(), 0.0) * self.r0;
        let alpha = self.alpha;
        integrate_planar(
            |_, p, n| Ok(Self::curvature(alpha, p, n)),
            start,
            self.theta0 + self.heading,
            self.length,
            Self::MAX_STEP,
            10,
            Some(Self::MIN_RADIUS),
        )
    }
}

/// Sample a planar curve with its signed curvature relative to `w x t`.
pub fn planar_samples(curve: &CurveSpec, w: Vec3, s_range: [f64; 2], n: usize) -> Result<Vec<PlanarSample>> {
    (0..n)
        .map(|i| {
            let s = s_range[0] + (s_range[1] - s_range[0]) * i as f64 / (n - 1) as f64;
            let j = curve.jet(s)?;
            let t = j.d1.normalize();
            let normal = w.cross(&t);
            Ok(PlanarSample { s, position: j.p, normal, kappa: j.d2.dot(&normal) / j.d1.norm_squared() })
        })
        .collect()
}
