//! Second-order jets of parametric patches and the differential geometry
//! derived from them.
//!
//! Mean curvature is the trace of the shape operator `S = -dN` with
//! `N = (Pu x Pv) / |Pu x Pv|`, i.e. the *sum* of the principal curvatures.
//! With this convention a unit sphere with outward normal has `H = -2`, and
//! a cylinder whose normal is the principal normal of its directrix has
//! `H = kappa`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::jet::Dual2;

pub type Vec3 = Vector3<f64>;

/// Default margin by which sampling domains are shrunk away from chart
/// boundaries (sphere poles and the like).
pub const DOMAIN_MARGIN: f64 = 1e-3;

/// Position and first/second partials of a patch at one parameter point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub p: Vec3,
    pub pu: Vec3,
    pub pv: Vec3,
    pub puu: Vec3,
    pub puv: Vec3,
    pub pvv: Vec3,
}

impl Jet2 {
    pub fn from_duals(x: [Dual2; 3]) -> Self {
        let pick = |f: fn(&Dual2) -> f64| Vec3::new(f(&x[0]), f(&x[1]), f(&x[2]));
        Self {
            p: pick(|d| d.v),
            pu: pick(|d| d.du),
            pv: pick(|d| d.dv),
            puu: pick(|d| d.duu),
            puv: pick(|d| d.duv),
            pvv: pick(|d| d.dvv),
        }
    }

    /// Apply the affine map `x -> A x + b`.
    pub fn affine(&self, a: &Matrix3<f64>, b: &Vec3) -> Self {
        Self {
            p: a * self.p + b,
            pu: a * self.pu,
            pv: a * self.pv,
            puu: a * self.puu,
            puv: a * self.puv,
            pvv: a * self.pvv,
        }
    }

    /// Exchange the roles of the two parameters.
    pub fn swapped(&self) -> Self {
        Self {
            p: self.p,
            pu: self.pv,
            pv: self.pu,
            puu: self.pvv,
            puv: self.puv,
            pvv: self.puu,
        }
    }

    /// Largest componentwise difference over all six vectors.
    pub fn max_abs_diff(&self, o: &Jet2) -> f64 {
        [
            self.p - o.p,
            self.pu - o.pu,
            self.pv - o.pv,
            self.puu - o.puu,
            self.puv - o.puv,
            self.pvv - o.pvv,
        ]
        .iter()
        .map(|d| d.amax())
        .fold(0.0, f64::max)
    }
}

/// First and second fundamental forms, unit normal and mean curvature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FundamentalData {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub l: f64,
    pub m: f64,
    /// Second fundamental form `<Pvv, N>` (named to keep `n` for the normal).
    pub nff: f64,
    pub normal: Vec3,
    /// Trace mean curvature `k1 + k2`.
    pub h: f64,
    /// `EG - F^2`.
    pub w: f64,
}

/// Fundamental forms of a jet. Fails when `EG - F^2` vanishes.
pub fn fundamental_data(jet: &Jet2) -> Result<FundamentalData> {
    let e = jet.pu.dot(&jet.pu);
    let f = jet.pu.dot(&jet.pv);
    let g = jet.pv.dot(&jet.pv);
    let w = e * g - f * f;
    if !(w > 1e-14 * e * g) || !w.is_finite() {
        return Err(Error::DegenerateParametrization { u: f64::NAN, v: f64::NAN, w });
    }
    let cross = jet.pu.cross(&jet.pv);
    let normal = cross / cross.norm();
    let l = jet.puu.dot(&normal);
    let m = jet.puv.dot(&normal);
    let nff = jet.pvv.dot(&normal);
    let h = (g * l - 2.0 * f * m + e * nff) / w;
    Ok(FundamentalData { e, f, g, l, m, nff, normal, h, w })
}

/// Anything that can produce an exact second-order jet.
pub trait Surface: Send + Sync {
    fn jet(&self, u: f64, v: f64) -> Result<Jet2>;
}

/// A surface given by a formula over [`Dual2`] numbers.
pub struct FnSurface<F>(pub F);

impl<F> Surface for FnSurface<F>
where
    F: Fn(Dual2, Dual2) -> Result<[Dual2; 3]> + Send + Sync,
{
    fn jet(&self, u: f64, v: f64) -> Result<Jet2> {
        (self.0)(Dual2::var_u(u), Dual2::var_v(v)).map(Jet2::from_duals)
    }
}

/// How the `u` ends of a patch close up when it is meshed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UClosure {
    /// Boundary curves; the surface is open in `u`.
    Open,
    /// `u` is periodic (tori).
    Periodic,
    /// Each `u` end collapses to a single point (sphere poles).
    Poles,
}

/// A map `(u, v) -> R^3` over a parameter rectangle.
#[derive(Clone)]
pub struct ParametricPatch {
    surface: Arc<dyn Surface>,
    pub u_range: [f64; 2],
    pub v_range: [f64; 2],
    pub v_periodic: bool,
    pub u_closure: UClosure,
    pub label: String,
}

impl fmt::Debug for ParametricPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricPatch")
            .field("label", &self.label)
            .field("u_range", &self.u_range)
            .field("v_range", &self.v_range)
            .field("v_periodic", &self.v_periodic)
            .field("u_closure", &self.u_closure)
            .finish()
    }
}

impl ParametricPatch {
    pub fn new(
        surface: impl Surface + 'static,
        u_range: [f64; 2],
        v_range: [f64; 2],
        label: impl Into<String>,
    ) -> Self {
        Self {
            surface: Arc::new(surface),
            u_range,
            v_range,
            v_periodic: false,
            u_closure: UClosure::Open,
            label: label.into(),
        }
    }

    /// Patch from a closed-form parametrization written over [`Dual2`].
    pub fn from_fn<F>(f: F, u_range: [f64; 2], v_range: [f64; 2], label: impl Into<String>) -> Self
    where
        F: Fn(Dual2, Dual2) -> Result<[Dual2; 3]> + Send + Sync + 'static,
    {
        Self::new(FnSurface(f), u_range, v_range, label)
    }

    pub fn periodic_v(mut self) -> Self {
        self.v_periodic = true;
        self
    }

    pub fn with_u_closure(mut self, c: UClosure) -> Self {
        self.u_closure = c;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn surface(&self) -> &Arc<dyn Surface> {
        &self.surface
    }

    fn u_period(&self) -> Option<f64> {
        (self.u_closure == UClosure::Periodic).then(|| self.u_range[1] - self.u_range[0])
    }

    fn v_period(&self) -> Option<f64> {
        self.v_periodic.then(|| self.v_range[1] - self.v_range[0])
    }

    /// Map a parameter point into the domain, wrapping periodic directions.
    fn locate(&self, u: f64, v: f64) -> Result<(f64, f64)> {
        let wrap = |x: f64, r: [f64; 2], period: Option<f64>| -> Option<f64> {
            let tol = 1e-12 * (1.0 + r[0].abs().max(r[1].abs()));
            match period {
                Some(p) if x.is_finite() => Some(r[0] + (x - r[0]).rem_euclid(p)),
                _ if x >= r[0] - tol && x <= r[1] + tol => Some(x),
                _ => None,
            }
        };
        match (wrap(u, self.u_range, self.u_period()), wrap(v, self.v_range, self.v_period())) {
            (Some(u), Some(v)) => Ok((u, v)),
            _ => Err(Error::ParameterOutOfRange { u, v }),
        }
    }

    /// Exact jet at `(u, v)`.
    pub fn eval_jet2(&self, u: f64, v: f64) -> Result<Jet2> {
        let (uu, vv) = self.locate(u, v)?;
        self.surface.jet(uu, vv).map_err(|e| e.at(u, v))
    }

    pub fn position(&self, u: f64, v: f64) -> Result<Vec3> {
        Ok(self.eval_jet2(u, v)?.p)
    }

    pub fn fundamental(&self, u: f64, v: f64) -> Result<FundamentalData> {
        let jet = self.eval_jet2(u, v)?;
        fundamental_data(&jet).map_err(|e| e.at(u, v))
    }

    /// Central-difference jet with step `h`; an independent check of the
    /// analytic jets, accurate to `O(h^2)`.
    pub fn fd_jet2(&self, u: f64, v: f64, h: f64) -> Result<Jet2> {
        let guard = 2.0 * h;
        for (x, r, p) in [(u, self.u_range, self.u_period()), (v, self.v_range, self.v_period())] {
            if p.is_none() && (x - guard < r[0] || x + guard > r[1]) {
                return Err(Error::ParameterOutOfRange { u, v });
            }
        }
        let p = |du: f64, dv: f64| self.position(u + du, v + dv);
        let c = p(0.0, 0.0)?;
        let (up, um, vp, vm) = (p(h, 0.0)?, p(-h, 0.0)?, p(0.0, h)?, p(0.0, -h)?);
        let (pp, pm, mp, mm) = (p(h, h)?, p(h, -h)?, p(-h, h)?, p(-h, -h)?);
        Ok(Jet2 {
            p: c,
            pu: (up - um) / (2.0 * h),
            pv: (vp - vm) / (2.0 * h),
            puu: (up - 2.0 * c + um) / (h * h),
            pvv: (vp - 2.0 * c + vm) / (h * h),
            puv: (pp - pm - mp + mm) / (4.0 * h * h),
        })
    }

    /// Interior point of the domain at fractions `(s, t)` in `[0, 1]`,
    /// kept `margin` away from non-periodic boundaries.
    pub fn interior_point(&self, s: f64, t: f64, margin: f64) -> (f64, f64) {
        let lerp = |r: [f64; 2], x: f64, shrink: bool| {
            let m = if shrink { margin } else { 0.0 };
            r[0] + m + x * (r[1] - r[0] - 2.0 * m)
        };
        (
            lerp(self.u_range, s, self.u_closure != UClosure::Periodic),
            lerp(self.v_range, t, !self.v_periodic),
        )
    }

    /// The image of this patch under `x -> A x + b`.
    pub fn transformed(&self, a: Matrix3<f64>, b: Vec3, label: impl Into<String>) -> Self {
        let inner = self.clone();
        Self {
            surface: Arc::new(Affine { inner, a, b }),
            label: label.into(),
            ..self.clone()
        }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        self.transformed(Matrix3::identity() * lambda, Vec3::zeros(), format!("{}*{lambda}", self.label))
    }

    pub fn translated(&self, t: Vec3) -> Self {
        self.transformed(
            Matrix3::identity(),
            t,
            format!("{}+({},{},{})", self.label, t.x, t.y, t.z),
        )
    }

    pub fn rotated(&self, r: Matrix3<f64>) -> Self {
        self.transformed(r, Vec3::zeros(), format!("R*{}", self.label))
    }

    /// Same surface with `u` and `v` exchanged (reverses orientation).
    pub fn swapped(&self) -> Self {
        let inner = self.clone();
        Self {
            surface: Arc::new(Swapped { inner }),
            u_range: self.v_range,
            v_range: self.u_range,
            v_periodic: self.u_closure == UClosure::Periodic,
            u_closure: if self.v_periodic { UClosure::Periodic } else { UClosure::Open },
            label: format!("swap({})", self.label),
        }
    }
}

struct Affine {
    inner: ParametricPatch,
    a: Matrix3<f64>,
    b: Vec3,
}

impl Surface for Affine {
    fn jet(&self, u: f64, v: f64) -> Result<Jet2> {
        Ok(self.inner.eval_jet2(u, v)?.affine(&self.a, &self.b))
    }
}

struct Swapped {
    inner: ParametricPatch,
}

impl Surface for Swapped {
    fn jet(&self, u: f64, v: f64) -> Result<Jet2> {
        Ok(self.inner.eval_jet2(v, u)?.swapped())
    }
}

impl Error {
    /// Attach a parameter location to errors raised below the patch level.
    pub fn at(self, u: f64, v: f64) -> Self {
        match self {
            Error::DegenerateParametrization { w, .. } => Error::DegenerateParametrization { u, v, w },
            Error::SingularPoint { norm, u: uu, v: vv } if uu.is_nan() || vv.is_nan() => {
                Error::SingularPoint { u, v, norm }
            }
            Error::OriginOnSurface { u: uu, .. } if uu.is_nan() => Error::OriginOnSurface { u, v },
            other => other,
        }
    }
}
