//! Euler-Lagrange residual `H - alpha <N, p> / |p|^2`, the weighted area
//! `E_alpha`, and Fourier decompositions of the stationarity defect along
//! periodic parameter lines.

use std::f64::consts::TAU;
use std::io::Write;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{fundamental_data, Jet2, ParametricPatch, UClosure, DOMAIN_MARGIN};

/// Points closer than this to the origin count as lying on it.
pub const ORIGIN_TOL: f64 = 1e-14;

/// Residual tolerance for patches with closed-form jets.
pub const ANALYTIC_TOL: f64 = 1e-8;
/// Residual tolerance for ODE-generated families.
pub const ODE_TOL: f64 = 1e-6;

/// One evaluated sample of the Euler-Lagrange equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub u: f64,
    pub v: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub alpha: f64,
    pub sample_count: usize,
    pub sup_abs: f64,
    pub rms: f64,
    pub rows: Vec<ResidualRow>,
}

impl ResidualReport {
    pub fn from_rows(alpha: f64, rows: Vec<ResidualRow>) -> Self {
        let sup_abs = rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
        let ss: f64 = rows.iter().map(|r| r.residual * r.residual).sum();
        let rms = if rows.is_empty() { 0.0 } else { (ss / rows.len() as f64).sqrt() };
        Self { alpha, sample_count: rows.len(), sup_abs, rms, rows }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn summary(&self) -> String {
        format!("sup|residual| = {:.3e} over {} samples (alpha = {})", self.sup_abs, self.sample_count, self.alpha)
    }
}

/// Evaluate the Euler-Lagrange equation at one point.
pub fn residual_row(patch: &ParametricPatch, alpha: f64, u: f64, v: f64) -> Result<ResidualRow> {
    let jet = patch.eval_jet2(u, v)?;
    let p = jet.p;
    let p2 = p.norm_squared();
    if p2.sqrt() <= ORIGIN_TOL {
        return Err(Error::OriginOnSurface { u, v });
    }
    let fd = fundamental_data(&jet).map_err(|e| e.at(u, v))?;
    let rhs = alpha * fd.normal.dot(&p) / p2;
    Ok(ResidualRow { u, v, x: p.x, y: p.y, z: p.z, h: fd.h, rhs, residual: fd.h - rhs })
}

/// `H(p) - alpha <N(p), p> / |p|^2` at `(u, v)`.
pub fn residual(patch: &ParametricPatch, alpha: f64, u: f64, v: f64) -> Result<f64> {
    residual_row(patch, alpha, u, v).map(|r| r.residual)
}

/// Residual multiplied by `W^{3/2} |p|^2`, written without any division:
/// `|p|^2 (G (Pu,Pv,Puu) - 2F (Pu,Pv,Puv) + E (Pu,Pv,Pvv)) - alpha (Pu,Pv,p) W`.
pub fn weighted_defect(jet: &Jet2, alpha: f64) -> f64 {
    let e = jet.pu.dot(&jet.pu);
    let f = jet.pu.dot(&jet.pv);
    let g = jet.pv.dot(&jet.pv);
    let w = e * g - f * f;
    let c = jet.pu.cross(&jet.pv);
    let curv = g * c.dot(&jet.puu) - 2.0 * f * c.dot(&jet.puv) + e * c.dot(&jet.pvv);
    jet.p.norm_squared() * curv - alpha * c.dot(&jet.p) * w
}

/// Sum of the magnitudes of the terms of [`weighted_defect`]; the defect
/// cannot be resolved below roughly `eps` times this.
fn defect_term_scale(jet: &Jet2, alpha: f64) -> f64 {
    let e = jet.pu.dot(&jet.pu);
    let f = jet.pu.dot(&jet.pv);
    let g = jet.pv.dot(&jet.pv);
    let c = jet.pu.cross(&jet.pv);
    let curv = (g * c.dot(&jet.puu)).abs() + (2.0 * f * c.dot(&jet.puv)).abs() + (e * c.dot(&jet.pvv)).abs();
    jet.p.norm_squared() * curv + (alpha * c.dot(&jet.p) * (e * g - f * f)).abs()
}

/// Uniform sample positions along one parameter direction.
///
/// Periodic directions take `n` points `x0 + k L / n`; bounded ones take `n`
/// points spanning the range shrunk by `margin` at both ends.
pub fn axis_samples(range: [f64; 2], n: usize, periodic: bool, margin: f64) -> Vec<f64> {
    if periodic {
        let l = range[1] - range[0];
        (0..n).map(|k| range[0] + l * k as f64 / n as f64).collect()
    } else {
        let (a, b) = (range[0] + margin, range[1] - margin);
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }
}

/// Residual over an `nu x nv` interior grid, rows in u-major order.
pub fn residual_grid(patch: &ParametricPatch, alpha: f64, nu: usize, nv: usize) -> Result<ResidualReport> {
    residual_grid_with_margin(patch, alpha, nu, nv, DOMAIN_MARGIN)
}

pub fn residual_grid_with_margin(
    patch: &ParametricPatch,
    alpha: f64,
    nu: usize,
    nv: usize,
    margin: f64,
) -> Result<ResidualReport> {
    if nu < 2 || nv < 2 {
        return Err(Error::Precondition(format!("grid must be at least 2x2, got {nu}x{nv}")));
    }
    let us = axis_samples(patch.u_range, nu, patch.u_closure == UClosure::Periodic, margin);
    let vs = axis_samples(patch.v_range, nv, patch.v_periodic, margin);
    let points: Vec<(f64, f64)> = us.iter().flat_map(|&u| vs.iter().map(move |&v| (u, v))).collect();
    let rows = points
        .par_iter()
        .map(|&(u, v)| residual_row(patch, alpha, u, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_rows(alpha, rows))
}

fn gauss_legendre(n: usize) -> Result<GaussLegendre> {
    NonZeroUsize::new(n)
        .map(GaussLegendre::new)
        .ok_or_else(|| Error::Precondition("quadrature needs at least one node".into()))
}

/// Nodes and weights for one direction: Gauss-Legendre on bounded ranges,
/// the trapezoid rule on periodic ones.
pub(crate) fn rule(range: [f64; 2], n: usize, periodic: bool) -> Result<Vec<(f64, f64)>> {
    let l = range[1] - range[0];
    if periodic {
        return Ok((0..n).map(|k| (range[0] + l * k as f64 / n as f64, l / n as f64)).collect());
    }
    let gl = gauss_legendre(n)?;
    Ok(gl
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (range[0] + 0.5 * l * (x + 1.0), 0.5 * l * w))
        .collect())
}

/// Quadrature of `∫∫ |p|^alpha sqrt(EG - F^2) du dv` over the patch.
pub fn energy(patch: &ParametricPatch, alpha: f64, nu: usize, nv: usize) -> Result<f64> {
    let ru = rule(patch.u_range, nu, patch.u_closure == UClosure::Periodic)?;
    let rv = rule(patch.v_range, nv, patch.v_periodic)?;
    let per_u = ru
        .par_iter()
        .map(|&(u, wu)| {
            let mut acc = 0.0;
            for &(v, wv) in &rv {
                let jet = patch.eval_jet2(u, v)?;
                let area = jet.pu.cross(&jet.pv).norm();
                let f = jet.p.norm().powf(alpha) * area;
                if !f.is_finite() {
                    return Err(Error::SingularIntegrand { u, v });
                }
                acc += wv * f;
            }
            Ok(wu * acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_u.iter().sum())
}

/// Cosine/sine coefficients of the weighted defect along one `v`-circle.
///
/// `a[n]` multiplies `cos(n v)` and `b[n]` multiplies `sin(n v)`;
/// `b[0]` is always zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierCoeffs {
    pub u: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `max_v |D(u, v)|` over the samples.
    pub max_abs_defect: f64,
    /// Largest harmonic magnitude above `n_max`.
    pub tail: f64,
}

impl FourierCoeffs {
    pub fn max_abs(&self) -> f64 {
        self.a.iter().chain(&self.b).map(|x| x.abs()).fold(0.0, f64::max)
    }
}

/// Relative size of harmonics above `n_max` that counts as a band-limit
/// violation.
pub const BAND_LIMIT_TOL: f64 = 1e-8;
/// Absolute floor of the band-limit guard, relative to the size of the
/// individual terms of the defect (matters when the defect itself is zero).
pub const ROUNDING_FLOOR: f64 = 1e-12;

/// Harmonics of `D(u, v) = residual * W^{3/2} * |p|^2` in `v` up to `n_max`.
pub fn fourier_defect(patch: &ParametricPatch, alpha: f64, u: f64, n_max: usize, nv: usize) -> Result<FourierCoeffs> {
    if !patch.v_periodic {
        return Err(Error::Precondition("fourier_defect needs a patch periodic in v".into()));
    }
    if !nv.is_power_of_two() || nv < 4 * n_max.max(1) {
        return Err(Error::Precondition(format!("nv = {nv} must be a power of two and at least 4 n_max")));
    }
    let [v0, v1] = patch.v_range;
    let omega = TAU / (v1 - v0);
    let vs: Vec<f64> = (0..nv).map(|k| v0 + (v1 - v0) * k as f64 / nv as f64).collect();
    let (d, scales): (Vec<f64>, Vec<f64>) = vs
        .iter()
        .map(|&v| patch.eval_jet2(u, v).map(|j| (weighted_defect(&j, alpha), defect_term_scale(&j, alpha))))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let harmonic = |n: usize| -> (f64, f64) {
        let scale = if n == 0 || 2 * n == nv { 1.0 } else { 2.0 } / nv as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for (&v, &dv) in vs.iter().zip(&d) {
            let (s, c) = (n as f64 * omega * v).sin_cos();
            a += dv * c;
            b += dv * s;
        }
        (a * scale, if n == 0 { 0.0 } else { b * scale })
    };
    let (a, b): (Vec<f64>, Vec<f64>) = (0..=n_max).map(harmonic).unzip();
    let tail = (n_max + 1..=nv / 2)
        .map(|n| {
            let (x, y) = harmonic(n);
            x.hypot(y)
        })
        .fold(0.0, f64::max);
    let max_abs_defect = d.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let rounding = ROUNDING_FLOOR * scales.iter().fold(0.0, |m: f64, &x| m.max(x));
    if tail > BAND_LIMIT_TOL * max_abs_defect + rounding {
        let n = (n_max + 1..=nv / 2)
            .max_by(|&i, &j| {
                let m = |n| {
                    let (x, y): (f64, f64) = harmonic(n);
                    x.hypot(y)
                };
                m(i).total_cmp(&m(j))
            })
            .unwrap_or(n_max + 1);
        return Err(Error::BandLimitViolation { u, n, magnitude: tail });
    }
    Ok(FourierCoeffs { u, a, b, max_abs_defect, tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{Dual2, Scalar};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sphere(r: f64) -> ParametricPatch {
        ParametricPatch::from_fn(
            move |u, v| Ok([u.cos() * v.cos() * r, u.cos() * v.sin() * r, u.sin() * r]),
            [-PI / 2.0, PI / 2.0],
            [0.0, TAU],
            "sphere",
        )
        .periodic_v()
        .with_u_closure(UClosure::Poles)
    }

    #[test]
    fn sphere_centered_at_origin_is_critical_for_minus_two() {
        let rep = residual_grid(&sphere(1.0), -2.0, 16, 16).unwrap();
        assert!(rep.sup_abs <= 1e-12, "{}", rep.sup_abs);
        assert_eq!(rep.sample_count, 256);
        // u-major ordering
        assert_eq!(rep.rows[0].u, rep.rows[15].u);
    }

    #[test]
    fn cylinder_residual_value() {
        // Unit circle centred at (2,0), normal pointing inward at (3,0,0).
        let cyl = ParametricPatch::from_fn(
            |s, t| Ok([s.cos() + 2.0, s.sin(), -t]),
            [-PI, PI],
            [-1.0, 1.0],
            "cyl",
        );
        let row = residual_row(&cyl, -2.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(row.h, 1.0, epsilon = 1e-14);
        assert_relative_eq!(row.residual, 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn origin_on_surface_is_reported() {
        let plane = ParametricPatch::from_fn(|u, v| Ok([u, v, Dual2::cst(0.0)]), [-1.0, 1.0], [-1.0, 1.0], "p");
        assert_eq!(residual(&plane, 1.0, 0.0, 0.0), Err(Error::OriginOnSurface { u: 0.0, v: 0.0 }));
    }

    #[test]
    fn report_statistics() {
        let rows = [3.0, -4.0]
            .iter()
            .map(|&r| ResidualRow { u: 0.0, v: 0.0, x: 0.0, y: 0.0, z: 0.0, h: 0.0, rhs: 0.0, residual: r })
            .collect();
        let rep = ResidualReport::from_rows(1.0, rows);
        assert_eq!(rep.sup_abs, 4.0);
        assert_relative_eq!(rep.rms, (12.5f64).sqrt());
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("u,v,x,y,z,H,rhs,residual\n"), "{text}");
    }

    #[test]
    fn weighted_defect_matches_residual() {
        let s = sphere(1.3).translated(crate::Vec3::new(0.2, -0.1, 0.4));
        let (u, v) = (0.4, 1.1);
        let jet = s.eval_jet2(u, v).unwrap();
        let fd = fundamental_data(&jet).unwrap();
        let r = residual(&s, 1.5, u, v).unwrap();
        assert_relative_eq!(
            weighted_defect(&jet, 1.5),
            r * fd.w.powf(1.5) * jet.p.norm_squared(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn sphere_energies() {
        assert_relative_eq!(energy(&sphere(1.0), 0.0, 64, 64).unwrap(), 4.0 * PI, epsilon = 1e-6);
        assert_relative_eq!(energy(&sphere(2.0), 1.0, 64, 64).unwrap(), 32.0 * PI, epsilon = 1e-5);
        assert_relative_eq!(energy(&sphere(2.0), -2.0, 64, 64).unwrap(), 4.0 * PI, epsilon = 1e-6);
    }

    #[test]
    fn fourier_preconditions() {
        let plane = ParametricPatch::from_fn(|u, v| Ok([u, v, Dual2::cst(1.0)]), [-1.0, 1.0], [-1.0, 1.0], "p");
        assert!(matches!(fourier_defect(&plane, 1.0, 0.0, 3, 16), Err(Error::Precondition(_))));
        assert!(matches!(fourier_defect(&sphere(1.0), 1.0, 0.0, 3, 12), Err(Error::Precondition(_))));
        assert!(matches!(fourier_defect(&sphere(1.0), 1.0, 0.0, 8, 16), Err(Error::Precondition(_))));
    }

    #[test]
    fn band_limit_violation_detected() {
        // Off-axis cone with v reparametrized by v + 0.3 sin v: not band-limited.
        let wobbly = ParametricPatch::from_fn(
            |u, v| {
                let w = v + v.sin() * 0.3;
                Ok([w.cos() * (u * 0.1 + 1.0) + 0.5, w.sin() * (u * 0.1 + 1.0), u])
            },
            [-1.0, 1.0],
            [0.0, TAU],
            "wobbly",
        )
        .periodic_v();
        assert!(matches!(fourier_defect(&wobbly, 1.0, 0.2, 4, 64), Err(Error::BandLimitViolation { .. })));
    }
}
