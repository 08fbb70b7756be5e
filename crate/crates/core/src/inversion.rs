//! The inversion `Phi(p) = p / |p|^2` and its action on patches.

use std::sync::Arc;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Jet2, ParametricPatch, Surface, Vec3};
use crate::stationary::{residual_grid, ResidualReport};

/// Inner points closer to the origin than this are rejected.
pub const DELTA_INV: f64 = 1e-6;

pub fn invert_point(p: &Vec3) -> Result<Vec3> {
    let r2 = p.norm_squared();
    if r2 > 0.0 {
        Ok(p / r2)
    } else {
        Err(Error::SingularPoint { u: f64::NAN, v: f64::NAN, norm: 0.0 })
    }
}

/// `dPhi_p(x)`.
fn d_phi(p: &Vec3, r2: f64, x: &Vec3) -> Vec3 {
    x / r2 - p * (2.0 * p.dot(x) / (r2 * r2))
}

/// `d^2 Phi_p(x, y)`.
fn dd_phi(p: &Vec3, r2: f64, x: &Vec3, y: &Vec3) -> Vec3 {
    let r4 = r2 * r2;
    let (px, py) = (p.dot(x), p.dot(y));
    (x * py + y * px + p * x.dot(y)) * (-2.0 / r4) + p * (8.0 * px * py / (r4 * r2))
}

/// Jet of `Phi o Psi` from the jet of `Psi`.
pub fn invert_jet(j: &Jet2) -> Result<Jet2> {
    let r2 = j.p.norm_squared();
    if !(r2.sqrt() >= DELTA_INV) {
        return Err(Error::SingularPoint { u: f64::NAN, v: f64::NAN, norm: r2.sqrt() });
    }
    let p = &j.p;
    Ok(Jet2 {
        p: p / r2,
        pu: d_phi(p, r2, &j.pu),
        pv: d_phi(p, r2, &j.pv),
        puu: d_phi(p, r2, &j.puu) + dd_phi(p, r2, &j.pu, &j.pu),
        puv: d_phi(p, r2, &j.puv) + dd_phi(p, r2, &j.pu, &j.pv),
        pvv: d_phi(p, r2, &j.pvv) + dd_phi(p, r2, &j.pv, &j.pv),
    })
}

struct Inverted(Arc<dyn Surface>);

impl Surface for Inverted {
    fn jet(&self, u: f64, v: f64) -> Result<Jet2> {
        invert_jet(&self.0.jet(u, v)?).map_err(|e| e.at(u, v))
    }
}

/// `Phi o patch` over the same parameter domain.
pub fn invert_patch(patch: &ParametricPatch) -> ParametricPatch {
    let mut out = ParametricPatch::new(
        Inverted(patch.surface().clone()),
        patch.u_range,
        patch.v_range,
        format!("inverted({})", patch.label),
    );
    out.v_periodic = patch.v_periodic;
    out.u_closure = patch.u_closure;
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftDirection {
    /// Check `(patch, alpha)` and `(Phi(patch), -alpha - 4)`.
    #[default]
    Forward,
    /// Check `(Phi(patch), -alpha - 4)` and its image `(patch, alpha)`.
    Inverse,
}

/// Residual reports for a source surface and its image under `Phi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub direction: ShiftDirection,
    pub source_label: String,
    pub image_label: String,
    pub source: ResidualReport,
    pub image: ResidualReport,
}

impl ShiftReport {
    pub fn summary(&self) -> String {
        format!(
            "source {} at alpha = {}: sup|residual| = {:.3e}; image {} at alpha = {}: sup|residual| = {:.3e} ({} samples each)",
            self.source_label,
            self.source.alpha,
            self.source.sup_abs,
            self.image_label,
            self.image.alpha,
            self.image.sup_abs,
            self.image.sample_count
        )
    }
}

/// Exponent carried by the image of an `alpha`-stationary surface.
///
/// `|Phi(p)| = 1/|p|` and `Phi` scales area by `|p|^-4`, so the weighted
/// area of `Sigma` at `alpha` equals that of `Phi(Sigma)` at `-alpha - 4`.
/// The map is an involution with fixed point `-2`.
pub fn image_alpha(alpha: f64) -> f64 {
    -alpha - 4.0
}

/// Residual of `patch` at `alpha` and of its inversion at `image_alpha(alpha)`.
pub fn verify_shift(patch: &ParametricPatch, alpha: f64, nu: usize, nv: usize) -> Result<(ResidualReport, ResidualReport)> {
    let source = residual_grid(patch, alpha, nu, nv)?;
    let image = residual_grid(&invert_patch(patch), image_alpha(alpha), nu, nv)?;
    Ok((source, image))
}

pub fn verify_shift_directed(
    patch: &ParametricPatch,
    alpha: f64,
    nu: usize,
    nv: usize,
    direction: ShiftDirection,
) -> Result<ShiftReport> {
    let (src, src_alpha) = match direction {
        ShiftDirection::Forward => (patch.clone(), alpha),
        ShiftDirection::Inverse => (invert_patch(patch), image_alpha(alpha)),
    };
    let img = invert_patch(&src);
    let (source, image) = verify_shift(&src, src_alpha, nu, nv)?;
    Ok(ShiftReport { direction, source_label: src.label.clone(), image_label: img.label, source, image })
}

// ---------------------------------------------------------------------------
// Fits

/// Best-fit plane through points: `(centroid, unit normal, max distance)`.
pub fn fit_plane(points: &[Vec3]) -> Result<(Vec3, Vec3, f64)> {
    if points.len() < 3 {
        return Err(Error::Precondition("plane fit needs at least three points".into()));
    }
    let (c, eig) = scatter(points);
    let k = eig.eigenvalues.imin();
    let normal = eig.eigenvectors.column(k).into_owned().normalize();
    let dev = points.iter().map(|p| (p - c).dot(&normal).abs()).fold(0.0, f64::max);
    Ok((c, normal, dev))
}

fn scatter(points: &[Vec3]) -> (Vec3, SymmetricEigen<f64, nalgebra::U3>) {
    let c = points.iter().sum::<Vec3>() / points.len() as f64;
    let m = points.iter().fold(Matrix3::zeros(), |m, p| {
        let d = p - c;
        m + d * d.transpose()
    });
    (c, m.symmetric_eigen())
}

/// Result of fitting a circle or a straight line to points in space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveFit {
    Line { point: Vec3, direction: Vec3, max_deviation: f64 },
    Circle { center: Vec3, radius: f64, normal: Vec3, max_deviation: f64 },
}

impl CurveFit {
    pub fn max_deviation(&self) -> f64 {
        match self {
            CurveFit::Line { max_deviation, .. } | CurveFit::Circle { max_deviation, .. } => *max_deviation,
        }
    }
}

/// Fit a line if the points are collinear to `line_tol`, otherwise a
/// circle in the best-fit plane.
pub fn fit_circle_or_line(points: &[Vec3], line_tol: f64) -> Result<CurveFit> {
    if points.len() < 3 {
        return Err(Error::Precondition("curve fit needs at least three points".into()));
    }
    let (c, eig) = scatter(points);
    let k = eig.eigenvalues.imax();
    let dir = eig.eigenvectors.column(k).into_owned().normalize();
    let line_dev = points
        .iter()
        .map(|p| {
            let d = p - c;
            (d - dir * d.dot(&dir)).norm()
        })
        .fold(0.0, f64::max);
    if line_dev <= line_tol {
        return Ok(CurveFit::Line { point: c, direction: dir, max_deviation: line_dev });
    }
    let (_, normal, plane_dev) = fit_plane(points)?;
    let e1 = dir;
    let e2 = normal.cross(&e1);
    // Algebraic fit x^2 + y^2 + D x + E y + F = 0 in plane coordinates,
    // then one refinement of the centre about the first estimate.
    let q: Vec<(f64, f64)> = points.iter().map(|p| ((p - c).dot(&e1), (p - c).dot(&e2))).collect();
    let mut a = Matrix3::zeros();
    let mut rhs = Vec3::zeros();
    for &(x, y) in &q {
        let row = Vec3::new(x, y, 1.0);
        a += row * row.transpose();
        rhs -= row * (x * x + y * y);
    }
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Precondition("degenerate circle fit".into()))?;
    let (cx, cy) = (-0.5 * sol.x, -0.5 * sol.y);
    let radius = q.iter().map(|&(x, y)| (x - cx).hypot(y - cy)).sum::<f64>() / q.len() as f64;
    let dev = q.iter().map(|&(x, y)| ((x - cx).hypot(y - cy) - radius).abs()).fold(0.0, f64::max);
    let center = c + e1 * cx + e2 * cy;
    Ok(CurveFit::Circle { center, radius, normal, max_deviation: dev.max(plane_dev) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Scalar;
    use crate::stationary::residual;
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, TAU};

    fn sphere(c: Vec3, r: f64) -> ParametricPatch {
        ParametricPatch::from_fn(
            move |u, v| Ok([u.cos() * v.cos() * r + c.x, u.cos() * v.sin() * r + c.y, u.sin() * r + c.z]),
            [-PI / 2.0, PI / 2.0],
            [0.0, TAU],
            "sphere",
        )
        .periodic_v()
    }

    #[test]
    fn point_examples() {
        assert_eq!(invert_point(&Vec3::new(2.0, 0.0, 0.0)).unwrap(), Vec3::new(0.5, 0.0, 0.0));
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert_relative_eq!(invert_point(&invert_point(&p).unwrap()).unwrap(), p, epsilon = 1e-14);
        assert!(invert_point(&Vec3::zeros()).is_err());
    }

    #[test]
    fn sphere_through_origin_maps_to_plane() {
        let s = sphere(Vec3::z(), 1.0);
        let img: Vec<Vec3> = (0..20)
            .map(|k| {
                let (u, v) = (-1.2 + 0.12 * k as f64, 0.7 * k as f64);
                invert_point(&s.position(u, v).unwrap()).unwrap()
            })
            .collect();
        let (c, n, dev) = fit_plane(&img).unwrap();
        assert!(dev <= 1e-12, "{dev}");
        assert_relative_eq!(n.z.abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(c.z, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn inverted_jet_matches_finite_differences() {
        let s = invert_patch(&sphere(Vec3::new(0.3, -0.2, 1.4), 1.0));
        let (a, b) = (s.eval_jet2(0.4, 1.1).unwrap(), s.fd_jet2(0.4, 1.1, 1e-4).unwrap());
        assert!(a.max_abs_diff(&b) < 1e-6, "{}", a.max_abs_diff(&b));
    }

    #[test]
    fn involution() {
        let s = sphere(Vec3::new(0.3, -0.2, 1.4), 0.8);
        let ss = invert_patch(&invert_patch(&s));
        for (u, v) in [(0.1, 0.2), (-0.9, 4.0)] {
            assert_relative_eq!(ss.position(u, v).unwrap(), s.position(u, v).unwrap(), epsilon = 1e-12);
            let (r0, r1) = (residual(&s, 1.0, u, v).unwrap(), residual(&ss, 1.0, u, v).unwrap());
            assert_relative_eq!(r0, r1, epsilon = 1e-9);
        }
    }

    #[test]
    fn shift_for_spheres() {
        let (src, img) = verify_shift(&sphere(Vec3::zeros(), 1.0), -2.0, 16, 16).unwrap();
        assert!(src.sup_abs <= 1e-12 && img.sup_abs <= 1e-10, "{} {}", src.sup_abs, img.sup_abs);
        assert_eq!(img.alpha, -2.0);
        let (src, img) = verify_shift(&sphere(Vec3::z(), 1.0), -4.0, 16, 16).unwrap();
        assert!(src.sup_abs <= 1e-10 && img.sup_abs <= 1e-10, "{} {}", src.sup_abs, img.sup_abs);
        let rep = verify_shift_directed(&sphere(Vec3::z(), 1.0), 0.0, 8, 8, ShiftDirection::Inverse).unwrap();
        assert_eq!(rep.source.alpha, -4.0);
        assert!(rep.image_label.starts_with("inverted(inverted("));
    }

    #[test]
    fn origin_is_rejected_with_location() {
        let s = invert_patch(&sphere(Vec3::z(), 1.0));
        match s.eval_jet2(-PI / 2.0, 0.0) {
            Err(Error::SingularPoint { u, .. }) => assert_relative_eq!(u, -PI / 2.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn circle_and_line_fits() {
        let circ: Vec<Vec3> = (0..12).map(|k| Vec3::new(1.0 + 2.0 * (0.5 * k as f64).cos(), 2.0 * (0.5 * k as f64).sin(), 3.0)).collect();
        match fit_circle_or_line(&circ, 1e-9).unwrap() {
            CurveFit::Circle { radius, max_deviation, .. } => {
                assert_relative_eq!(radius, 2.0, epsilon = 1e-12);
                assert!(max_deviation < 1e-12);
            }
            f => panic!("{f:?}"),
        }
        // circle through 0 maps to a line
        let img: Vec<Vec3> = (1..12)
            .map(|k| invert_point(&Vec3::new(1.0 + (0.5 * k as f64).cos(), (0.5 * k as f64).sin(), 0.0)).unwrap())
            .collect();
        assert!(matches!(fit_circle_or_line(&img, 1e-10).unwrap(), CurveFit::Line { .. }));
    }
}
