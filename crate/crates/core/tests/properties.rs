//! Property tests over randomized surfaces, specs and meshes.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Rotation3, Unit};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stationary_core::catalog::{make_patch, FamilySpec};
use stationary_core::cyclic::{
    build_cyclic, frenet_a4b4, frenet_a4b4_combination, frenet_point, parallel_a3b3, CyclicSpec, FrameInit,
    FrameSpec, FrenetPoint,
};
use stationary_core::expr::ScalarFn;
use stationary_core::flow::{discrete_energy, discrete_gradient, max_norm, radial_noise, sample_mesh};
use stationary_core::inversion::{fit_circle_or_line, image_alpha, invert_patch, invert_point};
use stationary_core::ruled::{random_ruled_spec, ruled_coeffs_from_jets};
use stationary_core::stationary::{energy, fourier_defect, residual, weighted_defect};
use stationary_core::{ParametricPatch, Vec3};

/// A catalog surface chosen by `kind`, shaped by four numbers in `[0, 1]`.
fn catalog_patch(kind: u8, x: [f64; 4]) -> ParametricPatch {
    let spec = match kind {
        0 => FamilySpec::Sphere {
            center: Vec3::new(x[0] - 0.5, x[1] - 0.5, 2.0 * x[2] - 1.0),
            radius: 0.5 + x[3],
        },
        1 => FamilySpec::Helicoid { pitch: 0.5 + x[0], s_range: [0.5, 3.5], t_range: [-1.5, 1.5] },
        2 => FamilySpec::Catenoid {
            waist: 0.5 + x[0],
            axis_offset: Vec3::new(x[1] - 0.5, x[2] - 0.5, 0.0),
            u_range: [-1.0, 1.0],
        },
        3 => FamilySpec::Torus { center: Vec3::new(0.0, x[0] - 0.5, x[1]), major: 1.5 + x[2], minor: 0.3 + 0.5 * x[3] },
        4 => FamilySpec::VectorPlane { normal: Vec3::new(x[0] - 0.5, x[1] - 0.5, 0.2 + x[2]), rho_range: [0.5, 2.0] },
        5 => FamilySpec::LogSpiralNeg2 { u_range: [0.5 + x[0], 2.0 + x[1]] },
        _ => FamilySpec::Inverted {
            inner: Box::new(FamilySpec::Sphere {
                center: Vec3::new(2.0 + x[0], x[1] - 0.5, x[2] - 0.5),
                radius: 0.5 + 0.5 * x[3],
            }),
        },
    };
    make_patch(&spec).unwrap()
}

fn unit3() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(0.0..1.0f64)
}

fn rotation(axis: [f64; 3], angle: f64) -> Matrix3<f64> {
    let a = Vec3::new(axis[0], axis[1], axis[2] + 0.1);
    *Rotation3::from_axis_angle(&Unit::new_normalize(a), angle).matrix()
}

fn lit(x: f64) -> String {
    format!("({x:.6})")
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orientation_flip(kind in 0u8..7, x in unit3(), s in 0.05..0.95f64, t in 0.05..0.95f64, alpha in -4.0..3.0f64) {
        let p = catalog_patch(kind, x);
        let (u, v) = p.interior_point(s, t, 0.05);
        let q = p.swapped();
        let a = p.fundamental(u, v).unwrap();
        let b = q.fundamental(v, u).unwrap();
        prop_assert!((a.normal + b.normal).norm() <= 1e-12);
        prop_assert!(close(a.h, -b.h, 1e-10));
        let (ra, rb) = (residual(&p, alpha, u, v).unwrap(), residual(&q, alpha, v, u).unwrap());
        prop_assert!(close(ra.abs(), rb.abs(), 1e-10), "{} vs {}", ra, rb);
    }

    #[test]
    fn scaling_law(kind in 0u8..7, x in unit3(), s in 0.05..0.95f64, t in 0.05..0.95f64, alpha in -4.0..3.0f64, lambda in prop::sample::select(vec![0.5, 3.0])) {
        let p = catalog_patch(kind, x);
        let (u, v) = p.interior_point(s, t, 0.05);
        let q = p.scaled(lambda);
        let (a, b) = (p.fundamental(u, v).unwrap(), q.fundamental(u, v).unwrap());
        prop_assert!(close(b.h, a.h / lambda, 1e-10));
        let (ra, rb) = (residual(&p, alpha, u, v).unwrap(), residual(&q, alpha, u, v).unwrap());
        prop_assert!(close(rb, ra / lambda, 1e-10), "{} vs {}", rb, ra / lambda);
    }

    #[test]
    fn rotation_invariance(kind in 0u8..7, x in unit3(), s in 0.05..0.95f64, t in 0.05..0.95f64, alpha in -4.0..3.0f64,
                           axis in prop::array::uniform3(-1.0..1.0f64), angle in 0.0..TAU) {
        let p = catalog_patch(kind, x);
        let (u, v) = p.interior_point(s, t, 0.05);
        let r = rotation(axis, angle);
        let q = p.rotated(r);
        let (a, b) = (p.fundamental(u, v).unwrap(), q.fundamental(u, v).unwrap());
        prop_assert!(close(a.h, b.h, 1e-10));
        prop_assert!((r * a.normal - b.normal).norm() <= 1e-12);
        let (ra, rb) = (residual(&p, alpha, u, v).unwrap(), residual(&q, alpha, u, v).unwrap());
        prop_assert!(close(ra, rb, 1e-10));
    }

    #[test]
    fn analytic_jets_match_differences(kind in 0u8..7, x in unit3(), s in 0.05..0.95f64, t in 0.05..0.95f64) {
        let p = catalog_patch(kind, x);
        let (u, v) = p.interior_point(s, t, 0.05);
        let exact = p.eval_jet2(u, v).unwrap();
        let fd = p.fd_jet2(u, v, 1e-4).unwrap();
        let d = exact.max_abs_diff(&fd);
        prop_assert!(d <= 1e-6, "{}: {}", p.label, d);
    }

    #[test]
    fn inversion_involution(kind in 0u8..7, x in unit3(), s in 0.05..0.95f64, t in 0.05..0.95f64) {
        let p = catalog_patch(kind, x);
        let (u, v) = p.interior_point(s, t, 0.05);
        let twice = invert_patch(&invert_patch(&p));
        let (a, b) = (p.position(u, v).unwrap(), twice.position(u, v).unwrap());
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        let c = invert_point(&invert_point(&a).unwrap()).unwrap();
        prop_assert!((a - c).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn image_alpha_is_an_involution(alpha in -10.0..10.0f64) {
        prop_assert!((image_alpha(image_alpha(alpha)) - alpha).abs() <= 1e-14);
        prop_assert_eq!(image_alpha(-2.0), -2.0);
    }

    #[test]
    fn inversion_maps_circles_to_circles_or_lines(c in prop::array::uniform3(-2.0..2.0f64), radius in 0.2..1.5f64,
                                                  axis in prop::array::uniform3(-1.0..1.0f64), angle in 0.0..TAU) {
        let center = Vec3::from(c);
        let r = rotation(axis, angle);
        let pts: Vec<Vec3> = (0..24)
            .map(|k| {
                let th = TAU * k as f64 / 24.0;
                center + r * Vec3::new(th.cos(), th.sin(), 0.0) * radius
            })
            .collect();
        prop_assume!(pts.iter().all(|p| p.norm() > 0.05));
        let img: Vec<Vec3> = pts.iter().map(|p| invert_point(p).unwrap()).collect();
        let scale = img.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let fit = fit_circle_or_line(&img, 1e-9 * scale).unwrap();
        prop_assert!(fit.max_deviation() <= 1e-8 * scale, "{:?}", fit);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_homogeneity(kind in 0u8..7, x in unit3(), alpha in -3.0..2.0f64, lambda in prop::sample::select(vec![0.5, 3.0])) {
        let p = catalog_patch(kind, x);
        let e = energy(&p, alpha, 24, 24).unwrap();
        let el = energy(&p.scaled(lambda), alpha, 24, 24).unwrap();
        prop_assert!(close(el, lambda.powf(alpha + 2.0) * e, 1e-12));
    }

    #[test]
    fn ruled_polynomial_identity(seed in any::<u64>(), alpha in -4.0..3.0f64, s in 0.0..3.0f64, t in -3.0..3.0f64) {
        let spec = random_ruled_spec(&mut ChaCha8Rng::seed_from_u64(seed));
        let p = spec.patch([-3.0, 3.0]).unwrap();
        let (g, b) = spec.jets(s).unwrap();
        let c = ruled_coeffs_from_jets(&g, &b, alpha);
        let poly = c.iter().rev().fold(0.0, |acc, &x| acc * t + x);
        let scale: f64 = c.iter().enumerate().map(|(n, x)| x.abs() * t.abs().powi(n as i32)).sum();
        let d = weighted_defect(&p.eval_jet2(s, t).unwrap(), alpha);
        prop_assert!((poly - d).abs() <= 1e-7 * scale.max(1.0), "{} vs {}", poly, d);
    }

    #[test]
    fn parallel_band_limit(k in prop::array::uniform4(-0.5..0.5f64), alpha in -4.0..3.0f64, u in -0.8..0.8f64) {
        let spec = CyclicSpec::Parallel {
            a: ScalarFn::parse(&format!("{} + {}*u^2", lit(k[0]), lit(k[1]))).unwrap(),
            b: ScalarFn::parse(&format!("{}*sin(u)", lit(k[2]))).unwrap(),
            r: ScalarFn::parse(&format!("1 + {}*u", lit(k[3]))).unwrap(),
            u_range: [-1.0, 1.0],
        };
        let fc = fourier_defect(&build_cyclic(&spec).unwrap(), alpha, u, 3, 32).unwrap();
        let CyclicSpec::Parallel { a, b, r, .. } = &spec else { unreachable!() };
        let (ja, jb) = (a.eval(u).unwrap(), b.eval(u).unwrap());
        let (a3, b3) = parallel_a3b3(ja.d(0), ja.d(1), jb.d(0), jb.d(1), r.value(u).unwrap(), alpha, u);
        prop_assert!(close(fc.a[3], a3, 1e-7) && close(fc.b[3], b3, 1e-7));
    }

    #[test]
    fn frenet_band_limit(k in prop::array::uniform4(-0.5..0.5f64), tau in -0.5..0.5f64, alpha in -4.0..3.0f64, u in 0.2..1.8f64) {
        let spec = CyclicSpec::Frenet {
            frame: FrameSpec {
                kappa: ScalarFn::parse(&format!("1 + {}*sin(u)", lit(k[0]))).unwrap(),
                tau: ScalarFn::Const(tau),
                init: FrameInit::default(),
            },
            a: ScalarFn::parse(&format!("{}*u", lit(k[1]))).unwrap(),
            b: ScalarFn::parse(&format!("0.3 + {}*cos(u)", lit(k[2]))).unwrap(),
            c: ScalarFn::parse(&format!("{} + 0.2*u", lit(k[3]))).unwrap(),
            r: ScalarFn::Const(1.0),
            u_range: [0.0, 2.0],
        };
        let fc = fourier_defect(&build_cyclic(&spec).unwrap(), alpha, u, 4, 32).unwrap();
        let (a4, b4) = frenet_a4b4(&frenet_point(&spec, u).unwrap(), alpha);
        prop_assert!(close(fc.a[4], a4, 1e-7) && close(fc.b[4], b4, 1e-7));
    }

    #[test]
    fn frenet_combination_factorizes(v in prop::array::uniform8(-2.0..2.0f64), alpha in -6.0..4.0f64) {
        let p = FrenetPoint { a: v[0], b: v[1], c: v[2], db: v[3], dc: v[4], r: v[5].abs() + 0.1, kappa: v[6].abs() + 0.1, tau: v[7] };
        let (a4, b4) = frenet_a4b4(&p, alpha);
        let lhs = p.c * a4 - p.b * b4;
        let rhs = frenet_a4b4_combination(&p, alpha);
        let scale = (p.c * a4).abs() + (p.b * b4).abs();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1.0), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn flow_gradient_equivariance(seed in 0u64..1000, alpha in -4.0..2.0f64, axis in prop::array::uniform3(-1.0..1.0f64),
                                  angle in 0.0..TAU, lambda in prop::sample::select(vec![0.5, 3.0])) {
        let base = sample_mesh(&catalog_patch(0, [0.6, 0.4, 0.55, 0.3]), 6, 12).unwrap();
        let mesh = radial_noise(&base, 0.05, seed);
        let g = discrete_gradient(&mesh, alpha).unwrap();
        let scale = max_norm(&g);
        let r = rotation(axis, angle);
        let gr = discrete_gradient(&mesh.rotated(&r), alpha).unwrap();
        let rot_err = g.iter().zip(&gr).map(|(a, b)| (r * a - b).norm()).fold(0.0, f64::max);
        prop_assert!(rot_err <= 1e-12 * scale);
        // E(lambda M) = lambda^(alpha+2) E(M), so the gradient picks up lambda^(alpha+1)
        let gs = discrete_gradient(&mesh.scaled(lambda), alpha).unwrap();
        let f = lambda.powf(alpha + 1.0);
        let sc_err = g.iter().zip(&gs).map(|(a, b)| (a * f - b).norm()).fold(0.0, f64::max);
        prop_assert!(sc_err <= 1e-12 * scale * f);
        let e = discrete_energy(&mesh, alpha).unwrap();
        let es = discrete_energy(&mesh.scaled(lambda), alpha).unwrap();
        prop_assert!(close(es, lambda.powf(alpha + 2.0) * e, 1e-12));
    }

    #[test]
    fn flow_gradient_matches_differences(seed in 0u64..1000, alpha in -4.0..2.0f64, vertex in 0usize..74) {
        let base = sample_mesh(&catalog_patch(0, [0.6, 0.4, 0.55, 0.3]), 6, 12).unwrap();
        let mesh = radial_noise(&base, 0.05, seed);
        let i = vertex % mesh.vertices.len();
        let g = discrete_gradient(&mesh, alpha).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let e = |d: f64| {
                let mut m = mesh.clone();
                m.vertices[i][k] += d;
                discrete_energy(&m, alpha).unwrap()
            };
            let fd = (e(h) - e(-h)) / (2.0 * h);
            prop_assert!((fd - g[i][k]).abs() <= 1e-5 * max_norm(&g), "{} vs {}", fd, g[i][k]);
        }
    }
}
