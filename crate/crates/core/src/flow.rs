//! Discrete weighted area on triangle meshes and its gradient descent.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use nalgebra::Matrix3;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{ParametricPatch, UClosure, Vec3};

pub const MIN_TRIANGLE_AREA: f64 = 1e-14;
pub const MIN_VERTEX_NORM: f64 = 1e-9;
/// Rejections of a single step after which descent gives up.
pub const MAX_REJECTIONS: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

fn triangle_area_vector(a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    (b - a).cross(&(c - a)) * 0.5
}

impl TriMesh {
    /// Build a mesh and check indices, triangle areas and vertex norms.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let m = TriMesh { vertices, triangles };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
            }
            if v.norm() < MIN_VERTEX_NORM {
                return Err(Error::InvalidMesh(format!("vertex {i} lies at the origin")));
            }
        }
        for (f, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= self.vertices.len()) {
                return Err(Error::InvalidMesh(format!("face {f} references a missing vertex")));
            }
            if self.area(f) <= MIN_TRIANGLE_AREA {
                return Err(Error::InvalidMesh(format!("face {f} is degenerate")));
            }
        }
        Ok(())
    }

    pub fn corners(&self, f: usize) -> [Vec3; 3] {
        self.triangles[f].map(|i| self.vertices[i])
    }

    pub fn area(&self, f: usize) -> f64 {
        let [a, b, c] = self.corners(f);
        triangle_area_vector(&a, &b, &c).norm()
    }

    pub fn centroid(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.corners(f);
        (a + b + c) / 3.0
    }

    /// Undirected edges with the number of faces using each.
    fn edge_use(&self) -> HashMap<(usize, usize), (usize, i32)> {
        let mut edges: HashMap<(usize, usize), (usize, i32)> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = edges.entry(key).or_insert((0, 0));
                e.0 += 1;
                e.1 += if a < b { 1 } else { -1 };
            }
        }
        edges
    }

    pub fn edge_count(&self) -> usize {
        self.edge_use().len()
    }

    /// Every edge shared by exactly two faces that traverse it in opposite
    /// directions.
    pub fn is_closed(&self) -> bool {
        self.edge_use().values().all(|&(n, dir)| n == 2 && dir == 0)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        self.mapped(|v| v * lambda)
    }

    pub fn rotated(&self, r: &Matrix3<f64>) -> Self {
        self.mapped(|v| r * v)
    }

    pub fn mapped(&self, f: impl FnMut(&Vec3) -> Vec3) -> Self {
        TriMesh { vertices: self.vertices.iter().map(f).collect(), triangles: self.triangles.clone() }
    }

    /// ASCII OBJ with `v` and `f` records (1-based indices).
    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {:.17e} {:.17e} {:.17e}", v.x, v.y, v.z)?;
        }
        for t in &self.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read `v` and `f` records; polygons are fan-triangulated and
    /// `i/j/k` index groups keep only the vertex index.
    pub fn read_obj<R: BufRead>(r: R) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (ln, line) in r.lines().enumerate() {
            let line = line?;
            let mut it = line.split_whitespace();
            let bad = |what: &str| Error::Parse(format!("OBJ line {}: {what}", ln + 1));
            match it.next() {
                Some("v") => {
                    let xs: Vec<f64> = it
                        .take(3)
                        .map(|s| s.parse::<f64>().map_err(|_| bad("bad coordinate")))
                        .collect::<Result<_>>()?;
                    if xs.len() != 3 {
                        return Err(bad("vertex needs three coordinates"));
                    }
                    vertices.push(Vec3::new(xs[0], xs[1], xs[2]));
                }
                Some("f") => {
                    let idx: Vec<usize> = it
                        .map(|s| {
                            let head = s.split('/').next().unwrap_or("");
                            match head.parse::<i64>() {
                                Ok(i) if i > 0 => Ok(i as usize - 1),
                                Ok(i) if i < 0 && (-i) as usize <= vertices.len() => Ok(vertices.len() - (-i) as usize),
                                _ => Err(bad("bad face index")),
                            }
                        })
                        .collect::<Result<_>>()?;
                    if idx.len() < 3 {
                        return Err(bad("face needs at least three vertices"));
                    }
                    for k in 1..idx.len() - 1 {
                        triangles.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        TriMesh::new(vertices, triangles)
    }
}

/// Structured triangulation of a patch with `nu` steps in `u` and `nv` in `v`.
///
/// Periodic directions wrap; a `u` range with pole closure gets `nu - 1`
/// interior rings and a fan at each end. Anything else produces a mesh
/// with boundary (see [`TriMesh::is_closed`]).
pub fn sample_mesh(patch: &ParametricPatch, nu: usize, nv: usize) -> Result<TriMesh> {
    if nu < 2 || nv < 3 {
        return Err(Error::Precondition(format!("mesh grid must be at least 2x3, got {nu}x{nv}")));
    }
    let [u0, u1] = patch.u_range;
    let [v0, v1] = patch.v_range;
    let (cols, v_wrap) = if patch.v_periodic { (nv, true) } else { (nv + 1, false) };
    let v_at = |j: usize| v0 + (v1 - v0) * j as f64 / nv as f64;
    let (rows_u, u_wrap, poles): (Vec<f64>, bool, bool) = match patch.u_closure {
        UClosure::Periodic => ((0..nu).map(|i| u0 + (u1 - u0) * i as f64 / nu as f64).collect(), true, false),
        UClosure::Poles if patch.v_periodic => {
            ((1..nu).map(|i| u0 + (u1 - u0) * i as f64 / nu as f64).collect(), false, true)
        }
        _ => ((0..=nu).map(|i| u0 + (u1 - u0) * i as f64 / nu as f64).collect(), false, false),
    };
    let mut vertices = Vec::with_capacity(rows_u.len() * cols + 2);
    for &u in &rows_u {
        for j in 0..cols {
            vertices.push(patch.position(u, v_at(j))?);
        }
    }
    let idx = |i: usize, j: usize| i * cols + j;
    let n_rows = rows_u.len();
    let row_pairs = if u_wrap { n_rows } else { n_rows - 1 };
    let col_pairs = if v_wrap { cols } else { cols - 1 };
    let mut triangles = Vec::with_capacity(2 * row_pairs * col_pairs + 2 * cols);
    for i in 0..row_pairs {
        let i1 = (i + 1) % n_rows;
        for j in 0..col_pairs {
            let j1 = (j + 1) % cols;
            triangles.push([idx(i, j), idx(i1, j), idx(i1, j1)]);
            triangles.push([idx(i, j), idx(i1, j1), idx(i, j1)]);
        }
    }
    if poles {
        let south = vertices.len();
        vertices.push(patch.position(u0, v0)?);
        let north = vertices.len();
        vertices.push(patch.position(u1, v0)?);
        let last = n_rows - 1;
        for j in 0..cols {
            let j1 = (j + 1) % cols;
            triangles.push([south, idx(0, j), idx(0, j1)]);
            triangles.push([idx(last, j), north, idx(last, j1)]);
        }
    }
    TriMesh::new(vertices, triangles)
}

/// Scale every vertex by an independent factor `1 + U(-amplitude, amplitude)`.
pub fn radial_noise(mesh: &TriMesh, amplitude: f64, seed: u64) -> TriMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    mesh.mapped(|v| v * (1.0 + rng.random_range(-amplitude..=amplitude)))
}

fn weight(c: &Vec3, alpha: f64, face: usize) -> Result<f64> {
    let r = c.norm();
    if r <= crate::stationary::ORIGIN_TOL {
        return Err(Error::OriginInFace { face });
    }
    let w = r.powf(alpha);
    if w.is_finite() {
        Ok(w)
    } else {
        Err(Error::OriginInFace { face })
    }
}

/// `sum_T |c_T|^alpha Area(T)` with `c_T` the centroid.
pub fn discrete_energy(mesh: &TriMesh, alpha: f64) -> Result<f64> {
    let terms = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|f| Ok(weight(&mesh.centroid(f), alpha, f)? * mesh.area(f)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}

/// Exact gradient of [`discrete_energy`] with respect to every vertex.
pub fn discrete_gradient(mesh: &TriMesh, alpha: f64) -> Result<Vec<Vec3>> {
    let per_face = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|f| {
            let p = mesh.corners(f);
            let c = (p[0] + p[1] + p[2]) / 3.0;
            let w = weight(&c, alpha, f)?;
            let n = triangle_area_vector(&p[0], &p[1], &p[2]);
            let area = n.norm();
            if area <= MIN_TRIANGLE_AREA {
                return Err(Error::InvalidMesh(format!("face {f} is degenerate")));
            }
            let nh = n / area;
            let dw = c * (alpha / 3.0 * w / c.norm_squared());
            Ok(std::array::from_fn::<Vec3, 3, _>(|k| {
                let opp = p[(k + 2) % 3] - p[(k + 1) % 3];
                nh.cross(&opp) * (0.5 * w) + dw * area
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut g = vec![Vec3::zeros(); mesh.vertices.len()];
    for (t, contrib) in mesh.triangles.iter().zip(&per_face) {
        for k in 0..3 {
            g[t[k]] += contrib[k];
        }
    }
    Ok(g)
}

pub fn max_norm(g: &[Vec3]) -> f64 {
    g.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    Fixed { dt: f64 },
    /// Armijo backtracking: halve `dt` until the energy drops by at least
    /// `1e-4 dt |g|^2`; after an accepted step the trial `dt` doubles again
    /// (up to `dt_max`).
    Backtracking { dt: f64, dt_max: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub energy: f64,
    pub grad_max: f64,
    pub dt: f64,
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

fn first_degenerate(mesh: &TriMesh) -> Option<usize> {
    (0..mesh.triangles.len()).find(|&f| !(mesh.area(f) > MIN_TRIANGLE_AREA))
}

fn moved(mesh: &TriMesh, g: &[Vec3], dt: f64) -> TriMesh {
    TriMesh { vertices: mesh.vertices.iter().zip(g).map(|(v, d)| v - d * dt).collect(), triangles: mesh.triangles.clone() }
}

/// Gradient descent on the vertex positions of a closed mesh.
///
/// The trace has one row per state, starting with the input (step 0);
/// `dt` is the step that produced the row.
pub fn descend(mesh: &TriMesh, alpha: f64, steps: usize, rule: StepRule) -> Result<(TriMesh, Vec<TraceRow>)> {
    mesh.validate()?;
    if !mesh.is_closed() {
        return Err(Error::OpenMesh);
    }
    let (dt0, dt_max) = match rule {
        StepRule::Fixed { dt } => (dt, dt),
        StepRule::Backtracking { dt, dt_max } => (dt, dt_max),
    };
    if !(dt0 > 0.0 && dt_max >= dt0) {
        return Err(Error::Precondition(format!("step sizes must satisfy 0 < dt <= dt_max, got {dt0}, {dt_max}")));
    }
    let mut cur = mesh.clone();
    let mut energy = discrete_energy(&cur, alpha)?;
    let mut grad = discrete_gradient(&cur, alpha)?;
    let mut trace = vec![TraceRow { step: 0, energy, grad_max: max_norm(&grad), dt: 0.0 }];
    let mut dt = dt0;
    for step in 1..=steps {
        let next = match rule {
            StepRule::Fixed { .. } => {
                let next = moved(&cur, &grad, dt);
                if let Some(face) = first_degenerate(&next) {
                    return Err(Error::FlowSingularity { step, face });
                }
                let e = discrete_energy(&next, alpha).map_err(|_| Error::FlowSingularity { step, face: 0 })?;
                (next, e, dt)
            }
            StepRule::Backtracking { .. } => {
                let g2: f64 = grad.iter().map(|x| x.norm_squared()).sum();
                let mut trial = dt;
                let mut rejections = 0;
                loop {
                    let next = moved(&cur, &grad, trial);
                    let ok = first_degenerate(&next).is_none();
                    let e = if ok { discrete_energy(&next, alpha).ok() } else { None };
                    match e {
                        Some(e) if e <= energy - 1e-4 * trial * g2 => break (next, e, trial),
                        _ => {
                            rejections += 1;
                            if rejections > MAX_REJECTIONS {
                                return Err(Error::Stall { step, rejections });
                            }
                            trial *= 0.5;
                        }
                    }
                }
            }
        };
        let (next, e, used) = next;
        if matches!(rule, StepRule::Backtracking { .. }) {
            assert!(e <= energy, "backtracking accepted an energy increase");
            dt = (used * 2.0).min(dt_max);
        }
        cur = next;
        energy = e;
        grad = discrete_gradient(&cur, alpha).map_err(|_| Error::FlowSingularity { step, face: 0 })?;
        trace.push(TraceRow { step, energy, grad_max: max_norm(&grad), dt: used });
    }
    Ok((cur, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_patch, FamilySpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sphere_mesh(nu: usize, nv: usize) -> TriMesh {
        let p = make_patch(&FamilySpec::Sphere { center: Vec3::zeros(), radius: 1.0 }).unwrap();
        sample_mesh(&p, nu, nv).unwrap()
    }

    #[test]
    fn topology() {
        let s = sphere_mesh(16, 32);
        assert!(s.is_closed());
        assert_eq!(s.euler_characteristic(), 2);
        let t = make_patch(&FamilySpec::Torus { center: Vec3::zeros(), major: 2.0, minor: 0.5 }).unwrap();
        let t = sample_mesh(&t, 16, 16).unwrap();
        assert!(t.is_closed());
        assert_eq!(t.euler_characteristic(), 0);
        let h = make_patch(&serde_json::from_str::<FamilySpec>(r#"{"kind":"helicoid"}"#).unwrap()).unwrap();
        let h = sample_mesh(&h, 8, 8).unwrap();
        assert!(!h.is_closed());
        assert!(matches!(descend(&h, 0.0, 1, StepRule::Fixed { dt: 1e-3 }), Err(Error::OpenMesh)));
    }

    #[test]
    fn sphere_energies() {
        let s = sphere_mesh(32, 64);
        assert_relative_eq!(discrete_energy(&s, 0.0).unwrap(), 4.0 * PI, max_relative = 5e-3);
        assert_relative_eq!(discrete_energy(&s, -2.0).unwrap(), 4.0 * PI, max_relative = 5e-3);
        let e = discrete_energy(&s, 1.5).unwrap();
        assert_relative_eq!(discrete_energy(&s.scaled(3.0), 1.5).unwrap(), 3f64.powf(3.5) * e, max_relative = 1e-13);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = make_patch(&FamilySpec::Sphere { center: Vec3::new(0.3, -0.2, 0.5), radius: 1.0 }).unwrap();
        let m = sample_mesh(&p, 10, 20).unwrap();
        let m = m.mapped(|v| v + Vec3::new(rng.random_range(-0.02..=0.02), rng.random_range(-0.02..=0.02), 0.0));
        for alpha in [-4.0, -2.0, 0.0, 2.0] {
            let g = discrete_gradient(&m, alpha).unwrap();
            let scale = max_norm(&g);
            let h = 1e-6;
            let mut err = 0.0f64;
            for i in 0..m.vertices.len() {
                for k in 0..3 {
                    let mut a = m.clone();
                    let mut b = m.clone();
                    a.vertices[i][k] += h;
                    b.vertices[i][k] -= h;
                    let fd = (discrete_energy(&a, alpha).unwrap() - discrete_energy(&b, alpha).unwrap()) / (2.0 * h);
                    err = err.max((fd - g[i][k]).abs() / scale);
                }
            }
            assert!(err <= 1e-5, "alpha {alpha}: {err}");
        }
    }

    #[test]
    fn flat_mesh_has_zero_interior_gradient() {
        let p = make_patch(&FamilySpec::AffinePlane { normal: Vec3::z(), offset: 1.0, range: [-1.0, 1.0] }).unwrap();
        let m = sample_mesh(&p, 6, 6).unwrap();
        let g = discrete_gradient(&m, 0.0).unwrap();
        // vertex (3, 3) of the 7x7 grid
        assert!(g[3 * 7 + 3].norm() <= 1e-14);
    }

    #[test]
    fn sphere_gradient_refines() {
        let coarse = max_norm(&discrete_gradient(&sphere_mesh(16, 32), -2.0).unwrap());
        let fine = max_norm(&discrete_gradient(&sphere_mesh(32, 64), -2.0).unwrap());
        assert!(coarse / fine >= 1.8, "{coarse} {fine}");
    }

    #[test]
    fn exact_sphere_barely_moves() {
        let m = sphere_mesh(16, 32);
        let (out, _) = descend(&m, -2.0, 50, StepRule::Fixed { dt: 1e-3 }).unwrap();
        let drift = m.vertices.iter().zip(&out.vertices).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(drift <= 1e-3, "{drift}");
    }

    #[test]
    fn perturbed_sphere_recovers() {
        let m = sphere_mesh(32, 64);
        let e0 = discrete_energy(&m, -2.0).unwrap();
        let noisy = radial_noise(&m, 0.01, 1);
        let (_, trace) = descend(&noisy, -2.0, 200, StepRule::Backtracking { dt: 0.1, dt_max: 10.0 }).unwrap();
        assert!(trace.windows(2).all(|w| w[1].energy <= w[0].energy));
        let last = trace.last().unwrap();
        assert!((last.energy - e0).abs() / e0 <= 1e-3, "{} {}", trace[0].energy, last.energy);
        assert!(trace[0].grad_max / last.grad_max >= 10.0, "{} {}", trace[0].grad_max, last.grad_max);
    }

    #[test]
    fn area_flow_shrinks() {
        let m = sphere_mesh(8, 16);
        let (out, trace) = descend(&m, 0.0, 20, StepRule::Backtracking { dt: 0.05, dt_max: 1.0 }).unwrap();
        assert!(trace.windows(2).all(|w| w[1].energy < w[0].energy));
        assert!(out.vertices.iter().all(|v| v.norm() < 1.0));
    }

    #[test]
    fn equivariance() {
        let m = sphere_mesh(6, 12).mapped(|v| Vec3::new(v.x * 1.3, v.y, v.z * 0.8 + 0.4));
        let r = *nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0).matrix();
        let g = discrete_gradient(&m, 1.5).unwrap();
        let gr = discrete_gradient(&m.rotated(&r), 1.5).unwrap();
        for (a, b) in g.iter().zip(&gr) {
            assert!((r * a - b).norm() <= 1e-12);
        }
        let gs = discrete_gradient(&m.scaled(2.0), 1.5).unwrap();
        let scale = max_norm(&gs);
        for (a, b) in g.iter().zip(&gs) {
            assert!((a * 2f64.powf(2.5) - b).norm() <= 1e-13 * scale);
        }
    }

    #[test]
    fn obj_roundtrip() {
        let m = sphere_mesh(4, 6);
        let mut buf = Vec::new();
        m.write_obj(&mut buf).unwrap();
        let back = TriMesh::read_obj(&buf[..]).unwrap();
        assert_eq!(back, m);
        let quad = "v 1 0 0\nv 1 1 0\nv 1 1 1\nv 1 0 1\nf 1/1 2/2 3/3 4/4\n";
        assert_eq!(TriMesh::read_obj(quad.as_bytes()).unwrap().triangles.len(), 2);
        assert!(matches!(TriMesh::read_obj("v 1 0\n".as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn origin_in_face() {
        let m = TriMesh {
            vertices: vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 1.0, 0.0), Vec3::new(0.0, -1.0, 0.0)],
            triangles: vec![[0, 1, 2]],
        };
        assert!(matches!(discrete_energy(&m, -2.0), Err(Error::OriginInFace { face: 0 })));
    }
}
