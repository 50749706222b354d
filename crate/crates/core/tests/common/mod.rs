//! Independent reference implementations shared by the integration tests.
//!
//! Nothing here calls into the library's triangulation, SH fitting or
//! projection code paths, so agreement with them is meaningful.

#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::PI;

use edgs_init::camera::{CameraView, Intrinsics};
use edgs_init::correspondence::CorrespondenceSet;
use edgs_init::synth::{ConfidenceModel, SceneOracle};
use nalgebra::{DMatrix, Matrix3x4, Matrix4, Vector2, Vector3, Vector4};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `K [R | t]` assembled from the raw camera parameters.
pub fn oracle_projection(view: &CameraView) -> Matrix3x4<f64> {
    let k = view.intrinsics();
    let kmat = nalgebra::Matrix3::new(
        k.focal_x,
        0.0,
        k.principal_x,
        0.0,
        k.focal_y,
        k.principal_y,
        0.0,
        0.0,
        1.0,
    );
    let mut rt = Matrix3x4::zeros();
    rt.fixed_view_mut::<3, 3>(0, 0).copy_from(view.rotation());
    rt.set_column(3, view.translation());
    kmat * rt
}

pub fn oracle_project(p: &Matrix3x4<f64>, x: &Vector3<f64>) -> (Vector2<f64>, f64) {
    let h = p * Vector4::new(x.x, x.y, x.z, 1.0);
    (Vector2::new(h.x / h.z, h.y / h.z), h.z)
}

/// Homogeneous DLT: the right singular vector of the smallest singular value of
/// the stacked 4x4 system, dehomogenized.
pub fn dlt_triangulate(
    p1: &Matrix3x4<f64>,
    p2: &Matrix3x4<f64>,
    u1: &Vector2<f64>,
    u2: &Vector2<f64>,
) -> Vector3<f64> {
    let mut a = Matrix4::zeros();
    for (r, (p, u)) in [(p1, u1), (p1, u1), (p2, u2), (p2, u2)].iter().enumerate() {
        let coord = if r % 2 == 0 { u.x } else { u.y };
        let row = p.row(r % 2) - p.row(2) * coord;
        a.set_row(r, &row);
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.unwrap();
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let h = vt.row(imin);
    Vector3::new(h[0] / h[3], h[1] / h[3], h[2] / h[3])
}

pub fn ndc_distance(a: &Vector2<f64>, b: &Vector2<f64>, w: u32, h: u32) -> f64 {
    let d = a - b;
    Vector2::new(2.0 * d.x / w as f64, 2.0 * d.y / h as f64).norm()
}

/// Real SH basis to degree 3 written from the closed-form normalizations.
pub fn oracle_sh_basis(d: &Vector3<f64>) -> [f64; 16] {
    let (x, y, z) = (d.x, d.y, d.z);
    let c0 = 0.5 / PI.sqrt();
    let c1 = (3.0 / (4.0 * PI)).sqrt();
    let c2a = 0.5 * (15.0 / PI).sqrt();
    let c2b = 0.25 * (5.0 / PI).sqrt();
    let c2c = 0.25 * (15.0 / PI).sqrt();
    let c3a = 0.25 * (35.0 / (2.0 * PI)).sqrt();
    let c3b = 0.5 * (105.0 / PI).sqrt();
    let c3c = 0.25 * (21.0 / (2.0 * PI)).sqrt();
    let c3d = 0.25 * (7.0 / PI).sqrt();
    let c3e = 0.25 * (105.0 / PI).sqrt();
    let (xx, yy, zz) = (x * x, y * y, z * z);
    [
        c0,
        -c1 * y,
        c1 * z,
        -c1 * x,
        c2a * x * y,
        -c2a * y * z,
        c2b * (2.0 * zz - xx - yy),
        -c2a * x * z,
        c2c * (xx - yy),
        -c3a * y * (3.0 * xx - yy),
        c3b * x * y * z,
        -c3c * y * (4.0 * zz - xx - yy),
        c3d * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
        -c3c * x * (4.0 * zz - xx - yy),
        c3e * z * (xx - yy),
        -c3a * x * (xx - 3.0 * yy),
    ]
}

pub fn oracle_basis_matrix(dirs: &[Vector3<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(dirs.len(), 16, |r, c| oracle_sh_basis(&dirs[r])[c])
}

/// `Yᵀ (Y Yᵀ)⁻¹ O` for a full-row-rank `Y`.
pub fn min_norm_oracle(y: &DMatrix<f64>, o: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = y * y.transpose();
    let inv = gram.try_inverse().expect("full row rank");
    y.transpose() * inv * o
}

/// Uniform direction on the sphere from two uniforms in `[0, 1)`.
pub fn sphere_direction(a: f64, b: f64) -> Vector3<f64> {
    let z = 2.0 * a - 1.0;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * PI * b;
    Vector3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Nearest ground-truth point lookup by uniform grid.
pub struct PointIndex {
    cell: f64,
    grid: HashMap<(i64, i64, i64), Vec<usize>>,
    points: Vec<Vector3<f64>>,
}

impl PointIndex {
    pub fn new(points: Vec<Vector3<f64>>, cell: f64) -> Self {
        let mut grid: HashMap<_, Vec<usize>> = HashMap::new();
        for (k, p) in points.iter().enumerate() {
            grid.entry(Self::key(p, cell)).or_default().push(k);
        }
        Self { cell, grid, points }
    }

    fn key(p: &Vector3<f64>, cell: f64) -> (i64, i64, i64) {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    }

    /// Nearest point within one cell of `q`.
    pub fn nearest(&self, q: &Vector3<f64>) -> Option<(usize, f64)> {
        if !q.iter().all(|v| v.is_finite()) {
            return None;
        }
        let (kx, ky, kz) = Self::key(q, self.cell);
        let mut best: Option<(usize, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(ids) = self.grid.get(&(kx + dx, ky + dy, kz + dz)) else {
                        continue;
                    };
                    for &k in ids {
                        let d = (self.points[k] - q).norm();
                        if best.is_none_or(|(_, bd)| d < bd) {
                            best = Some((k, d));
                        }
                    }
                }
            }
        }
        best
    }
}

/// Every (reference, neighbor) pair the pipeline will request, rendered from
/// the scene.
pub fn render_all_pairs(
    scene: &SceneOracle,
    neighbors: usize,
    sigma_px: f64,
    model: ConfidenceModel,
) -> HashMap<(u32, u32), CorrespondenceSet> {
    let mut out = HashMap::new();
    for v in scene.cameras.iter() {
        for n in edgs_init::camera::nearest_neighbors(v, &scene.cameras, neighbors).unwrap() {
            let set =
                edgs_init::synth::render_correspondences(scene, v.id(), n.id(), sigma_px, model)
                    .unwrap();
            out.insert((v.id(), n.id()), set);
        }
    }
    out
}

pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        Self {
            mean,
            std: var.sqrt(),
            n,
        }
    }

    pub fn std_err(&self) -> f64 {
        self.std / (self.n as f64).sqrt()
    }
}

/// `|a - b|` within three combined standard errors.
pub fn means_agree(a: &Stats, b: &Stats) -> bool {
    let band = 3.0 * (a.std_err().powi(2) + b.std_err().powi(2)).sqrt();
    (a.mean - b.mean).abs() <= band
}

pub fn rig_intrinsics() -> Intrinsics {
    Intrinsics {
        focal_x: 900.0,
        focal_y: 950.0,
        principal_x: 410.0,
        principal_y: 290.0,
        width: 800,
        height: 600,
    }
}

/// Two cameras on a sphere around the origin seeing a common point, with a
/// ray angle of at least ~5 degrees.
pub fn random_rig(rng: &mut ChaCha8Rng) -> (CameraView, CameraView, Vector3<f64>) {
    loop {
        let x = Vector3::new(
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
        );
        let mk = |id: u32, rng: &mut ChaCha8Rng| {
            let c = sphere_direction(rng.random(), rng.random()) * rng.random_range(3.0..8.0);
            let jitter = Vector3::new(
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
            );
            CameraView::look_at(id, "r", c, jitter, Vector3::z(), rig_intrinsics()).unwrap()
        };
        let (a, b) = (mk(0, rng), mk(1, rng));
        let ra = (x - a.center()).normalize();
        let rb = (x - b.center()).normalize();
        if ra.dot(&rb) > 5f64.to_radians().cos() {
            continue;
        }
        let visible = |v: &CameraView| {
            let (p, w) = oracle_project(&oracle_projection(v), &x);
            w > 0.0 && v.contains_pixel(p.x, p.y)
        };
        if visible(&a) && visible(&b) {
            return (a, b, x);
        }
    }
}
