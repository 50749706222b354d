//! Synthetic ground-truth scenes for verification.
//!
//! A scene is a set of colored points on a gently curved surface patch,
//! viewed by pinhole cameras arranged on a ring, an arc or a grid. A point is
//! visible in a view when it projects inside the image in front of the camera
//! and is the nearest point landing in its pixel. The oracle can emit correspondences as
//! they would come out of a dense matcher (exact reference pixel, noisy
//! neighbor pixel), COLMAP text, EDGC files and per-view PNG images.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::camera::{nearest_neighbors, project, write_colmap, CameraSet, CameraView, Intrinsics};
use crate::correspondence::{corr_path, write_corr, CorrespondenceSet, MatchRecord};
use crate::pipeline::ColorSource;
use crate::{Error, Result};

pub const IMAGE_WIDTH: u32 = 800;
pub const IMAGE_HEIGHT: u32 = 600;
pub const FOCAL: f64 = 1000.0;

const RING_RADIUS: f64 = 4.0;
const RING_HEIGHT: f64 = 2.5;
const GRID_HEIGHT: f64 = 4.0;
const GRID_SPACING: f64 = 0.8;
const MAX_TRIES_PER_POINT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Ring,
    Arc,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceModel {
    /// Every match has confidence 1.
    ConstantOne,
    /// `exp(-|offset|)` with the injected pixel offset.
    DistanceDecay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenePoint {
    pub position: Vector3<f64>,
    pub color: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct SceneOracle {
    pub points: Vec<ScenePoint>,
    pub cameras: CameraSet,
    pub seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Procedural color of point `index`, quantized to 8 bits per channel.
pub fn point_color(seed: u64, index: usize) -> [f64; 3] {
    let h = splitmix64(seed ^ splitmix64(index as u64));
    [
        (h & 0xff) as f64 / 255.0,
        ((h >> 8) & 0xff) as f64 / 255.0,
        ((h >> 16) & 0xff) as f64 / 255.0,
    ]
}

fn surface(x: f64, y: f64) -> Vector3<f64> {
    Vector3::new(x, y, 0.15 * (2.0 * x).sin() * (1.5 * y).cos())
}

fn intrinsics() -> Intrinsics {
    Intrinsics {
        focal_x: FOCAL,
        focal_y: FOCAL,
        principal_x: IMAGE_WIDTH as f64 / 2.0,
        principal_y: IMAGE_HEIGHT as f64 / 2.0,
        width: IMAGE_WIDTH,
        height: IMAGE_HEIGHT,
    }
}

fn camera_centers(n: usize, layout: Layout) -> Vec<Vector3<f64>> {
    use std::f64::consts::PI;
    match layout {
        Layout::Ring => (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                Vector3::new(RING_RADIUS * a.cos(), RING_RADIUS * a.sin(), RING_HEIGHT)
            })
            .collect(),
        Layout::Arc => (0..n)
            .map(|i| {
                let t = if n == 1 {
                    0.5
                } else {
                    i as f64 / (n - 1) as f64
                };
                let a = (t - 0.5) * (2.0 * PI / 3.0);
                Vector3::new(RING_RADIUS * a.cos(), RING_RADIUS * a.sin(), RING_HEIGHT)
            })
            .collect(),
        Layout::Grid => {
            let cols = (n as f64).sqrt().ceil() as usize;
            let rows = n.div_ceil(cols);
            (0..n)
                .map(|i| {
                    let (r, c) = (i / cols, i % cols);
                    Vector3::new(
                        (c as f64 - (cols - 1) as f64 / 2.0) * GRID_SPACING,
                        (r as f64 - (rows - 1) as f64 / 2.0) * GRID_SPACING,
                        GRID_HEIGHT,
                    )
                })
                .collect()
        }
    }
}

/// Pixel of `point` in `view` when it lies in front of the camera and inside
/// the image, with a margin so the `f32` on-disk value is still inside.
pub fn visible_pixel(view: &CameraView, point: &Vector3<f64>) -> Option<Vector2<f64>> {
    let proj = project(&view.projection(), point).ok()?;
    if proj.depth_scale <= 0.0 {
        return None;
    }
    let p = proj.pixel;
    let inside32 = |v: f64, lim: u32| v >= 0.0 && (v as f32) < lim as f32 && v < lim as f64;
    (inside32(p.x, view.width()) && inside32(p.y, view.height())).then_some(p)
}

pub fn make_scene(
    n_points: usize,
    n_cameras: usize,
    layout: Layout,
    seed: u64,
) -> Result<SceneOracle> {
    if n_points == 0 {
        return Err(Error::InvalidArgument("n_points must be at least 1".into()));
    }
    if n_cameras < 2 {
        return Err(Error::InvalidArgument(
            "n_cameras must be at least 2".into(),
        ));
    }
    let views = camera_centers(n_cameras, layout)
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            CameraView::look_at(
                i as u32 + 1,
                format!("view_{:03}.png", i + 1),
                c,
                Vector3::zeros(),
                Vector3::z(),
                intrinsics(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let cameras = CameraSet::new(views)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_points);
    for index in 0..n_points {
        let mut placed = None;
        for _ in 0..MAX_TRIES_PER_POINT {
            let p = surface(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let seen = cameras
                .iter()
                .filter(|v| visible_pixel(v, &p).is_some())
                .take(2)
                .count();
            if seen >= 2 {
                placed = Some(p);
                break;
            }
        }
        let position = placed.ok_or_else(|| {
            Error::Synth(format!(
                "{layout:?} layout with {n_cameras} cameras cannot see point {index} from two views"
            ))
        })?;
        points.push(ScenePoint {
            position,
            color: point_color(seed, index),
        });
    }
    Ok(SceneOracle {
        points,
        cameras,
        seed,
    })
}

impl SceneOracle {
    /// Row-major per-pixel index of the nearest point whose projection falls in
    /// that pixel.
    fn pixel_owners(&self, view: &CameraView) -> Vec<Option<usize>> {
        let w = view.width() as usize;
        let mut owners = vec![None; w * view.height() as usize];
        let mut depth = vec![f64::INFINITY; owners.len()];
        let p = view.projection();
        for (k, pt) in self.points.iter().enumerate() {
            let Some(px) = visible_pixel(view, &pt.position) else {
                continue;
            };
            let slot = px.y.floor() as usize * w + px.x.floor() as usize;
            let z = project(&p, &pt.position).map_or(f64::INFINITY, |q| q.depth_scale);
            if z < depth[slot] {
                depth[slot] = z;
                owners[slot] = Some(k);
            }
        }
        owners
    }

    fn pair_seed(&self, ref_id: u32, nbr_id: u32) -> u64 {
        splitmix64(self.seed ^ (((ref_id as u64) << 32) | nbr_id as u64))
    }

    /// Like [`render_correspondences`], also returning the ground-truth point
    /// index of every record.
    pub fn correspondences_with_truth(
        &self,
        ref_id: u32,
        nbr_id: u32,
        pixel_noise_sigma: f64,
        confidence: ConfidenceModel,
    ) -> Result<(CorrespondenceSet, Vec<usize>)> {
        let vi = self.cameras.require(ref_id)?;
        let vj = self.cameras.require(nbr_id)?;
        let noise = Normal::new(0.0, pixel_noise_sigma).map_err(|_| {
            Error::InvalidArgument(format!("invalid pixel noise sigma {pixel_noise_sigma}"))
        })?;
        let (own_i, own_j) = (self.pixel_owners(vi), self.pixel_owners(vj));
        let owns = |owners: &[Option<usize>], v: &CameraView, px: &Vector2<f64>, k: usize| {
            owners[px.y.floor() as usize * v.width() as usize + px.x.floor() as usize] == Some(k)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.pair_seed(ref_id, nbr_id));
        let mut records = Vec::new();
        let mut truth = Vec::new();
        for (k, pt) in self.points.iter().enumerate() {
            let (Some(pi), Some(pj)) = (
                visible_pixel(vi, &pt.position),
                visible_pixel(vj, &pt.position),
            ) else {
                continue;
            };
            if !(owns(&own_i, vi, &pi, k) && owns(&own_j, vj, &pj, k)) {
                continue;
            }
            let offset = if pixel_noise_sigma > 0.0 {
                Vector2::new(noise.sample(&mut rng), noise.sample(&mut rng))
            } else {
                Vector2::zeros()
            };
            let qj = pj + offset;
            let inside = |v: f64, lim: u32| v >= 0.0 && (v as f32) < lim as f32 && v < lim as f64;
            if !(inside(qj.x, vj.width()) && inside(qj.y, vj.height())) {
                continue;
            }
            let conf = match confidence {
                ConfidenceModel::ConstantOne => 1.0,
                ConfidenceModel::DistanceDecay => (-offset.norm()).exp(),
            };
            records.push(MatchRecord {
                u_i: pi.x,
                v_i: pi.y,
                u_j: qj.x,
                v_j: qj.y,
                confidence: conf,
            });
            truth.push(k);
        }
        if records.is_empty() {
            return Err(Error::Synth(format!(
                "views {ref_id} and {nbr_id} share no visible points"
            )));
        }
        let size = |v: &CameraView| (v.width() as u16, v.height() as u16);
        let set = CorrespondenceSet::new(ref_id, nbr_id, size(vi), size(vj), records)?;
        Ok((set, truth))
    }

    /// Writes `cameras.txt`/`images.txt` into `dir`.
    pub fn write_colmap(&self, dir: impl AsRef<Path>) -> Result<()> {
        write_colmap(&self.cameras, dir)
    }

    /// Writes `corr_<ref>_<nbr>.edgc` for every view and its `neighbors`
    /// nearest views. Pairs without co-visible points are skipped. Returns the
    /// written pairs.
    pub fn write_correspondences(
        &self,
        dir: impl AsRef<Path>,
        neighbors: usize,
        pixel_noise_sigma: f64,
        confidence: ConfidenceModel,
    ) -> Result<Vec<(u32, u32)>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for v in &self.cameras {
            for n in nearest_neighbors(v, &self.cameras, neighbors)? {
                match self.correspondences_with_truth(v.id(), n.id(), pixel_noise_sigma, confidence)
                {
                    Ok((set, _)) => {
                        write_corr(&set, corr_path(dir, v.id(), n.id()))?;
                        written.push((v.id(), n.id()));
                    }
                    Err(Error::Synth(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(written)
    }

    /// Renders each point as a single pixel (nearest point wins) over a mid-gray
    /// background and writes one PNG per view, named after the view.
    pub fn write_images(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for v in &self.cameras {
            let (w, h) = (v.width(), v.height());
            let mut img = image::RgbImage::from_pixel(w, h, image::Rgb([128, 128, 128]));
            for (slot, owner) in self.pixel_owners(v).iter().enumerate() {
                if let Some(k) = owner {
                    let c = self.points[*k].color.map(|c| (c * 255.0).round() as u8);
                    img.put_pixel(slot as u32 % w, slot as u32 / w, image::Rgb(c));
                }
            }
            let path = dir.join(v.image_name());
            img.save(&path).map_err(|e| Error::Image {
                path: path.clone(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Exact color lookup by projected pixel position.
    pub fn colors(&self, radius_px: f64) -> OracleColors {
        let mut by_view = HashMap::new();
        for v in &self.cameras {
            let mut grid = PixelGrid::new();
            for (k, pt) in self.points.iter().enumerate() {
                if let Some(px) = visible_pixel(v, &pt.position) {
                    grid.entry((px.x.floor() as i64, px.y.floor() as i64))
                        .or_default()
                        .push((px, k));
                }
            }
            by_view.insert(v.id(), grid);
        }
        OracleColors {
            colors: self.points.iter().map(|p| p.color).collect(),
            by_view,
            radius_px,
        }
    }
}

/// Emulates the dense matcher on a synthetic scene.
pub fn render_correspondences(
    scene: &SceneOracle,
    ref_id: u32,
    nbr_id: u32,
    pixel_noise_sigma: f64,
    confidence: ConfidenceModel,
) -> Result<CorrespondenceSet> {
    scene
        .correspondences_with_truth(ref_id, nbr_id, pixel_noise_sigma, confidence)
        .map(|(s, _)| s)
}

/// Projected pixel and point index, bucketed by integer pixel.
type PixelGrid = HashMap<(i64, i64), Vec<(Vector2<f64>, usize)>>;

/// Idealized image: the color of the scene point whose projection is nearest
/// to the query pixel, if one lies within `radius_px`.
#[derive(Debug, Clone)]
pub struct OracleColors {
    colors: Vec<[f64; 3]>,
    by_view: HashMap<u32, PixelGrid>,
    radius_px: f64,
}

impl ColorSource for OracleColors {
    fn color(&self, view: &CameraView, u: f64, v: f64) -> Option<[f64; 3]> {
        let grid = self.by_view.get(&view.id())?;
        let q = Vector2::new(u, v);
        let reach = self.radius_px.ceil().max(1.0) as i64;
        let (cx, cy) = (u.floor() as i64, v.floor() as i64);
        let mut best: Option<(f64, usize)> = None;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let Some(cell) = grid.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for (px, k) in cell {
                    let d = (px - q).norm();
                    if d <= self.radius_px && best.is_none_or(|(bd, bk)| (d, *k) < (bd, bk)) {
                        best = Some((d, *k));
                    }
                }
            }
        }
        best.map(|(_, k)| self.colors[k])
    }
}
