//! End-to-end initialization: cameras and correspondences in, splats out.
//!
//! Stages, in order: load cameras, select reference views, then per reference
//! view find neighbors, read correspondences, triangulate, filter and sample;
//! fit spherical harmonics per sampled splat; assign scale, rotation and
//! opacity; optionally perturb; export PLY.
//!
//! Reference views are processed in parallel. Every per-view draw uses its
//! own seed and results are merged in ascending view id order, so the output
//! does not depend on the number of worker threads.

mod plan;
mod sources;

pub use plan::{build_plan, write_plan, NeighborPlan, PlanPair};
pub use sources::{
    ColorSource, ConstantColor, CorrespondenceDir, CorrespondenceSource, ImageColors,
};

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{UnitQuaternion, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{load_colmap, nearest_neighbors, project, CameraSet, CameraView};
use crate::sampling::{
    aggregate_global, build_view_distribution, sample, view_seed, NeighborCandidates,
    SampledCandidate, Thresholds, DEFAULT_SAMPLES_PER_REF, DEFAULT_TAU_CORR, DEFAULT_TAU_PROJ,
};
use crate::sh::{fit_sh, fit_sh_excluding_dc, init_splat_sh, DcMode};
use crate::splat::{
    init_scale, inverse_sigmoid, perturb, write_ply, SplatInit, DEFAULT_K_SCALE, DEFAULT_OPACITY,
};
use crate::triangulate::triangulate_set;
use crate::{Error, Result};

pub const DEFAULT_MAX_REF_VIEWS: usize = 180;
pub const DEFAULT_NUM_NEIGHBORS: usize = 2;

/// Color assumed when no observation of the reference pixel is available.
const FALLBACK_COLOR: [f64; 3] = [0.5, 0.5, 0.5];

/// Numeric parameters of the initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitOptions {
    pub max_ref_views: usize,
    pub num_neighbors: usize,
    pub samples_per_ref: usize,
    pub tau_corr: f64,
    pub tau_proj: f64,
    pub k_scale: f64,
    pub seed: u64,
    pub noise_sigma_xyz: f64,
    pub noise_sigma_rgb: f64,
    pub init_opacity: f64,
    pub dc_mode: DcMode,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl Default for InitOptions {
    fn default() -> Self {
        Self {
            max_ref_views: DEFAULT_MAX_REF_VIEWS,
            num_neighbors: DEFAULT_NUM_NEIGHBORS,
            samples_per_ref: DEFAULT_SAMPLES_PER_REF,
            tau_corr: DEFAULT_TAU_CORR,
            tau_proj: DEFAULT_TAU_PROJ,
            k_scale: DEFAULT_K_SCALE,
            seed: 0,
            noise_sigma_xyz: 0.0,
            noise_sigma_rgb: 0.0,
            init_opacity: DEFAULT_OPACITY,
            dc_mode: DcMode::Overwrite,
            workers: None,
        }
    }
}

impl InitOptions {
    pub fn thresholds(&self) -> Result<Thresholds> {
        Thresholds::new(self.tau_corr, self.tau_proj)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        for (name, v) in [
            ("max_ref_views", self.max_ref_views),
            ("num_neighbors", self.num_neighbors),
            ("samples_per_ref", self.samples_per_ref),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        self.thresholds()?;
        if !(self.k_scale > 0.0 && self.k_scale.is_finite()) {
            return bad(format!("k_scale must be positive, got {}", self.k_scale));
        }
        for (name, v) in [
            ("noise_sigma_xyz", self.noise_sigma_xyz),
            ("noise_sigma_rgb", self.noise_sigma_rgb),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(self.init_opacity > 0.0 && self.init_opacity < 1.0) {
            return bad(format!(
                "init_opacity must be in (0, 1), got {}",
                self.init_opacity
            ));
        }
        Ok(())
    }
}

/// File locations plus [`InitOptions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub colmap_dir: PathBuf,
    pub corr_dir: PathBuf,
    pub output_path: PathBuf,
    /// Images named as in `images.txt`; without it every color is mid-gray.
    pub image_dir: Option<PathBuf>,
    pub options: InitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewReport {
    pub ref_view_id: u32,
    pub neighbors: Vec<u32>,
    /// Records read across all neighbors.
    pub matched: usize,
    /// Distinct eligible source pixels.
    pub eligible: usize,
    pub sampled: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub views: Vec<ViewReport>,
    pub total_splats: usize,
    pub timings: Vec<StageTiming>,
    pub warnings: Vec<String>,
}

impl PipelineReport {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// All views when they fit under `max_refs`, otherwise `max_refs` views taken
/// at an even stride through the set order.
pub fn select_reference_views(cams: &CameraSet, max_refs: usize) -> Vec<u32> {
    let n = cams.len();
    if n <= max_refs {
        return cams.iter().map(|v| v.id()).collect();
    }
    (0..max_refs)
        .map(|i| cams.views()[i * n / max_refs].id())
        .collect()
}

struct ViewOutcome {
    report: ViewReport,
    samples: Vec<SampledCandidate>,
    warnings: Vec<String>,
}

fn process_reference(
    ref_view: &CameraView,
    cams: &CameraSet,
    corrs: &dyn CorrespondenceSource,
    opts: &InitOptions,
    th: &Thresholds,
) -> Result<ViewOutcome> {
    let neighbors = nearest_neighbors(ref_view, cams, opts.num_neighbors)?;
    let mut warnings = Vec::new();
    let mut per_neighbor = Vec::with_capacity(neighbors.len());
    let mut matched = 0;
    for nbr in &neighbors {
        let set = match corrs.load(ref_view.id(), nbr.id()) {
            Ok(Some(set)) => set,
            Ok(None) => {
                warnings.push(format!(
                    "missing correspondences for pair ({}, {}); skipped",
                    ref_view.id(),
                    nbr.id()
                ));
                continue;
            }
            Err(e) => {
                warnings.push(format!(
                    "unreadable correspondences for pair ({}, {}): {e}; skipped",
                    ref_view.id(),
                    nbr.id()
                ));
                continue;
            }
        };
        let expect = |v: &CameraView| (v.width(), v.height());
        let got = |s: (u16, u16)| (s.0 as u32, s.1 as u32);
        if got(set.ref_size) != expect(ref_view) || got(set.nbr_size) != expect(nbr) {
            warnings.push(format!(
                "correspondences for pair ({}, {}) declare image sizes {:?}/{:?} that do not match the cameras; skipped",
                ref_view.id(),
                nbr.id(),
                set.ref_size,
                set.nbr_size
            ));
            continue;
        }
        matched += set.len();
        per_neighbor.push(NeighborCandidates {
            nbr_view_id: nbr.id(),
            candidates: triangulate_set(&set, cams)?,
        });
    }
    let dist = build_view_distribution(ref_view.id(), &per_neighbor, th);
    let picked = sample(
        &dist,
        opts.samples_per_ref,
        view_seed(opts.seed, ref_view.id()),
    )?;
    let samples: Vec<SampledCandidate> = picked
        .iter()
        .map(|r| SampledCandidate {
            ref_view_id: ref_view.id(),
            nbr_view_id: r.nbr_view_id,
            candidate: per_neighbor[r.neighbor].candidates[r.candidate],
        })
        .collect();
    if samples.is_empty() {
        warnings.push(format!(
            "reference view {} has no eligible correspondences",
            ref_view.id()
        ));
    }
    Ok(ViewOutcome {
        report: ViewReport {
            ref_view_id: ref_view.id(),
            neighbors: neighbors.iter().map(|v| v.id()).collect(),
            matched,
            eligible: dist.len(),
            sampled: samples.len(),
        },
        samples,
        warnings,
    })
}

/// Unit direction from a camera center to `point`.
fn view_direction(view: &CameraView, point: &Vector3<f64>) -> Option<Vector3<f64>> {
    (point - view.center()).try_normalize(1e-12)
}

fn assemble_splat(
    s: &SampledCandidate,
    cams: &CameraSet,
    neighbor_lists: &HashMap<u32, Vec<u32>>,
    colors: &dyn ColorSource,
    opts: &InitOptions,
) -> Result<(SplatInit, bool)> {
    let ref_view = cams.require(s.ref_view_id)?;
    let position = s.candidate.position;
    let rec = &s.candidate.record;
    let sampled_ref = colors.color(ref_view, rec.u_i, rec.v_i);
    let ref_color = sampled_ref.unwrap_or(FALLBACK_COLOR);

    let mut observations = vec![ref_color];
    let mut directions = vec![view_direction(ref_view, &position)
        .ok_or_else(|| Error::InvalidArgument("splat at camera center".into()))?];
    for id in &neighbor_lists[&s.ref_view_id] {
        let nbr = cams.require(*id)?;
        let Ok(proj) = project(&nbr.projection(), &position) else {
            continue;
        };
        if proj.depth_scale <= 0.0 || !nbr.contains_pixel(proj.pixel.x, proj.pixel.y) {
            continue;
        }
        let (Some(c), Some(d)) = (
            colors.color(nbr, proj.pixel.x, proj.pixel.y),
            view_direction(nbr, &position),
        ) else {
            continue;
        };
        observations.push(c);
        directions.push(d);
    }
    let fitted = match opts.dc_mode {
        DcMode::Overwrite => fit_sh(&observations, &directions)?,
        DcMode::Exclude => fit_sh_excluding_dc(&observations, &directions, ref_color)?,
    };
    let splat = SplatInit {
        position,
        sh: init_splat_sh(ref_color, &fitted),
        opacity_logit: inverse_sigmoid(opts.init_opacity),
        scale_log: init_scale(&position, ref_view, opts.k_scale)?,
        rotation: UnitQuaternion::identity(),
    };
    Ok((splat, sampled_ref.is_none()))
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs every stage after camera loading and before export.
pub fn initialize(
    cams: &CameraSet,
    corrs: &dyn CorrespondenceSource,
    colors: &dyn ColorSource,
    opts: &InitOptions,
) -> Result<(Vec<SplatInit>, PipelineReport)> {
    opts.validate()?;
    let th = opts.thresholds()?;
    let mut report = PipelineReport::default();
    with_workers(opts.workers, || -> Result<_> {
        let refs = report.time("select_reference_views", || {
            select_reference_views(cams, opts.max_ref_views)
        });

        let outcomes = report.time("correspondences", || {
            refs.par_iter()
                .map(|id| process_reference(cams.require(*id)?, cams, corrs, opts, &th))
                .collect::<Result<Vec<_>>>()
        })?;

        let mut neighbor_lists = HashMap::new();
        let mut per_view = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            report.warnings.extend(o.warnings);
            neighbor_lists.insert(o.report.ref_view_id, o.report.neighbors.clone());
            per_view.push((o.report.ref_view_id, o.samples));
            report.views.push(o.report);
        }
        report.views.sort_by_key(|v| v.ref_view_id);
        let global = aggregate_global(per_view)?;

        let assembled = report.time("sh_fit_and_assembly", || {
            global
                .candidates
                .par_iter()
                .map(|s| assemble_splat(s, cams, &neighbor_lists, colors, opts))
                .collect::<Result<Vec<_>>>()
        })?;
        let missing_colors = assembled.iter().filter(|(_, m)| *m).count();
        if missing_colors > 0 {
            report.warnings.push(format!(
                "{missing_colors} splats had no reference color; used mid-gray"
            ));
        }
        let mut splats: Vec<SplatInit> = assembled.into_iter().map(|(s, _)| s).collect();

        if opts.noise_sigma_xyz > 0.0 || opts.noise_sigma_rgb > 0.0 {
            splats = report.time("perturb", || {
                perturb(
                    &splats,
                    opts.noise_sigma_xyz,
                    opts.noise_sigma_rgb,
                    opts.seed,
                )
            })?;
        }
        report.total_splats = splats.len();
        Ok(splats)
    })?
    .map(|splats| (splats, report))
}

/// Loads inputs from disk, runs [`initialize`] and writes the PLY.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    config.options.validate()?;
    let start = Instant::now();
    let cams = load_colmap(&config.colmap_dir)?;
    let load_cameras = start.elapsed().as_secs_f64();

    let mut warnings = Vec::new();
    let start = Instant::now();
    let image_colors;
    let colors: &dyn ColorSource = match &config.image_dir {
        Some(dir) => {
            image_colors = ImageColors::load(dir, &cams)?;
            &image_colors
        }
        None => {
            warnings.push("no image directory given; all colors set to mid-gray".to_string());
            &ConstantColor(FALLBACK_COLOR)
        }
    };
    let load_images = start.elapsed().as_secs_f64();

    let corrs = CorrespondenceDir::new(&config.corr_dir);
    let (splats, mut report) = initialize(&cams, &corrs, colors, &config.options)?;
    report.warnings.splice(0..0, warnings);
    report.timings.splice(
        0..0,
        [
            StageTiming {
                stage: "load_cameras".into(),
                seconds: load_cameras,
            },
            StageTiming {
                stage: "load_images".into(),
                seconds: load_images,
            },
        ],
    );
    report.time("export", || write_ply(&splats, &config.output_path))?;
    Ok(report)
}
