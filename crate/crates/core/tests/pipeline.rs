//! In-memory pipeline runs on synthetic scenes.

mod common;

use std::collections::HashMap;

use common::{render_all_pairs, PointIndex};
use edgs_init::correspondence::CorrespondenceSet;
use edgs_init::pipeline::{initialize, ConstantColor, InitOptions};
use edgs_init::sh::{dc_to_rgb, DcMode};
use edgs_init::splat::{inverse_sigmoid, write_ply};
use edgs_init::synth::{make_scene, ConfidenceModel, Layout, SceneOracle};
use edgs_init::Error;

fn scene() -> (SceneOracle, HashMap<(u32, u32), CorrespondenceSet>) {
    let s = make_scene(4_000, 6, Layout::Ring, 17).unwrap();
    let pairs = render_all_pairs(&s, 2, 0.0, ConfidenceModel::ConstantOne);
    (s, pairs)
}

fn opts() -> InitOptions {
    InitOptions {
        samples_per_ref: 500,
        seed: 3,
        ..InitOptions::default()
    }
}

#[test]
fn report_counts_add_up() {
    let (s, pairs) = scene();
    let (splats, report) = initialize(&s.cameras, &pairs, &s.colors(0.5), &opts()).unwrap();
    assert_eq!(report.views.len(), 6);
    assert_eq!(report.total_splats, splats.len());
    assert_eq!(
        report.views.iter().map(|v| v.sampled).sum::<usize>(),
        splats.len()
    );
    for v in &report.views {
        assert_eq!(v.neighbors.len(), 2);
        assert!(v.eligible <= v.matched);
        assert_eq!(v.sampled, v.eligible.min(500));
        let expect: usize = v
            .neighbors
            .iter()
            .map(|n| pairs[&(v.ref_view_id, *n)].len())
            .sum();
        assert_eq!(v.matched, expect);
    }
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    let ids: Vec<u32> = report.views.iter().map(|v| v.ref_view_id).collect();
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn splats_land_on_scene_points() {
    let (s, pairs) = scene();
    let (splats, _) = initialize(&s.cameras, &pairs, &s.colors(0.5), &opts()).unwrap();
    let index = PointIndex::new(s.points.iter().map(|p| p.position).collect(), 0.05);
    for sp in &splats {
        let (k, d) = index.nearest(&sp.position).unwrap();
        assert!(d < 1e-6, "distance {d}");
        for c in 0..3 {
            assert!((dc_to_rgb(sp.sh.0[(0, c)]) - s.points[k].color[c]).abs() < 1e-9);
        }
        assert_eq!(sp.opacity_logit, inverse_sigmoid(0.1));
        assert_eq!(sp.rotation, nalgebra::UnitQuaternion::identity());
        assert!(sp.validate().is_ok());
    }
}

#[test]
fn missing_pair_is_skipped_with_warning() {
    let (s, mut pairs) = scene();
    let key = *pairs.keys().min().unwrap();
    pairs.remove(&key);
    let (_, report) = initialize(&s.cameras, &pairs, &s.colors(0.5), &opts()).unwrap();
    assert!(report
        .warnings
        .iter()
        .any(|w| w.contains(&format!("({}, {})", key.0, key.1))));
    let view = report
        .views
        .iter()
        .find(|v| v.ref_view_id == key.0)
        .unwrap();
    assert_eq!(view.matched, pairs[&(key.0, view.neighbors[1])].len());
}

#[test]
fn nothing_eligible_is_an_error() {
    let (s, mut pairs) = scene();
    for set in pairs.values_mut() {
        for r in &mut set.records {
            r.confidence = 0.05;
        }
    }
    let err = initialize(&s.cameras, &pairs, &s.colors(0.5), &opts()).unwrap_err();
    assert!(matches!(err, Error::NoEligibleCorrespondences));
    let empty: HashMap<(u32, u32), CorrespondenceSet> = HashMap::new();
    let err = initialize(&s.cameras, &empty, &s.colors(0.5), &opts()).unwrap_err();
    assert!(matches!(err, Error::NoEligibleCorrespondences));
}

fn ply_bytes(splats: &[edgs_init::splat::SplatInit]) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("o.ply");
    write_ply(splats, &path).unwrap();
    std::fs::read(path).unwrap()
}

#[test]
fn output_is_identical_across_runs_and_worker_counts() {
    let (s, pairs) = scene();
    let colors = s.colors(0.5);
    let run = |workers| {
        let o = InitOptions {
            workers,
            noise_sigma_xyz: 0.01,
            noise_sigma_rgb: 0.02,
            ..opts()
        };
        ply_bytes(&initialize(&s.cameras, &pairs, &colors, &o).unwrap().0)
    };
    let one = run(Some(1));
    assert_eq!(one, run(Some(1)));
    assert_eq!(one, run(Some(4)));
    assert_eq!(one, run(None));
}

#[test]
fn seed_changes_the_draw() {
    let (s, pairs) = scene();
    let colors = s.colors(0.5);
    let a = initialize(&s.cameras, &pairs, &colors, &opts()).unwrap().0;
    let b = initialize(
        &s.cameras,
        &pairs,
        &colors,
        &InitOptions { seed: 4, ..opts() },
    )
    .unwrap()
    .0;
    assert_eq!(a.len(), b.len());
    assert_ne!(a, b);
}

#[test]
fn exclude_mode_keeps_reference_color() {
    let (s, pairs) = scene();
    let o = InitOptions {
        dc_mode: DcMode::Exclude,
        ..opts()
    };
    let (splats, _) = initialize(&s.cameras, &pairs, &s.colors(0.5), &o).unwrap();
    let index = PointIndex::new(s.points.iter().map(|p| p.position).collect(), 0.05);
    for sp in &splats {
        let (k, _) = index.nearest(&sp.position).unwrap();
        for c in 0..3 {
            assert!((dc_to_rgb(sp.sh.0[(0, c)]) - s.points[k].color[c]).abs() < 1e-9);
        }
        // Every observation has the same color, so nothing view-dependent is fit.
        for r in 1..16 {
            for c in 0..3 {
                assert!(sp.sh.0[(r, c)].abs() < 1e-9);
            }
        }
    }
}

#[test]
fn constant_color_without_images() {
    let (s, pairs) = scene();
    let (splats, report) =
        initialize(&s.cameras, &pairs, &ConstantColor([0.5; 3]), &opts()).unwrap();
    assert!(report.warnings.is_empty());
    for sp in &splats {
        assert!(sp.sh.dc().iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn sample_cap_bounds_total() {
    let (s, pairs) = scene();
    let o = InitOptions {
        samples_per_ref: 7,
        max_ref_views: 4,
        ..opts()
    };
    let (splats, report) = initialize(&s.cameras, &pairs, &s.colors(0.5), &o).unwrap();
    assert_eq!(report.views.len(), 4);
    assert_eq!(splats.len(), 28);
}
