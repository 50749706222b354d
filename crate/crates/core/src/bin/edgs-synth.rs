//! `edgs-synth`: write a synthetic scene (COLMAP text, EDGC correspondences
//! and PNG images) for trying `edgs-init` without a real capture.

use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use edgs_init::synth::{make_scene, ConfidenceModel, Layout};

#[derive(Debug, Parser)]
#[command(name = "edgs-synth", version, about)]
struct Args {
    /// Output root; `colmap/`, `corr/` and `images/` are created inside.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5000)]
    points: usize,
    #[arg(long, default_value_t = 8)]
    cameras: usize,
    #[arg(long, value_enum, default_value = "ring")]
    layout: Layout,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Neighbor views per reference view to emit correspondences for.
    #[arg(long, default_value_t = 2)]
    neighbors: usize,
    /// Gaussian pixel noise added to the neighbor-image coordinates.
    #[arg(long, default_value_t = 0.0)]
    noise_px: f64,
    #[arg(long, value_enum, default_value = "constant-one")]
    confidence: ConfidenceModel,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let scene = make_scene(args.points, args.cameras, args.layout, args.seed)
        .context("building synthetic scene")?;
    scene.write_colmap(args.out.join("colmap"))?;
    let pairs = scene.write_correspondences(
        args.out.join("corr"),
        args.neighbors,
        args.noise_px,
        args.confidence,
    )?;
    scene.write_images(args.out.join("images"))?;
    log::info!(
        "wrote {} cameras, {} correspondence files and images to {}",
        scene.cameras.len(),
        pairs.len(),
        args.out.display()
    );
    Ok(())
}
