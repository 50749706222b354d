//! `edgs-init`: dense Gaussian splat initialization from COLMAP poses and
//! EDGC correspondence files.
//!
//! Exit codes: 0 success, 1 I/O or input error, 2 configuration error,
//! 3 no eligible correspondences anywhere in the scene.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use edgs_init::camera::load_colmap;
use edgs_init::pipeline::{
    build_plan, run_pipeline, write_plan, InitOptions, PipelineConfig, DEFAULT_MAX_REF_VIEWS,
    DEFAULT_NUM_NEIGHBORS,
};
use edgs_init::sampling::{DEFAULT_SAMPLES_PER_REF, DEFAULT_TAU_CORR, DEFAULT_TAU_PROJ};
use edgs_init::sh::DcMode;
use edgs_init::splat::{DEFAULT_K_SCALE, DEFAULT_OPACITY};
use edgs_init::Error;

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum DcModeArg {
    Overwrite,
    Exclude,
}

#[derive(Debug, Parser)]
#[command(name = "edgs-init", version, about)]
struct Args {
    /// Directory holding COLMAP text exports (cameras.txt, images.txt).
    #[arg(long)]
    colmap_dir: PathBuf,
    /// Directory holding corr_<ref>_<nbr>.edgc files.
    #[arg(long, required_unless_present = "emit_plan")]
    corr_dir: Option<PathBuf>,
    /// Output PLY path.
    #[arg(long, required_unless_present = "emit_plan")]
    out: Option<PathBuf>,
    /// Directory of input images, named as in images.txt.
    #[arg(long)]
    images: Option<PathBuf>,
    /// Write the (reference, neighbor) matching plan as JSON and exit.
    #[arg(long, value_name = "PLAN_JSON")]
    emit_plan: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_REF_VIEWS)]
    max_refs: usize,
    #[arg(long, default_value_t = DEFAULT_NUM_NEIGHBORS)]
    neighbors: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_REF)]
    samples_per_ref: usize,
    #[arg(long, default_value_t = DEFAULT_TAU_CORR)]
    tau_corr: f64,
    /// Reprojection threshold in NDC units.
    #[arg(long, default_value_t = DEFAULT_TAU_PROJ)]
    tau_proj: f64,
    #[arg(long, default_value_t = DEFAULT_K_SCALE)]
    k_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma_xyz: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma_rgb: f64,
    #[arg(long, default_value_t = DEFAULT_OPACITY)]
    init_opacity: f64,
    /// How the DC coefficient relates to the pseudoinverse fit.
    #[arg(long, value_enum, default_value = "overwrite")]
    sh_dc_mode: DcModeArg,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Write the run report as JSON.
    #[arg(long, value_name = "F.json")]
    report: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 2,
        Error::NoEligibleCorrespondences => 3,
        _ => 1,
    }
}

fn run(args: Args) -> Result<(), Error> {
    let options = InitOptions {
        max_ref_views: args.max_refs,
        num_neighbors: args.neighbors,
        samples_per_ref: args.samples_per_ref,
        tau_corr: args.tau_corr,
        tau_proj: args.tau_proj,
        k_scale: args.k_scale,
        seed: args.seed,
        noise_sigma_xyz: args.noise_sigma_xyz,
        noise_sigma_rgb: args.noise_sigma_rgb,
        init_opacity: args.init_opacity,
        dc_mode: match args.sh_dc_mode {
            DcModeArg::Overwrite => DcMode::Overwrite,
            DcModeArg::Exclude => DcMode::Exclude,
        },
        workers: args.workers,
    };
    options.validate()?;

    if let Some(plan_path) = &args.emit_plan {
        let cams = load_colmap(&args.colmap_dir)?;
        let plan = build_plan(&cams, options.max_ref_views, options.num_neighbors)?;
        write_plan(&plan, plan_path)?;
        log::info!(
            "wrote {} pairs to {}",
            plan.pairs.len(),
            plan_path.display()
        );
        return Ok(());
    }

    let config = PipelineConfig {
        colmap_dir: args.colmap_dir,
        corr_dir: args.corr_dir.expect("required by clap"),
        output_path: args.out.expect("required by clap"),
        image_dir: args.images,
        options,
    };
    let report = run_pipeline(&config)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    for t in &report.timings {
        log::info!("{:<24} {:>9.3} s", t.stage, t.seconds);
    }
    log::info!(
        "wrote {} splats to {}",
        report.total_splats,
        config.output_path.display()
    );
    if let Some(path) = &args.report {
        report.write_json(path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("edgs-init: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
