//! Gaussian splat parameters, initialization rules and noise perturbation.

mod ply;

pub use ply::{read_ply, write_ply, PLY_PROPERTIES};

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::camera::{project, CameraView};
use crate::sh::{dc_to_rgb, rgb_to_dc, ShCoefficients};
use crate::{Error, Result};

pub const DEFAULT_OPACITY: f64 = 0.1;
pub const DEFAULT_K_SCALE: f64 = 1.0;

/// One initialized Gaussian. Opacity and scales are stored pre-activation.
#[derive(Debug, Clone, PartialEq)]
pub struct SplatInit {
    pub position: Vector3<f64>,
    pub sh: ShCoefficients,
    pub opacity_logit: f64,
    pub scale_log: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl SplatInit {
    /// Checks the unit-quaternion and finite-scale invariants.
    pub fn validate(&self) -> Result<()> {
        let qn = self.rotation.as_ref().norm();
        if (qn - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "rotation quaternion has norm {qn}"
            )));
        }
        if !self
            .scale_log
            .iter()
            .all(|s| s.is_finite() && s.exp() > 0.0)
        {
            return Err(Error::InvalidArgument("non-finite log scale".into()));
        }
        if !self.position.iter().all(|v| v.is_finite())
            || !self.sh.is_finite()
            || !self.opacity_logit.is_finite()
        {
            return Err(Error::InvalidArgument("non-finite splat parameter".into()));
        }
        Ok(())
    }

    pub fn covariance(&self) -> Matrix3<f64> {
        covariance_from(&self.scale_log, &self.rotation)
    }
}

pub fn inverse_sigmoid(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Isotropic log-scale `ln(k * d / f)` where `d` is the distance to the
/// reference camera center and `f` its mean focal length in pixels.
pub fn init_scale(
    position: &Vector3<f64>,
    ref_cam: &CameraView,
    k_scale: f64,
) -> Result<Vector3<f64>> {
    let proj = project(&ref_cam.projection(), position)?;
    if proj.depth_scale <= 0.0 {
        return Err(Error::InvalidArgument(
            "splat lies behind its reference camera".into(),
        ));
    }
    let d = (position - ref_cam.center()).norm();
    let s = k_scale * d / ref_cam.mean_focal();
    Ok(Vector3::repeat(s.ln()))
}

/// `R S Sᵀ Rᵀ` with `S = diag(exp(scale_log))`.
pub fn covariance_from(scale_log: &Vector3<f64>, rotation: &UnitQuaternion<f64>) -> Matrix3<f64> {
    let r = rotation.to_rotation_matrix().into_inner();
    let m = r * Matrix3::from_diagonal(&scale_log.map(f64::exp));
    m * m.transpose()
}

/// Adds `N(0, sigma_xyz)` to positions and `N(0, sigma_rgb)` to the DC color
/// (in `[0, 1]` color space, clamped). Noise for splat `k` is drawn from its own
/// stream, so results do not depend on how the list is partitioned.
pub fn perturb(
    splats: &[SplatInit],
    sigma_xyz: f64,
    sigma_rgb: f64,
    seed: u64,
) -> Result<Vec<SplatInit>> {
    if !(sigma_xyz >= 0.0 && sigma_rgb >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise sigmas must be non-negative, got ({sigma_xyz}, {sigma_rgb})"
        )));
    }
    let pos_noise = Normal::new(0.0, sigma_xyz)
        .map_err(|_| Error::InvalidArgument(format!("invalid sigma_xyz {sigma_xyz}")))?;
    let rgb_noise = Normal::new(0.0, sigma_rgb)
        .map_err(|_| Error::InvalidArgument(format!("invalid sigma_rgb {sigma_rgb}")))?;
    Ok(splats
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut out = s.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            if sigma_xyz > 0.0 {
                for v in out.position.iter_mut() {
                    *v += pos_noise.sample(&mut rng);
                }
            }
            if sigma_rgb > 0.0 {
                for c in 0..3 {
                    let rgb = dc_to_rgb(out.sh.0[(0, c)]) + rgb_noise.sample(&mut rng);
                    out.sh.0[(0, c)] = rgb_to_dc(rgb.clamp(0.0, 1.0));
                }
            }
            out
        })
        .collect())
}
