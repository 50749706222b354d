//! Degree-3 real spherical harmonics and per-splat least-squares fitting.
//!
//! Basis ordering and signs follow the convention of common splat trainers:
//! l-major, `m = -l..=l` within each band. Rendered color is
//! `0.5 + sum_k Y_k(d) H_k`.

use nalgebra::{DMatrix, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SH_COEFFS: usize = 16;

/// `1 / (2 sqrt(pi))`
pub const SH_C0: f64 = 0.28209479177387814;
pub const SH_C1: f64 = 0.4886025119029199;
pub const SH_C2: [f64; 5] = [
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
];
pub const SH_C3: [f64; 7] = [
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.445305721320277,
    -0.5900435899266435,
];

const UNIT_TOL: f64 = 1e-6;

/// Basis values for one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShBasisRow(pub [f64; SH_COEFFS]);

/// 16 coefficients x RGB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShCoefficients(pub SMatrix<f64, SH_COEFFS, 3>);

impl ShCoefficients {
    pub fn zeros() -> Self {
        Self(SMatrix::zeros())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dc(&self) -> [f64; 3] {
        [self.0[(0, 0)], self.0[(0, 1)], self.0[(0, 2)]]
    }

    /// Color seen from `direction` under the `0.5 + Y H` convention.
    pub fn color(&self, direction: &Vector3<f64>) -> Result<[f64; 3]> {
        let y = sh_basis(direction)?;
        let mut out = [0.5; 3];
        for (k, yk) in y.0.iter().enumerate() {
            for (c, o) in out.iter_mut().enumerate() {
                *o += yk * self.0[(k, c)];
            }
        }
        Ok(out)
    }
}

pub(crate) fn basis_unchecked(d: &Vector3<f64>) -> [f64; SH_COEFFS] {
    let (x, y, z) = (d.x, d.y, d.z);
    let (xx, yy, zz) = (x * x, y * y, z * z);
    [
        SH_C0,
        -SH_C1 * y,
        SH_C1 * z,
        -SH_C1 * x,
        SH_C2[0] * x * y,
        SH_C2[1] * y * z,
        SH_C2[2] * (2.0 * zz - xx - yy),
        SH_C2[3] * x * z,
        SH_C2[4] * (xx - yy),
        SH_C3[0] * y * (3.0 * xx - yy),
        SH_C3[1] * x * y * z,
        SH_C3[2] * y * (4.0 * zz - xx - yy),
        SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
        SH_C3[4] * x * (4.0 * zz - xx - yy),
        SH_C3[5] * z * (xx - yy),
        SH_C3[6] * x * (xx - 3.0 * yy),
    ]
}

pub fn sh_basis(direction: &Vector3<f64>) -> Result<ShBasisRow> {
    let n = direction.norm();
    if n.is_nan() || (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitDirection(n));
    }
    Ok(ShBasisRow(basis_unchecked(direction)))
}

/// `Y` with one row per direction.
pub fn basis_matrix(directions: &[Vector3<f64>]) -> Result<DMatrix<f64>> {
    let mut y = DMatrix::zeros(directions.len(), SH_COEFFS);
    for (r, d) in directions.iter().enumerate() {
        let row = sh_basis(d)?;
        for (k, v) in row.0.iter().enumerate() {
            y[(r, k)] = *v;
        }
    }
    Ok(y)
}

/// Minimum-norm least-squares solve `A⁺ B` through the SVD, discarding singular
/// values below `max(rows, cols) * eps * sigma_max`.
fn pinv_solve(a: DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let cutoff = a.nrows().max(a.ncols()) as f64 * f64::EPSILON;
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(b, cutoff * smax)
        .expect("SVD computed with both U and V")
}

fn check_inputs(observations: &[[f64; 3]], directions: &[Vector3<f64>]) -> Result<()> {
    if observations.is_empty() {
        return Err(Error::InvalidArgument("no color observations".into()));
    }
    if observations.len() != directions.len() {
        return Err(Error::InvalidArgument(format!(
            "{} observations but {} directions",
            observations.len(),
            directions.len()
        )));
    }
    Ok(())
}

/// `argmin_H ||Y H - O||_F`, minimum-norm when underdetermined.
pub fn fit_sh(observations: &[[f64; 3]], directions: &[Vector3<f64>]) -> Result<ShCoefficients> {
    check_inputs(observations, directions)?;
    let y = basis_matrix(directions)?;
    let o = DMatrix::from_fn(observations.len(), 3, |r, c| observations[r][c]);
    let h = pinv_solve(y, &o);
    Ok(ShCoefficients(SMatrix::from_fn(|r, c| h[(r, c)])))
}

/// Fits only the 15 view-dependent coefficients to the residual left after the
/// DC term reproduces `ref_color`; the returned DC row is zero.
pub fn fit_sh_excluding_dc(
    observations: &[[f64; 3]],
    directions: &[Vector3<f64>],
    ref_color: [f64; 3],
) -> Result<ShCoefficients> {
    check_inputs(observations, directions)?;
    let y = basis_matrix(directions)?;
    let rest = y.columns(1, SH_COEFFS - 1).into_owned();
    let o = DMatrix::from_fn(observations.len(), 3, |r, c| {
        observations[r][c] - ref_color[c]
    });
    let h = pinv_solve(rest, &o);
    Ok(ShCoefficients(SMatrix::from_fn(|r, c| {
        if r == 0 {
            0.0
        } else {
            h[(r - 1, c)]
        }
    })))
}

/// Which coefficients the pseudoinverse fit supplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DcMode {
    /// Fit all 16 rows, then overwrite row 0 from the reference color.
    #[default]
    Overwrite,
    /// Drop the DC column from `Y` and fit rows 1..16 to `O - ref_color`.
    Exclude,
}

pub fn rgb_to_dc(channel: f64) -> f64 {
    (channel - 0.5) / SH_C0
}

pub fn dc_to_rgb(dc: f64) -> f64 {
    0.5 + SH_C0 * dc
}

/// Replaces row 0 with the DC encoding of `ref_color`; rows 1..16 are copied.
pub fn init_splat_sh(ref_color: [f64; 3], fitted: &ShCoefficients) -> ShCoefficients {
    let mut out = *fitted;
    for (c, v) in ref_color.iter().enumerate() {
        out.0[(0, c)] = rgb_to_dc(*v);
    }
    out
}
