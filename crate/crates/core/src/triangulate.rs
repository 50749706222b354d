//! Two-view linear triangulation and reprojection errors.
//!
//! For a pixel `(u, v)` observed by a camera with projection rows `p0, p1, p2`,
//! eliminating the homogeneous scale gives two linear equations in the world
//! point, `(p0 - u p2) · [x; 1] = 0` and `(p1 - v p2) · [x; 1] = 0`. Stacking
//! both views yields a 4x3 system `A x = -b`, where `b` collects the fourth
//! homogeneous column. The singular values of `A` gate out near-parallel rays
//! and the least-squares solution comes from a Householder QR factorization.

use nalgebra::{Matrix4x3, Vector2, Vector3, Vector4};
use rayon::prelude::*;

use crate::camera::{project, to_ndc, CameraSet, ProjectionMatrix};
use crate::correspondence::{CorrespondenceSet, MatchRecord};
use crate::{Error, Result};

pub const MIN_BASELINE: f64 = 1e-9;
pub const MAX_CONDITION: f64 = 1e12;

/// A triangulated match with its per-view reprojection errors (NDC units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangulatedCandidate {
    pub position: Vector3<f64>,
    pub record: MatchRecord,
    pub eps_i: f64,
    pub eps_j: f64,
    pub behind_camera: bool,
}

impl TriangulatedCandidate {
    /// `max(eps_i, eps_j)`, the cross-view consistency error.
    pub fn max_error(&self) -> f64 {
        self.eps_i.max(self.eps_j)
    }
}

fn elimination_rows(p: &ProjectionMatrix, pix: &Vector2<f64>) -> [Vector4<f64>; 2] {
    let m = p.entries();
    let r0: Vector4<f64> = m.row(0).transpose();
    let r1: Vector4<f64> = m.row(1).transpose();
    let r2: Vector4<f64> = m.row(2).transpose();
    [r0 - r2 * pix.x, r1 - r2 * pix.y]
}

/// Least-squares intersection of the two viewing rays.
pub fn triangulate_pair(
    p_i: &ProjectionMatrix,
    p_j: &ProjectionMatrix,
    pix_i: &Vector2<f64>,
    pix_j: &Vector2<f64>,
) -> Result<Vector3<f64>> {
    if (p_i.center() - p_j.center()).norm() < MIN_BASELINE {
        return Err(Error::ZeroBaseline);
    }
    let [a0, a1] = elimination_rows(p_i, pix_i);
    let [a2, a3] = elimination_rows(p_j, pix_j);
    let rows = [a0, a1, a2, a3];
    let mut a = Matrix4x3::zeros();
    let mut rhs = Vector4::zeros();
    for (r, row) in rows.iter().enumerate() {
        a.set_row(r, &row.fixed_rows::<3>(0).transpose());
        rhs[r] = -row[3];
    }
    let s = a.singular_values();
    let (smax, smin) = (s.max(), s.min());
    let condition = smax / smin;
    if smin <= 0.0 || condition.is_nan() || condition > MAX_CONDITION {
        return Err(Error::NearParallelRays);
    }
    let qr = a.qr();
    let x = qr
        .r()
        .solve_upper_triangular(&(qr.q().transpose() * rhs))
        .ok_or(Error::NearParallelRays)?;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NearParallelRays);
    }
    Ok(x)
}

/// Distance in NDC between the projection of `point` and the observed pixel,
/// `+inf` when the point is on or behind the camera plane.
pub fn reprojection_error(
    p: &ProjectionMatrix,
    point: &Vector3<f64>,
    pixel: &Vector2<f64>,
    width: u32,
    height: u32,
) -> f64 {
    match project(p, point) {
        Ok(proj) if proj.depth_scale > 0.0 => {
            (to_ndc(&proj.pixel, width, height) - to_ndc(pixel, width, height)).norm()
        }
        _ => f64::INFINITY,
    }
}

fn in_front(p: &ProjectionMatrix, point: &Vector3<f64>) -> bool {
    matches!(project(p, point), Ok(proj) if proj.depth_scale > 0.0)
}

/// Triangulates a single record; degenerate geometry yields a poisoned
/// candidate (NaN position, infinite errors) instead of an error.
pub fn triangulate_record(
    p_i: &ProjectionMatrix,
    p_j: &ProjectionMatrix,
    size_i: (u32, u32),
    size_j: (u32, u32),
    record: &MatchRecord,
) -> TriangulatedCandidate {
    let pix_i = Vector2::new(record.u_i, record.v_i);
    let pix_j = Vector2::new(record.u_j, record.v_j);
    match triangulate_pair(p_i, p_j, &pix_i, &pix_j) {
        Ok(position) => {
            let behind_camera = !(in_front(p_i, &position) && in_front(p_j, &position));
            TriangulatedCandidate {
                position,
                record: *record,
                eps_i: reprojection_error(p_i, &position, &pix_i, size_i.0, size_i.1),
                eps_j: reprojection_error(p_j, &position, &pix_j, size_j.0, size_j.1),
                behind_camera,
            }
        }
        Err(_) => TriangulatedCandidate {
            position: Vector3::repeat(f64::NAN),
            record: *record,
            eps_i: f64::INFINITY,
            eps_j: f64::INFINITY,
            behind_camera: false,
        },
    }
}

/// One candidate per record, in record order.
pub fn triangulate_set(
    set: &CorrespondenceSet,
    cams: &CameraSet,
) -> Result<Vec<TriangulatedCandidate>> {
    let vi = cams.require(set.ref_view_id)?;
    let vj = cams.require(set.nbr_view_id)?;
    let (p_i, p_j) = (vi.projection(), vj.projection());
    let (size_i, size_j) = ((vi.width(), vi.height()), (vj.width(), vj.height()));
    Ok(set
        .records
        .par_iter()
        .map(|r| triangulate_record(&p_i, &p_j, size_i, size_j, r))
        .collect())
}
