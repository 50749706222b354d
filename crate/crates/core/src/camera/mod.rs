//! Pinhole cameras, projection and pose-proximity neighbor selection.
//!
//! Conventions: rotations and translations map world to camera coordinates,
//! the camera looks down its +z axis with x to the right and y down, and
//! pixel coordinates have their origin at the top-left image corner. A
//! [`ProjectionMatrix`] is the 3x4 column-vector matrix `K [R | t]`.

mod colmap;

pub use colmap::{load_colmap, write_colmap};

use nalgebra::{Matrix3, Matrix3x4, Vector2, Vector3, Vector4};

use crate::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-8;

/// Pose and intrinsics of one input image.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraView {
    id: u32,
    image_name: String,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    focal_x: f64,
    focal_y: f64,
    principal_x: f64,
    principal_y: f64,
    width: u32,
    height: u32,
}

/// Intrinsic parameters of a pinhole camera, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub focal_x: f64,
    pub focal_y: f64,
    pub principal_x: f64,
    pub principal_y: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraView {
    pub fn new(
        id: u32,
        image_name: impl Into<String>,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        intrinsics: Intrinsics,
    ) -> Result<Self> {
        let Intrinsics {
            focal_x,
            focal_y,
            principal_x,
            principal_y,
            width,
            height,
        } = intrinsics;
        let orth_err = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if orth_err.is_nan() || orth_err > ORTHONORMAL_TOL {
            return Err(Error::InvalidCamera(format!(
                "view {id}: rotation is not orthonormal (max |RᵀR - I| = {orth_err:e})"
            )));
        }
        if (rotation.determinant() - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidCamera(format!(
                "view {id}: rotation has determinant {}",
                rotation.determinant()
            )));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidCamera(format!(
                "view {id}: non-finite translation"
            )));
        }
        if !(focal_x > 0.0 && focal_y > 0.0 && focal_x.is_finite() && focal_y.is_finite()) {
            return Err(Error::InvalidCamera(format!(
                "view {id}: focal lengths must be positive, got ({focal_x}, {focal_y})"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidCamera(format!("view {id}: empty image size")));
        }
        if !((0.0..=width as f64).contains(&principal_x)
            && (0.0..=height as f64).contains(&principal_y))
        {
            return Err(Error::InvalidCamera(format!(
                "view {id}: principal point ({principal_x}, {principal_y}) outside {width}x{height} image"
            )));
        }
        Ok(Self {
            id,
            image_name: image_name.into(),
            rotation,
            translation,
            focal_x,
            focal_y,
            principal_x,
            principal_y,
            width,
            height,
        })
    }

    /// A camera at `center` whose optical axis points at `target`. Image y runs
    /// against `up`; when the axis is parallel to `up`, world y is used instead.
    pub fn look_at(
        id: u32,
        image_name: impl Into<String>,
        center: Vector3<f64>,
        target: Vector3<f64>,
        up: Vector3<f64>,
        intrinsics: Intrinsics,
    ) -> Result<Self> {
        let fwd = (target - center)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera(format!("view {id}: target equals center")))?;
        let right = up
            .cross(&fwd)
            .try_normalize(1e-9)
            .or_else(|| Vector3::y().cross(&fwd).try_normalize(1e-9))
            .ok_or_else(|| Error::InvalidCamera(format!("view {id}: degenerate up vector")))?;
        let right = -right;
        let down = fwd.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), fwd.transpose()]);
        CameraView::new(id, image_name, rotation, -(rotation * center), intrinsics)
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn image_name(&self) -> &str {
        &self.image_name
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics {
            focal_x: self.focal_x,
            focal_y: self.focal_y,
            principal_x: self.principal_x,
            principal_y: self.principal_y,
            width: self.width,
            height: self.height,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn mean_focal(&self) -> f64 {
        0.5 * (self.focal_x + self.focal_y)
    }

    /// Camera center in world coordinates, `-Rᵀ t`.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// The world→camera extrinsic matrix `[R | t]`.
    pub fn extrinsic(&self) -> Matrix3x4<f64> {
        let mut m = Matrix3x4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.set_column(3, &self.translation);
        m
    }

    pub fn calibration(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.focal_x,
            0.0,
            self.principal_x,
            0.0,
            self.focal_y,
            self.principal_y,
            0.0,
            0.0,
            1.0,
        )
    }

    pub fn projection(&self) -> ProjectionMatrix {
        projection_matrix(self)
    }

    /// True when `(u, v)` lies inside `[0, width) x [0, height)`.
    pub fn contains_pixel(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }

    /// Maps a pixel to normalized device coordinates, `[-1, 1]` per axis.
    pub fn to_ndc(&self, pixel: &Vector2<f64>) -> Vector2<f64> {
        to_ndc(pixel, self.width, self.height)
    }
}

pub(crate) fn to_ndc(pixel: &Vector2<f64>, width: u32, height: u32) -> Vector2<f64> {
    Vector2::new(
        2.0 * pixel.x / width as f64 - 1.0,
        2.0 * pixel.y / height as f64 - 1.0,
    )
}

/// A 3x4 matrix mapping homogeneous world points to homogeneous pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionMatrix(Matrix3x4<f64>);

impl ProjectionMatrix {
    /// Wraps a raw matrix; the left 3x3 block must be invertible.
    pub fn new(entries: Matrix3x4<f64>) -> Result<Self> {
        let left: Matrix3<f64> = entries.fixed_view::<3, 3>(0, 0).into_owned();
        if left.try_inverse().is_none() {
            return Err(Error::InvalidCamera(
                "projection matrix has a singular 3x3 block".into(),
            ));
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &Matrix3x4<f64> {
        &self.0
    }

    /// Optical center, the right null vector of the matrix.
    pub fn center(&self) -> Vector3<f64> {
        let left: Matrix3<f64> = self.0.fixed_view::<3, 3>(0, 0).into_owned();
        let last: Vector3<f64> = self.0.column(3).into_owned();
        // Invertibility is a construction invariant.
        let inv = left.try_inverse().expect("singular projection block");
        -(inv * last)
    }
}

pub fn projection_matrix(view: &CameraView) -> ProjectionMatrix {
    ProjectionMatrix(view.calibration() * view.extrinsic())
}

/// Result of projecting a world point: the pixel and the homogeneous scale `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub pixel: Vector2<f64>,
    pub depth_scale: f64,
}

impl Projection {
    pub fn is_behind(&self) -> bool {
        self.depth_scale < 0.0
    }
}

/// Projects `point`; `|w| < 1e-12` is an error, negative `w` is reported through
/// [`Projection::is_behind`].
pub fn project(p: &ProjectionMatrix, point: &Vector3<f64>) -> Result<Projection> {
    let h = p.0 * Vector4::new(point.x, point.y, point.z, 1.0);
    let w = h.z;
    if w.abs() < 1e-12 {
        return Err(Error::AtCameraPlane);
    }
    Ok(Projection {
        pixel: Vector2::new(h.x / w, h.y / w),
        depth_scale: w,
    })
}

/// Frobenius norm of the difference between the two `[R | t]` matrices.
pub fn camera_distance(a: &CameraView, b: &CameraView) -> f64 {
    (a.extrinsic() - b.extrinsic()).norm()
}

/// An ordered, non-empty collection of views with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraSet {
    views: Vec<CameraView>,
}

impl CameraSet {
    pub fn new(views: Vec<CameraView>) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::NoRegisteredImages);
        }
        let mut ids: Vec<u32> = views.iter().map(|v| v.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidCamera(format!("duplicate view id {}", w[0])));
        }
        Ok(Self { views })
    }

    pub fn views(&self) -> &[CameraView] {
        &self.views
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&CameraView> {
        self.views.iter().find(|v| v.id == id)
    }

    pub fn require(&self, id: u32) -> Result<&CameraView> {
        self.get(id).ok_or(Error::UnknownView(id))
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CameraView> {
        self.views.iter()
    }
}

impl<'a> IntoIterator for &'a CameraSet {
    type Item = &'a CameraView;
    type IntoIter = std::slice::Iter<'a, CameraView>;

    fn into_iter(self) -> Self::IntoIter {
        self.views.iter()
    }
}

/// The `count` views closest to `reference` by [`camera_distance`], ascending,
/// ties broken by view id. The reference itself (matched by id) is excluded.
pub fn nearest_neighbors<'a>(
    reference: &CameraView,
    set: &'a CameraSet,
    count: usize,
) -> Result<Vec<&'a CameraView>> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "neighbor count must be at least 1".into(),
        ));
    }
    let mut others: Vec<(f64, &CameraView)> = set
        .iter()
        .filter(|v| v.id != reference.id)
        .map(|v| (camera_distance(reference, v), v))
        .collect();
    if others.is_empty() {
        return Err(Error::NoNeighbors);
    }
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));
    others.truncate(count);
    Ok(others.into_iter().map(|(_, v)| v).collect())
}
