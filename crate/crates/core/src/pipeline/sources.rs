use std::collections::HashMap;
use std::path::{Path, PathBuf};

use image::RgbImage;
use rayon::prelude::*;

use crate::camera::{CameraSet, CameraView};
use crate::correspondence::{corr_path, read_corr, CorrespondenceSet};
use crate::{Error, Result};

/// Supplies the correspondences of one (reference, neighbor) pair.
pub trait CorrespondenceSource: Sync {
    /// `Ok(None)` when the pair is not available.
    fn load(&self, ref_view_id: u32, nbr_view_id: u32) -> Result<Option<CorrespondenceSet>>;
}

/// Reads `corr_<ref>_<nbr>.edgc` files from a directory.
#[derive(Debug, Clone)]
pub struct CorrespondenceDir {
    dir: PathBuf,
}

impl CorrespondenceDir {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
}

impl CorrespondenceSource for CorrespondenceDir {
    fn load(&self, ref_view_id: u32, nbr_view_id: u32) -> Result<Option<CorrespondenceSet>> {
        let path = corr_path(&self.dir, ref_view_id, nbr_view_id);
        if !path.exists() {
            return Ok(None);
        }
        read_corr(&path).map(Some)
    }
}

/// In-memory correspondences keyed by `(ref, nbr)`.
impl CorrespondenceSource for HashMap<(u32, u32), CorrespondenceSet> {
    fn load(&self, ref_view_id: u32, nbr_view_id: u32) -> Result<Option<CorrespondenceSet>> {
        Ok(self.get(&(ref_view_id, nbr_view_id)).cloned())
    }
}

/// Supplies the observed RGB color (in `[0, 1]`) at a pixel of a view.
pub trait ColorSource: Sync {
    fn color(&self, view: &CameraView, u: f64, v: f64) -> Option<[f64; 3]>;
}

/// The same color everywhere; used when no images are available.
#[derive(Debug, Clone, Copy)]
pub struct ConstantColor(pub [f64; 3]);

impl ColorSource for ConstantColor {
    fn color(&self, view: &CameraView, u: f64, v: f64) -> Option<[f64; 3]> {
        view.contains_pixel(u, v).then_some(self.0)
    }
}

/// 8-bit RGB images matched to views by image name, sampled at the pixel
/// containing the query point.
pub struct ImageColors {
    images: HashMap<u32, RgbImage>,
}

impl ImageColors {
    pub fn load(dir: impl AsRef<Path>, cams: &CameraSet) -> Result<Self> {
        let dir = dir.as_ref();
        let images = cams
            .views()
            .par_iter()
            .map(|v| {
                let path = dir.join(v.image_name());
                let img = image::open(&path)
                    .map_err(|e| Error::Image {
                        path: path.clone(),
                        message: e.to_string(),
                    })?
                    .into_rgb8();
                if img.dimensions() != (v.width(), v.height()) {
                    return Err(Error::Image {
                        path,
                        message: format!(
                            "size {}x{} does not match camera {}x{}",
                            img.width(),
                            img.height(),
                            v.width(),
                            v.height()
                        ),
                    });
                }
                Ok((v.id(), img))
            })
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(Self { images })
    }
}

impl ColorSource for ImageColors {
    fn color(&self, view: &CameraView, u: f64, v: f64) -> Option<[f64; 3]> {
        if !view.contains_pixel(u, v) {
            return None;
        }
        let img = self.images.get(&view.id())?;
        let p = img.get_pixel(u.floor() as u32, v.floor() as u32);
        Some(p.0.map(|c| c as f64 / 255.0))
    }
}
