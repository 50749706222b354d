//! Neighbor plan consumed by the external matcher adapter.
//!
//! `plan.json` lists every (reference, neighbor) pair the pipeline will ask
//! for, plus the image-name → view-id map and image sizes, so the adapter can
//! write `corr_<ref>_<nbr>.edgc` files with the right header ids.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::select_reference_views;
use crate::camera::{nearest_neighbors, CameraSet};
use crate::correspondence::corr_file_name;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanPair {
    pub ref_id: u32,
    pub nbr_id: u32,
    pub ref_image: String,
    pub nbr_image: String,
    /// Expected correspondence file name.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborPlan {
    pub pairs: Vec<PlanPair>,
    pub id_map: BTreeMap<String, u32>,
    /// `[width, height]` per image name.
    pub image_sizes: BTreeMap<String, [u32; 2]>,
}

pub fn build_plan(cams: &CameraSet, max_refs: usize, neighbors: usize) -> Result<NeighborPlan> {
    let mut pairs = Vec::new();
    for id in select_reference_views(cams, max_refs) {
        let r = cams.require(id)?;
        for n in nearest_neighbors(r, cams, neighbors)? {
            pairs.push(PlanPair {
                ref_id: r.id(),
                nbr_id: n.id(),
                ref_image: r.image_name().to_string(),
                nbr_image: n.image_name().to_string(),
                file: corr_file_name(r.id(), n.id()),
            });
        }
    }
    Ok(NeighborPlan {
        pairs,
        id_map: cams
            .iter()
            .map(|v| (v.image_name().to_string(), v.id()))
            .collect(),
        image_sizes: cams
            .iter()
            .map(|v| (v.image_name().to_string(), [v.width(), v.height()]))
            .collect(),
    })
}

pub fn write_plan(plan: &NeighborPlan, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text =
        serde_json::to_string_pretty(plan).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
