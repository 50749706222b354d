//! Per-reference-view sampling of consistent correspondences.
//!
//! A candidate is eligible when its match confidence exceeds `tau_corr`, its
//! worst reprojection error is below `tau_proj` and it lies in front of both
//! cameras. Each of the two thresholded distributions is uniform over the set
//! it admits, so their product is uniform over the intersection, and the max
//! over neighbors is uniform over the union. When a source pixel is eligible
//! under several neighbors, the most confident candidate represents it.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::triangulate::TriangulatedCandidate;
use crate::{Error, Result};

pub const DEFAULT_TAU_CORR: f64 = 0.05;
pub const DEFAULT_TAU_PROJ: f64 = 0.01;
pub const DEFAULT_SAMPLES_PER_REF: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    tau_corr: f64,
    tau_proj: f64,
}

impl Thresholds {
    /// `tau_corr` must lie in `(0, 1)` and `tau_proj` (NDC units) be positive.
    pub fn new(tau_corr: f64, tau_proj: f64) -> Result<Self> {
        if !(tau_corr > 0.0 && tau_corr < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tau_corr must be in (0, 1), got {tau_corr}"
            )));
        }
        if !(tau_proj > 0.0 && tau_proj.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tau_proj must be positive, got {tau_proj}"
            )));
        }
        Ok(Self { tau_corr, tau_proj })
    }

    pub fn tau_corr(&self) -> f64 {
        self.tau_corr
    }

    pub fn tau_proj(&self) -> f64 {
        self.tau_proj
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tau_corr: DEFAULT_TAU_CORR,
            tau_proj: DEFAULT_TAU_PROJ,
        }
    }
}

/// Strict-inequality eligibility test.
pub fn eligible(candidate: &TriangulatedCandidate, th: &Thresholds) -> bool {
    candidate.record.confidence > th.tau_corr
        && candidate.max_error() < th.tau_proj
        && !candidate.behind_camera
}

/// Candidates triangulated against one neighbor of a reference view.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborCandidates {
    pub nbr_view_id: u32,
    pub candidates: Vec<TriangulatedCandidate>,
}

/// Points at one candidate: `neighbor` indexes the per-neighbor lists given to
/// [`build_view_distribution`], `candidate` indexes within that list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidateRef {
    pub nbr_view_id: u32,
    pub neighbor: usize,
    pub candidate: usize,
}

/// Uniform distribution over the eligible candidates of one reference view.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewDistribution {
    pub ref_view_id: u32,
    pub eligible: Vec<CandidateRef>,
}

impl ViewDistribution {
    pub fn len(&self) -> usize {
        self.eligible.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eligible.is_empty()
    }

    /// Probability mass of each listed entry.
    pub fn mass(&self) -> f64 {
        if self.eligible.is_empty() {
            0.0
        } else {
            1.0 / self.eligible.len() as f64
        }
    }
}

pub fn build_view_distribution(
    ref_view_id: u32,
    per_neighbor: &[NeighborCandidates],
    th: &Thresholds,
) -> ViewDistribution {
    let mut entries: Vec<CandidateRef> = Vec::new();
    let mut by_pixel: HashMap<(u64, u64), usize> = HashMap::new();
    for (n, nbr) in per_neighbor.iter().enumerate() {
        for (k, cand) in nbr.candidates.iter().enumerate() {
            if !eligible(cand, th) {
                continue;
            }
            let entry = CandidateRef {
                nbr_view_id: nbr.nbr_view_id,
                neighbor: n,
                candidate: k,
            };
            let key = (cand.record.u_i.to_bits(), cand.record.v_i.to_bits());
            match by_pixel.entry(key) {
                Entry::Vacant(slot) => {
                    slot.insert(entries.len());
                    entries.push(entry);
                }
                Entry::Occupied(slot) => {
                    let held = entries[*slot.get()];
                    let held_conf = per_neighbor[held.neighbor].candidates[held.candidate]
                        .record
                        .confidence;
                    if cand.record.confidence > held_conf {
                        entries[*slot.get()] = entry;
                    }
                }
            }
        }
    }
    ViewDistribution {
        ref_view_id,
        eligible: entries,
    }
}

/// Draws `n` distinct entries uniformly without replacement (all of them when
/// `n >= |eligible|`). The result is sorted by position in the distribution and
/// depends only on `(dist, n, seed)`.
pub fn sample(dist: &ViewDistribution, n: usize, seed: u64) -> Result<Vec<CandidateRef>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    let len = dist.eligible.len();
    if n >= len {
        return Ok(dist.eligible.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, len, n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| dist.eligible[i]).collect())
}

/// Seed used for one reference view's draw.
pub fn view_seed(global_seed: u64, ref_view_id: u32) -> u64 {
    global_seed ^ ref_view_id as u64
}

/// A sampled candidate tagged with the views it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledCandidate {
    pub ref_view_id: u32,
    pub nbr_view_id: u32,
    pub candidate: TriangulatedCandidate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSamples {
    pub candidates: Vec<SampledCandidate>,
    /// Reference views that contributed no samples.
    pub empty_views: Vec<u32>,
}

/// Concatenates per-view samples in ascending reference id order.
pub fn aggregate_global(mut per_view: Vec<(u32, Vec<SampledCandidate>)>) -> Result<GlobalSamples> {
    per_view.sort_by_key(|(id, _)| *id);
    let empty_views: Vec<u32> = per_view
        .iter()
        .filter(|(_, s)| s.is_empty())
        .map(|(id, _)| *id)
        .collect();
    let candidates: Vec<SampledCandidate> = per_view.into_iter().flat_map(|(_, s)| s).collect();
    if candidates.is_empty() {
        return Err(Error::NoEligibleCorrespondences);
    }
    Ok(GlobalSamples {
        candidates,
        empty_views,
    })
}
