//! Pairwise pixel correspondences and the EDGC binary file format.
//!
//! An EDGC file is little-endian:
//!
//! ```text
//! magic "EDGC" | version u16 = 1 | ref_view_id u32 | nbr_view_id u32
//! | ref_width u16 | ref_height u16 | nbr_width u16 | nbr_height u16
//! | record_count u64 | record_count x (u_i, v_i, u_j, v_j, confidence: f32)
//! ```
//!
//! Coordinates are in original image pixels. Records are kept as `f64` in
//! memory and stored as `f32` on disk, so sets read from a file round-trip
//! bit-exactly.

use std::fs;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EDGC";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 30;
pub const RECORD_LEN: usize = 20;

/// One matched pixel pair and the matcher's confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchRecord {
    pub u_i: f64,
    pub v_i: f64,
    pub u_j: f64,
    pub v_j: f64,
    pub confidence: f64,
}

impl MatchRecord {
    fn is_valid(&self, ref_size: (u16, u16), nbr_size: (u16, u16)) -> bool {
        let inside = |u: f64, v: f64, (w, h): (u16, u16)| {
            u >= 0.0 && v >= 0.0 && u < w as f64 && v < h as f64
        };
        inside(self.u_i, self.v_i, ref_size)
            && inside(self.u_j, self.v_j, nbr_size)
            && (0.0..=1.0).contains(&self.confidence)
    }
}

/// All matches from one reference view into one neighbor view.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceSet {
    pub ref_view_id: u32,
    pub nbr_view_id: u32,
    /// `(width, height)` of the reference image in pixels.
    pub ref_size: (u16, u16),
    pub nbr_size: (u16, u16),
    pub records: Vec<MatchRecord>,
}

impl CorrespondenceSet {
    pub fn new(
        ref_view_id: u32,
        nbr_view_id: u32,
        ref_size: (u16, u16),
        nbr_size: (u16, u16),
        records: Vec<MatchRecord>,
    ) -> Result<Self> {
        let set = Self {
            ref_view_id,
            nbr_view_id,
            ref_size,
            nbr_size,
            records,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ref_view_id == self.nbr_view_id {
            return Err(Error::InvalidArgument(format!(
                "correspondence set pairs view {} with itself",
                self.ref_view_id
            )));
        }
        if let Some(k) = self
            .records
            .iter()
            .position(|r| !r.is_valid(self.ref_size, self.nbr_size))
        {
            return Err(Error::CorruptRecord(k as u64));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// `corr_<ref>_<nbr>.edgc`
pub fn corr_file_name(ref_view_id: u32, nbr_view_id: u32) -> String {
    format!("corr_{ref_view_id}_{nbr_view_id}.edgc")
}

pub fn corr_path(dir: impl AsRef<Path>, ref_view_id: u32, nbr_view_id: u32) -> PathBuf {
    dir.as_ref().join(corr_file_name(ref_view_id, nbr_view_id))
}

/// Serializes a set into EDGC bytes.
pub fn encode(set: &CorrespondenceSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * set.records.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&set.ref_view_id.to_le_bytes());
    out.extend_from_slice(&set.nbr_view_id.to_le_bytes());
    for v in [
        set.ref_size.0,
        set.ref_size.1,
        set.nbr_size.0,
        set.nbr_size.1,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(set.records.len() as u64).to_le_bytes());
    for r in &set.records {
        for v in [r.u_i, r.v_i, r.u_j, r.v_j, r.confidence] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Parses EDGC bytes, validating magic, version, payload length and records.
pub fn decode(bytes: &[u8]) -> Result<CorrespondenceSet> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::NotEdgc);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated);
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u16_at(4);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let ref_view_id = u32_at(6);
    let nbr_view_id = u32_at(10);
    let ref_size = (u16_at(14), u16_at(16));
    let nbr_size = (u16_at(18), u16_at(20));
    let count = u64::from_le_bytes(bytes[22..30].try_into().unwrap());

    // Validate the declared count against the actual payload before allocating.
    let payload = &bytes[HEADER_LEN..];
    let expected = count.checked_mul(RECORD_LEN as u64);
    if expected != Some(payload.len() as u64) {
        return Err(Error::Truncated);
    }

    let mut records = Vec::with_capacity(count as usize);
    for (k, chunk) in payload.chunks_exact(RECORD_LEN).enumerate() {
        let f = |i: usize| f32::from_le_bytes(chunk[i * 4..i * 4 + 4].try_into().unwrap()) as f64;
        let rec = MatchRecord {
            u_i: f(0),
            v_i: f(1),
            u_j: f(2),
            v_j: f(3),
            confidence: f(4),
        };
        if !rec.is_valid(ref_size, nbr_size) {
            return Err(Error::CorruptRecord(k as u64));
        }
        records.push(rec);
    }
    if ref_view_id == nbr_view_id {
        return Err(Error::InvalidArgument(format!(
            "correspondence set pairs view {ref_view_id} with itself"
        )));
    }
    Ok(CorrespondenceSet {
        ref_view_id,
        nbr_view_id,
        ref_size,
        nbr_size,
        records,
    })
}

pub fn write_corr(set: &CorrespondenceSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(set)).map_err(|e| Error::io(path, e))
}

pub fn read_corr(path: impl AsRef<Path>) -> Result<CorrespondenceSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
