use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed line in a text input, located by file and 1-based line number.
    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("no registered images")]
    NoRegisteredImages,

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("point at camera plane")]
    AtCameraPlane,

    #[error("no neighbors available")]
    NoNeighbors,

    #[error("not an EDGC file")]
    NotEdgc,

    #[error("unsupported EDGC version {0}")]
    UnsupportedVersion(u16),

    #[error("truncated file")]
    Truncated,

    #[error("corrupt record at index {0}")]
    CorruptRecord(u64),

    #[error("degenerate: zero baseline")]
    ZeroBaseline,

    #[error("degenerate: near-parallel rays")]
    NearParallelRays,

    #[error("unknown view id {0}")]
    UnknownView(u32),

    #[error("non-unit direction (norm {0})")]
    NonUnitDirection(f64),

    #[error("no eligible correspondences in scene")]
    NoEligibleCorrespondences,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ply: {0}")]
    Ply(String),

    #[error("image {}: {message}", path.display())]
    Image { path: PathBuf, message: String },

    #[error("synthetic scene: {0}")]
    Synth(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
