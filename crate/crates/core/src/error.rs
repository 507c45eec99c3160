use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library's fallible, non-hot-path operations.
///
/// Per-seed detection failures are not errors; they are counted in
/// [`crate::detector::FrameResult`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("no code in the family survives the two-shade filter")]
    FamilyExhausted,

    #[error("invalid family file line {line}: {text:?}")]
    FamilyParse { line: usize, text: String },

    #[error("tag id {id} is not in the family (size {size})")]
    InvalidId { id: usize, size: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),

    #[error("synthesis: {0}")]
    Synth(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Failures of the planar geometry kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("polygon needs at least {needed} vertices, got {got}")]
    TooFewVertices { needed: usize, got: usize },
    #[error("polygon is not convex")]
    NotConvex,
    #[error("polygon has non-positive area")]
    Degenerate,
    #[error("fewer than four separable edge-angle clusters")]
    QuadFit,
    #[error("degenerate point configuration for homography")]
    DegenerateHomography,
    #[error("point maps to infinity")]
    PointAtInfinity,
    #[error("corner patch is empty after clipping")]
    EmptyPatch,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
