pub mod cli;
pub mod codec;
pub mod colorspace;
pub mod detector;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod synth;
pub mod taggen;

pub use error::{Error, GeometryError, Result};
