//! Palette-aware text-to-image retrieval over precomputed embeddings.

pub mod color;
pub mod crc;
pub mod dataset;
pub mod error;
pub mod nn;
pub mod palette;
pub mod service;
pub mod train;

pub use error::{Error, Result};
