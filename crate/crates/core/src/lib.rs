//! Recurrent image-caption generators conditioned on Gaussian-smoothed
//! semantic tag features, with hand-written training and evaluation.

pub mod cell;
pub mod data;
pub mod decode;
pub mod error;
pub mod metrics;
pub mod smoothing;
pub mod tensor;
pub mod text;
pub mod train;

pub use error::{Error, Result};
