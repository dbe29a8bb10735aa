//! Predictive near-lossless compression of hyperspectral cubes with one-pass,
//! line-level rate control.
//!
//! Samples are coded in band-interleaved-by-line order. Each spectral line
//! (one row with all of its bands) is quantized with a single odd step `Q`.
//! While the line is being coded, a streaming median-of-medians estimator
//! tracks the scale of the unquantized prediction residuals of every band;
//! at the end of the line those scales index a precomputed Laplacian rate
//! table, and a short warm-started walk over `Q` picks the step for the next
//! line. Measured output bits feed back into the working target.
//!
//! The main entry points are [`encode`] and [`decode`].

pub mod bitstream;
pub mod controller;
pub mod entropy;
mod error;
pub mod image;
pub mod metrics;
pub mod pipeline;
pub mod predictor;
pub mod quantizer;
pub mod rate_model;
pub mod stats;
pub mod synthetic;

pub use controller::{ControllerConfig, RateController};
pub use error::{Error, Result};
pub use image::{ByteOrder, CubeGeometry, ImageCube, PixelType, Position};
pub use metrics::{metrics, Quality};
pub use pipeline::{decode, encode, EncodeReport, Encoded, EncoderConfig, LineTrace};
pub use predictor::PredictorConfig;
pub use quantizer::StepSize;
pub use rate_model::RateLut;
pub use stats::LineStatistics;

/// Default subset length used by the median-of-medians estimator.
pub const DEFAULT_SUBSET_LEN: usize = 17;
