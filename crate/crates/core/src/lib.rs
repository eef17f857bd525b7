//! Label deconvolution for training node encoders and spectral graph neural
//! networks separately.
//!
//! The encoder is fitted to *inverse labels* `Σ γ_i Âⁱ Y`, a learnable
//! polynomial approximation of the inverse of the GNN's graph filter applied
//! to the labels. The hop labels `Âⁱ Y` are computed once, so encoder
//! training touches no graph structure and costs O(batch) per step.

pub mod bundle;
pub mod error;
pub mod format;
pub mod graph;
pub mod labels;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod oracle;
pub mod pipeline;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::{FeatureMatrix, Matrix};
