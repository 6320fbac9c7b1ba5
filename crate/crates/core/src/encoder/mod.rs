//! Dual encoders for ranking: a hashed character n-gram featurizer with
//! separate trainable linear heads for queries and candidates, and a client
//! for remote embedding services.

mod hashing;
mod model;
pub mod remote;
pub mod stub;
mod train;

pub use hashing::{embed_hash, hashed_features, SparseVector};
pub use model::{load_checkpoint, save_checkpoint, DualEncoderModel, HashEncoderConfig, CHECKPOINT_VERSION};
pub use remote::{remote_embed, RemoteEmbedder};
pub use train::{
    batch_gradients, fit, loss, train_step, FitConfig, FitOutcome, Gradients, TrainingExample,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("text is empty")]
    EmptyText,
    #[error("vector has zero norm")]
    ZeroNormVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite gradient; lower the learning rate")]
    NonFiniteGradient,
    #[error("invalid encoder configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("embedding service unreachable at {endpoint}: {reason}")]
    ServiceUnreachable { endpoint: String, reason: String },
    #[error("embedding service returned {status}: {message}")]
    ServiceError { status: u16, message: String },
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A dense embedding. Values are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EncoderError> {
        if values.is_empty() {
            return Err(EncoderError::InvalidInput("embedding must have dim >= 1".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EncoderError::InvalidInput("embedding has non-finite values".into()));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }

    /// Divides by the L2 norm; a zero vector is returned unchanged.
    pub(crate) fn normalized(mut values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Self(values)
    }
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine_sim(x: &EmbeddingVector, y: &EmbeddingVector) -> Result<f64, EncoderError> {
    if x.dim() != y.dim() {
        return Err(EncoderError::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    let (nx, ny) = (x.norm(), y.norm());
    if nx == 0.0 || ny == 0.0 {
        return Err(EncoderError::ZeroNormVector);
    }
    let dot: f64 = x.0.iter().zip(&y.0).map(|(a, b)| a * b).sum();
    Ok((dot / (nx * ny)).clamp(-1.0, 1.0))
}

/// Anything that can embed ranking queries and candidates into a shared
/// space.
pub trait Embedder: Send + Sync {
    fn embed_queries(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EncoderError>;
    fn embed_candidates(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EncoderError>;
}

impl Embedder for DualEncoderModel {
    fn embed_queries(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EncoderError> {
        texts.iter().map(|t| self.encode_query(t)).collect()
    }

    fn embed_candidates(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EncoderError> {
        texts.iter().map(|t| self.encode_candidate(t)).collect()
    }
}
