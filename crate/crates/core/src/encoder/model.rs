use super::hashing::{hashed_features, SparseVector};
use super::{EmbeddingVector, EncoderError};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Shape and hashing parameters of a [`DualEncoderModel`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HashEncoderConfig {
    pub base_dim: usize,
    pub proj_dim: usize,
    pub ngram_orders: BTreeSet<usize>,
    pub seed: u64,
}

impl Default for HashEncoderConfig {
    fn default() -> Self {
        Self {
            base_dim: 512,
            proj_dim: 128,
            ngram_orders: [2, 3, 4].into_iter().collect(),
            seed: 0,
        }
    }
}

impl HashEncoderConfig {
    pub fn validate(&self) -> Result<(), EncoderError> {
        if self.base_dim < 2 {
            return Err(EncoderError::InvalidConfig(format!("base_dim {} < 2", self.base_dim)));
        }
        if self.proj_dim == 0 || self.proj_dim > self.base_dim {
            return Err(EncoderError::InvalidConfig(format!(
                "proj_dim {} must be in 1..={}",
                self.proj_dim, self.base_dim
            )));
        }
        if self.ngram_orders.is_empty() || self.ngram_orders.contains(&0) {
            return Err(EncoderError::InvalidConfig("n-gram orders must be non-empty and >= 1".into()));
        }
        Ok(())
    }
}

/// Hashed n-gram features followed by a linear head per side: `w_query`
/// for the query encoder, `w_cand` for the candidate encoder. Both are
/// `proj_dim x base_dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEncoderModel {
    config: HashEncoderConfig,
    pub(crate) w_query: Vec<f64>,
    pub(crate) w_cand: Vec<f64>,
}

impl DualEncoderModel {
    /// Uniform(-s, s) init with `s = sqrt(6 / (base_dim + proj_dim))`.
    /// Both heads start from the same draw, so the untrained model already
    /// ranks by hashed n-gram overlap.
    pub fn init(config: &HashEncoderConfig) -> Result<Self, EncoderError> {
        config.validate()?;
        let s = (6.0 / (config.base_dim + config.proj_dim) as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let w: Vec<f64> = (0..config.base_dim * config.proj_dim)
            .map(|_| rng.random_range(-s..s))
            .collect();
        Ok(Self {
            config: config.clone(),
            w_query: w.clone(),
            w_cand: w,
        })
    }

    /// Identity heads: both encoders return the hashed embedding itself.
    pub fn identity(base_dim: usize, ngram_orders: BTreeSet<usize>, seed: u64) -> Result<Self, EncoderError> {
        let config = HashEncoderConfig {
            base_dim,
            proj_dim: base_dim,
            ngram_orders,
            seed,
        };
        config.validate()?;
        let mut w = vec![0.0; base_dim * base_dim];
        for i in 0..base_dim {
            w[i * base_dim + i] = 1.0;
        }
        Ok(Self {
            config,
            w_query: w.clone(),
            w_cand: w,
        })
    }

    pub fn from_parts(
        config: HashEncoderConfig,
        w_query: Vec<f64>,
        w_cand: Vec<f64>,
    ) -> Result<Self, EncoderError> {
        config.validate()?;
        let len = config.base_dim * config.proj_dim;
        for w in [&w_query, &w_cand] {
            if w.len() != len {
                return Err(EncoderError::DimensionMismatch {
                    expected: len,
                    got: w.len(),
                });
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(EncoderError::InvalidConfig("weights must be finite".into()));
            }
        }
        Ok(Self {
            config,
            w_query,
            w_cand,
        })
    }

    pub fn config(&self) -> &HashEncoderConfig {
        &self.config
    }

    pub fn base_dim(&self) -> usize {
        self.config.base_dim
    }

    pub fn proj_dim(&self) -> usize {
        self.config.proj_dim
    }

    pub fn w_query(&self) -> &[f64] {
        &self.w_query
    }

    pub fn w_cand(&self) -> &[f64] {
        &self.w_cand
    }

    pub(crate) fn features(&self, text: &str) -> Result<SparseVector, EncoderError> {
        hashed_features(text, self.config.base_dim, &self.config.ngram_orders, self.config.seed)
    }

    /// `w * x` for sparse `x`, unnormalized.
    pub(crate) fn project(&self, w: &[f64], x: &SparseVector) -> Vec<f64> {
        let base = self.config.base_dim;
        (0..self.config.proj_dim)
            .map(|r| {
                let row = &w[r * base..(r + 1) * base];
                x.iter().map(|&(j, v)| row[j] * v).sum()
            })
            .collect()
    }

    pub fn encode_query(&self, text: &str) -> Result<EmbeddingVector, EncoderError> {
        let x = self.features(text)?;
        Ok(EmbeddingVector::normalized(self.project(&self.w_query, &x)))
    }

    pub fn encode_candidate(&self, text: &str) -> Result<EmbeddingVector, EncoderError> {
        let x = self.features(text)?;
        Ok(EmbeddingVector::normalized(self.project(&self.w_cand, &x)))
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointRecord {
    format_version: u32,
    base_dim: usize,
    proj_dim: usize,
    ngram_orders: BTreeSet<usize>,
    seed: u64,
    w_query: Vec<f64>,
    w_cand: Vec<f64>,
}

pub fn save_checkpoint(model: &DualEncoderModel, path: &Path) -> Result<(), EncoderError> {
    let c = model.config();
    let record = CheckpointRecord {
        format_version: CHECKPOINT_VERSION,
        base_dim: c.base_dim,
        proj_dim: c.proj_dim,
        ngram_orders: c.ngram_orders.clone(),
        seed: c.seed,
        w_query: model.w_query.clone(),
        w_cand: model.w_cand.clone(),
    };
    let json = serde_json::to_string(&record).map_err(|e| EncoderError::Checkpoint(e.to_string()))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<DualEncoderModel, EncoderError> {
    let bytes = std::fs::read(path)?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| EncoderError::Checkpoint(e.to_string()))?;
    let found = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| EncoderError::Checkpoint("missing format_version".into()))?;
    if found != u64::from(CHECKPOINT_VERSION) {
        return Err(EncoderError::CheckpointVersion {
            found: found as u32,
            expected: CHECKPOINT_VERSION,
        });
    }
    let r: CheckpointRecord =
        serde_json::from_value(value).map_err(|e| EncoderError::Checkpoint(e.to_string()))?;
    DualEncoderModel::from_parts(
        HashEncoderConfig {
            base_dim: r.base_dim,
            proj_dim: r.proj_dim,
            ngram_orders: r.ngram_orders,
            seed: r.seed,
        },
        r.w_query,
        r.w_cand,
    )
}
