use super::HarnessError;
use crate::actions::DEFAULT_CHRF_ORDERS;
use crate::context::{HistoryUnit, QueryFormat, TruncationBudget};
use crate::dom::DEFAULT_UID_ATTR;
use crate::encoder::{FitConfig, HashEncoderConfig};
use crate::ranking::DEFAULT_TOP_K;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::path::Path;

/// Candidate representation length limit; `none` in config files and
/// reports means unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenLimit(pub Option<usize>);

impl TokenLimit {
    pub const NONE: TokenLimit = TokenLimit(None);
}

impl fmt::Display for TokenLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(n) => write!(f, "{n}"),
            None => f.write_str("none"),
        }
    }
}

impl Serialize for TokenLimit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(n) => s.serialize_u64(n as u64),
            None => s.serialize_str("none"),
        }
    }
}

impl<'de> Deserialize<'de> for TokenLimit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(usize),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(0) => Err(serde::de::Error::custom("token limit must be >= 1")),
            Raw::N(n) => Ok(TokenLimit(Some(n))),
            Raw::S(s) if s == "none" => Ok(TokenLimit(None)),
            Raw::S(s) => Err(serde::de::Error::custom(format!("expected a number or \"none\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    #[default]
    Hash,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderSettings {
    pub kind: EncoderKind,
    #[serde(flatten)]
    pub hash: HashEncoderConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSettings {
    #[serde(flatten)]
    pub fit: FitConfig,
    pub negatives_per_target: usize,
    /// Weight each pair by 1 / (pairs in its turn).
    pub normalize_per_turn: bool,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            negatives_per_target: 8,
            normalize_per_turn: false,
        }
    }
}

/// Fully resolved evaluation configuration. Echoed verbatim into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub history_turns: usize,
    pub history_unit: HistoryUnit,
    pub candidate_token_limit: TokenLimit,
    pub ks: Vec<usize>,
    pub top_k: usize,
    pub truncation: TruncationBudget,
    pub encoder: EncoderSettings,
    pub chrf_orders: usize,
    pub query: QueryFormat,
    pub uid_attr: String,
    pub train: TrainSettings,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            history_turns: 5,
            history_unit: HistoryUnit::Turns,
            candidate_token_limit: TokenLimit(Some(200)),
            ks: vec![1, 5, 10, 20, 200],
            top_k: DEFAULT_TOP_K,
            truncation: TruncationBudget::default(),
            encoder: EncoderSettings::default(),
            chrf_orders: DEFAULT_CHRF_ORDERS,
            query: QueryFormat::default(),
            uid_attr: DEFAULT_UID_ATTR.to_owned(),
            train: TrainSettings::default(),
        }
    }
}

impl EvalConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_owned(),
            source,
        })?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.ks.is_empty() || self.ks.contains(&0) {
            return bad("ks must be non-empty and >= 1".into());
        }
        if self.top_k == 0 {
            return bad("top_k must be >= 1".into());
        }
        if self.chrf_orders == 0 {
            return bad("chrf_orders must be >= 1".into());
        }
        if self.uid_attr.is_empty() {
            return bad("uid_attr must be non-empty".into());
        }
        let t = &self.truncation;
        TruncationBudget::new(t.total_limit(), t.component_threshold())
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.encoder.kind == EncoderKind::Remote && self.encoder.endpoint.is_none() {
            return bad("encoder.kind = remote requires encoder.endpoint".into());
        }
        if self.encoder.kind == EncoderKind::Hash {
            self.encoder
                .hash
                .validate()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn sorted_ks(&self) -> Vec<usize> {
        let mut ks = self.ks.clone();
        ks.sort_unstable();
        ks.dedup();
        ks
    }
}

/// The grid of a sweep: one evaluation per (history, limit) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub history_turns: Vec<usize>,
    pub candidate_token_limit: Vec<TokenLimit>,
}

impl SweepAxes {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_owned(),
            source,
        })?;
        let axes: Self = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        axes.validate()?;
        Ok(axes)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.history_turns.is_empty() || self.candidate_token_limit.is_empty() {
            return Err(HarnessError::Config("sweep axes must be non-empty".into()));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.history_turns.len() * self.candidate_token_limit.len()
    }
}
