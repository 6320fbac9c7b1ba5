//! Corpus ingestion, retrieval and action metrics, evaluation, ablation
//! sweeps and reports.

mod config;
mod corpus;
mod eval;
mod metrics;
mod report;
pub mod synth;

pub use config::{EncoderKind, EncoderSettings, EvalConfig, SweepAxes, TokenLimit, TrainSettings};
pub use corpus::{ingest, parse_demo_line, write_corpus, Demonstration, Metadata, SnapshotSource, Split};
pub use eval::{
    build_embedder, build_training_set, evaluate, evaluate_detailed, sweep, sweep_detailed, turn_state, EvalOutcome,
    Predictions, SnapshotCache, TurnRecord,
};
pub use metrics::{overall_score, recall_at_k};
pub use report::{report_csv, sweep_csv, sweep_table, EvalReport, SplitReport};

use crate::context::ContextError;
use crate::dom::DomError;
use crate::encoder::EncoderError;
use crate::ranking::RankingError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("demo {demo}{}: {reason}", turn.map(|t| format!(" turn {t}")).unwrap_or_default())]
    Format {
        demo: String,
        turn: Option<usize>,
        reason: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("demo {demo} turn {turn}: {source}")]
    Dom {
        demo: String,
        turn: usize,
        #[source]
        source: DomError,
    },
    #[error("result for turn {0} has no target rank")]
    MissingTarget(usize),
    #[error("cannot aggregate an empty list")]
    EmptyList,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no turn {turn} in demo {demo}")]
    UnknownTurn { demo: String, turn: u64 },
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
}

impl HarnessError {
    /// Whether the error reflects bad input data or configuration rather
    /// than a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            HarnessError::Format { .. }
                | HarnessError::Config(_)
                | HarnessError::Dom { .. }
                | HarnessError::UnknownTurn { .. }
                | HarnessError::EmptyCorpus
        )
    }
}
