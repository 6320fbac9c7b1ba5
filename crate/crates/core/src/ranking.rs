//! Candidate scoring and top-k selection.

use crate::context::{render_dmr_query, AgentState, QueryFormat};
use crate::encoder::{cosine_sim, Embedder, EmbeddingVector, EncoderError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Candidates handed to the action stage unless configured otherwise.
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("state has no candidates")]
    NoCandidates,
    #[error(transparent)]
    Encoder(#[from] EncoderError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub uid: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Full ranking of a turn's candidates. Only the first `k` entries go on to
/// the action stage; the whole list is kept so deep recall can be measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub turn_index: usize,
    pub k: usize,
    pub scored: Vec<ScoredCandidate>,
    pub target_uid: Option<String>,
    pub target_rank: Option<usize>,
}

impl RankingResult {
    pub fn top(&self) -> &[ScoredCandidate] {
        &self.scored[..self.k.min(self.scored.len())]
    }
}

pub fn score_candidates(
    query: &EmbeddingVector,
    candidates: &[EmbeddingVector],
) -> Result<Vec<f64>, EncoderError> {
    candidates.iter().map(|c| cosine_sim(query, c)).collect()
}

/// Indices of the `k` highest scores, best first. Equal scores keep
/// document order.
pub fn rank_top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// Encodes the state's query and candidates, scores and ranks every
/// candidate.
pub fn rank_turn(
    state: &AgentState,
    embedder: &dyn Embedder,
    k: usize,
    format: &QueryFormat,
) -> Result<RankingResult, RankingError> {
    if state.candidates.is_empty() {
        return Err(RankingError::NoCandidates);
    }
    let query = render_dmr_query(state, format);
    let query_vec = embedder
        .embed_queries(&[query.as_str()])?
        .pop()
        .ok_or_else(|| EncoderError::InvalidInput("embedder returned no query vector".into()))?;
    let texts: Vec<&str> = state
        .candidates
        .iter()
        .map(|c| c.rendered_text.as_str())
        .collect();
    let cand_vecs = embedder.embed_candidates(&texts)?;
    let scores = score_candidates(&query_vec, &cand_vecs)?;
    let order = rank_top_k(&scores, scores.len());
    let scored: Vec<ScoredCandidate> = order
        .iter()
        .enumerate()
        .map(|(r, &i)| ScoredCandidate {
            uid: state.candidates[i].uid.clone(),
            score: scores[i],
            rank: r + 1,
        })
        .collect();
    let target_uid = state
        .candidates
        .iter()
        .find(|c| c.is_target)
        .map(|c| c.uid.clone());
    let target_rank = target_uid
        .as_ref()
        .and_then(|t| scored.iter().find(|s| &s.uid == t))
        .map(|s| s.rank);
    Ok(RankingResult {
        turn_index: state.turn_index,
        k,
        scored,
        target_uid,
        target_rank,
    })
}
