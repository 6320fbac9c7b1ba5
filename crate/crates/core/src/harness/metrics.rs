use super::HarnessError;
use crate::actions::TurnScore;
use crate::ranking::RankingResult;

/// Fraction of results whose target is ranked within the top `k`.
pub fn recall_at_k(results: &[RankingResult], k: usize) -> Result<f64, HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::EmptyList);
    }
    let mut hits = 0usize;
    for r in results {
        let rank = r.target_rank.ok_or(HarnessError::MissingTarget(r.turn_index))?;
        if rank <= k {
            hits += 1;
        }
    }
    Ok(hits as f64 / results.len() as f64)
}

/// Micro-average of turn-level final scores.
pub fn overall_score(scores: &[TurnScore]) -> Result<f64, HarnessError> {
    if scores.is_empty() {
        return Err(HarnessError::EmptyList);
    }
    Ok(scores.iter().map(|s| s.final_score).sum::<f64>() / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn with_ranks(ranks: &[usize]) -> Vec<RankingResult> {
        ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| RankingResult {
                turn_index: i,
                k: 10,
                scored: Vec::new(),
                target_uid: Some("t".into()),
                target_rank: Some(r),
            })
            .collect()
    }

    fn ts(final_score: f64) -> TurnScore {
        TurnScore {
            intent_match: 1,
            text_score: final_score,
            final_score,
        }
    }

    #[test]
    fn recall_counting() {
        assert_eq!(recall_at_k(&with_ranks(&[1, 11, 3, 12]), 10).unwrap(), 0.5);
        assert_eq!(recall_at_k(&with_ranks(&[1, 2, 3]), 3).unwrap(), 1.0);
        assert_eq!(recall_at_k(&with_ranks(&[4]), 3).unwrap(), 0.0);
    }

    #[test]
    fn recall_errors() {
        assert!(matches!(recall_at_k(&[], 1), Err(HarnessError::EmptyList)));
        let mut r = with_ranks(&[1, 2]);
        r[1].target_rank = None;
        assert!(matches!(recall_at_k(&r, 1), Err(HarnessError::MissingTarget(1))));
    }

    #[test]
    fn overall_mean() {
        assert_eq!(overall_score(&[ts(1.0), ts(0.0), ts(0.5)]).unwrap(), 0.5);
        assert_eq!(overall_score(&[ts(1.0), ts(1.0)]).unwrap(), 1.0);
        assert!(matches!(overall_score(&[]), Err(HarnessError::EmptyList)));
    }
}
