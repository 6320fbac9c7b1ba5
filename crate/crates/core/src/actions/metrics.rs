use super::{Action, Intent};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// chrF uses character n-grams of orders `1..=6` unless configured.
pub const DEFAULT_CHRF_ORDERS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnScore {
    pub intent_match: u8,
    pub text_score: f64,
    pub final_score: f64,
}

pub fn intent_match(pred: &Action, reference: &Action) -> u8 {
    u8::from(pred.intent == reference.intent)
}

fn ngram_counts(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut counts = HashMap::new();
    if chars.len() >= n {
        for gram in chars.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Character n-gram F1, averaged over orders `1..=max_order` that have at
/// least one n-gram in either string. Whitespace is ignored. Two empty
/// strings score 0.
pub fn chrf(pred: &str, reference: &str, max_order: usize) -> f64 {
    let pred: Vec<char> = pred.chars().filter(|c| !c.is_whitespace()).collect();
    let reference: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let mut sum = 0.0;
    let mut used = 0usize;
    for n in 1..=max_order {
        let hyp = ngram_counts(&pred, n);
        let refs = ngram_counts(&reference, n);
        let hyp_total: usize = hyp.values().sum();
        let ref_total: usize = refs.values().sum();
        if hyp_total == 0 && ref_total == 0 {
            continue;
        }
        used += 1;
        let matched: usize = hyp
            .iter()
            .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
            .sum();
        let precision = if hyp_total == 0 { 0.0 } else { matched as f64 / hyp_total as f64 };
        let recall = if ref_total == 0 { 0.0 } else { matched as f64 / ref_total as f64 };
        if precision + recall > 0.0 {
            sum += 2.0 * precision * recall / (precision + recall);
        }
    }
    if used == 0 {
        0.0
    } else {
        sum / used as f64
    }
}

/// Intent-gated turn score. Textual intents are scored by chrF over their
/// text argument, element intents by exact uid equality, scroll by intent
/// alone.
pub fn turn_score(pred: &Action, reference: &Action, max_order: usize) -> TurnScore {
    let im = intent_match(pred, reference);
    let text_score = match reference.intent {
        Intent::Click | Intent::Submit => {
            f64::from(u8::from(pred.uid().is_some() && pred.uid() == reference.uid()))
        }
        Intent::Scroll => 1.0,
        textual => {
            let arg = textual.text_arg().expect("textual intent has a text arg");
            chrf(
                pred.arg(arg).unwrap_or(""),
                reference.arg(arg).unwrap_or(""),
                max_order,
            )
        }
    };
    TurnScore {
        intent_match: im,
        text_score,
        final_score: f64::from(im) * text_score,
    }
}
