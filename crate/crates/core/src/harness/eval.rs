use super::config::{EncoderKind, EvalConfig, SweepAxes};
use super::corpus::{Demonstration, Split};
use super::metrics::{overall_score, recall_at_k};
use super::report::{EvalReport, SplitReport};
use super::HarnessError;
use crate::actions::{parse_action, turn_score, Action, TurnScore};
use crate::context::{render_dmr_query, AgentState};
use crate::dom::{extract_candidates_with, parse_html_with, CandidateConfig, CandidateElement, DomTree, ParseOptions};
use crate::encoder::{load_checkpoint, DualEncoderModel, Embedder, RemoteEmbedder, TrainingExample};
use crate::ranking::{rank_turn, RankingResult};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

/// Parsed DOM snapshots of one demonstration, loaded on first use.
pub struct SnapshotCache<'a> {
    demo: &'a Demonstration,
    options: ParseOptions,
    trees: HashMap<String, DomTree>,
}

impl<'a> SnapshotCache<'a> {
    pub fn new(demo: &'a Demonstration, uid_attr: &str) -> Self {
        Self {
            demo,
            options: ParseOptions {
                uid_attr: uid_attr.to_owned(),
            },
            trees: HashMap::new(),
        }
    }

    fn get(&mut self, key: &str, turn: usize) -> Result<&DomTree, HarnessError> {
        if !self.trees.contains_key(key) {
            let source = self.demo.dom_snapshots.get(key).ok_or_else(|| HarnessError::Format {
                demo: self.demo.id.clone(),
                turn: Some(turn),
                reason: format!("unknown snapshot {key:?}"),
            })?;
            let html = source.load().map_err(|e| HarnessError::Io {
                path: format!("{}/{key}", self.demo.id).into(),
                source: e,
            })?;
            let tree = parse_html_with(&html, &self.options).map_err(|source| HarnessError::Dom {
                demo: self.demo.id.clone(),
                turn,
                source,
            })?;
            self.trees.insert(key.to_owned(), tree);
        }
        Ok(&self.trees[key])
    }
}

/// Agent state at `position` of `demo` under `config`. Candidates are
/// rendered under the configured token limit and labelled with the turn's
/// target, if any.
pub fn turn_state(
    demo: &Demonstration,
    position: usize,
    config: &EvalConfig,
    cache: &mut SnapshotCache<'_>,
) -> Result<AgentState, HarnessError> {
    let turn = demo.turns.get(position).ok_or_else(|| HarnessError::UnknownTurn {
        demo: demo.id.clone(),
        turn: position as u64,
    })?;
    let index = turn.index as usize;
    let dom_ref = turn.dom_ref.as_deref().ok_or_else(|| HarnessError::Format {
        demo: demo.id.clone(),
        turn: Some(index),
        reason: "turn has no dom_ref".into(),
    })?;
    let tree = cache.get(dom_ref, index)?;
    let candidates = extract_candidates_with(
        tree,
        turn.target_uid(),
        config.candidate_token_limit.0,
        &CandidateConfig::default(),
    )
    .map_err(|source| HarnessError::Dom {
        demo: demo.id.clone(),
        turn: index,
        source,
    })?;
    Ok(AgentState::from_turns(
        &demo.turns,
        position,
        tree.clone(),
        candidates,
        config.history_turns,
        config.history_unit,
    )?)
}

/// Predicted actions keyed by (demo id, turn index).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Predictions(HashMap<(String, u64), Action>);

#[derive(Deserialize)]
struct PredictionRecord {
    demo: String,
    turn: u64,
    action: String,
}

impl Predictions {
    pub fn insert(&mut self, demo: &str, turn: u64, action: Action) {
        self.0.insert((demo.to_owned(), turn), action);
    }

    pub fn get(&self, demo: &str, turn: u64) -> Option<&Action> {
        self.0.get(&(demo.to_owned(), turn))
    }

    /// Predictions equal to the reference actions.
    pub fn oracle(corpus: &[Demonstration]) -> Self {
        let mut p = Self::default();
        for demo in corpus {
            for t in &demo.turns {
                if let Some(a) = &t.action {
                    p.insert(&demo.id, t.index, a.clone());
                }
            }
        }
        p
    }

    /// Reads JSONL lines of `{"demo": .., "turn": .., "action": ".."}`.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut p = Self::default();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let r: PredictionRecord = serde_json::from_str(line).map_err(|e| HarnessError::Format {
                demo: format!("predictions line {}", i + 1),
                turn: None,
                reason: e.to_string(),
            })?;
            let action = parse_action(&r.action).map_err(|e| HarnessError::Format {
                demo: r.demo.clone(),
                turn: Some(r.turn as usize),
                reason: format!("bad predicted action: {e}"),
            })?;
            p.insert(&r.demo, r.turn, action);
        }
        Ok(p)
    }
}

/// One ranked turn.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnRecord {
    pub demo_id: String,
    pub turn: u64,
    pub splits: BTreeSet<Split>,
    pub ranking: RankingResult,
    pub candidates: Vec<CandidateElement>,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub turns: Vec<TurnRecord>,
}

/// The embedder described by `config`: a checkpoint or freshly initialized
/// hash model, or a remote service.
pub fn build_embedder(config: &EvalConfig, checkpoint: Option<&Path>) -> Result<Box<dyn Embedder>, HarnessError> {
    Ok(match config.encoder.kind {
        EncoderKind::Hash => match checkpoint {
            Some(path) => Box::new(load_checkpoint(path)?),
            None => Box::new(DualEncoderModel::init(&config.encoder.hash)?),
        },
        EncoderKind::Remote => {
            let endpoint = config
                .encoder
                .endpoint
                .as_deref()
                .ok_or_else(|| HarnessError::Config("remote encoder without endpoint".into()))?;
            Box::new(RemoteEmbedder::connect(endpoint)?)
        }
    })
}

pub fn evaluate(
    corpus: &[Demonstration],
    embedder: &dyn Embedder,
    config: &EvalConfig,
    predictions: Option<&Predictions>,
) -> Result<EvalReport, HarnessError> {
    evaluate_detailed(corpus, embedder, config, predictions).map(|o| o.report)
}

/// Ranks every evaluable turn and aggregates recall (and, given predictions,
/// the overall action score) per split.
pub fn evaluate_detailed(
    corpus: &[Demonstration],
    embedder: &dyn Embedder,
    config: &EvalConfig,
    predictions: Option<&Predictions>,
) -> Result<EvalOutcome, HarnessError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(HarnessError::EmptyCorpus);
    }
    let per_demo: Vec<Vec<TurnRecord>> = corpus
        .par_iter()
        .map(|demo| {
            let mut cache = SnapshotCache::new(demo, &config.uid_attr);
            demo.evaluable_positions()
                .map(|pos| {
                    let state = turn_state(demo, pos, config, &mut cache)?;
                    let ranking = rank_turn(&state, embedder, config.top_k, &config.query)?;
                    Ok(TurnRecord {
                        demo_id: demo.id.clone(),
                        turn: demo.turns[pos].index,
                        splits: demo.splits.clone(),
                        ranking,
                        candidates: state.candidates,
                    })
                })
                .collect::<Result<Vec<_>, HarnessError>>()
        })
        .collect::<Result<_, _>>()?;
    let turns: Vec<TurnRecord> = per_demo.into_iter().flatten().collect();

    let action_scores: Option<Vec<(&BTreeSet<Split>, TurnScore)>> = predictions.map(|preds| {
        corpus
            .iter()
            .flat_map(|demo| {
                demo.turns
                    .iter()
                    .filter_map(|t| t.action.as_ref().map(|a| (t.index, a)))
                    .map(move |(index, reference)| {
                        let score = match preds.get(&demo.id, index) {
                            Some(pred) => turn_score(pred, reference, config.chrf_orders),
                            None => TurnScore {
                                intent_match: 0,
                                text_score: 0.0,
                                final_score: 0.0,
                            },
                        };
                        (&demo.splits, score)
                    })
            })
            .collect()
    });

    let ks = config.sorted_ks();
    let aggregate = |filter: &dyn Fn(&BTreeSet<Split>) -> bool| -> Result<SplitReport, HarnessError> {
        let rankings: Vec<RankingResult> = turns
            .iter()
            .filter(|t| filter(&t.splits))
            .map(|t| t.ranking.clone())
            .collect();
        let mut recall_at = BTreeMap::new();
        if !rankings.is_empty() {
            for &k in &ks {
                recall_at.insert(k, recall_at_k(&rankings, k)?);
            }
        }
        let (overall, n_actions) = match &action_scores {
            Some(all) => {
                let scores: Vec<TurnScore> = all.iter().filter(|(s, _)| filter(s)).map(|(_, s)| *s).collect();
                let n = scores.len();
                (if n > 0 { Some(overall_score(&scores)?) } else { None }, Some(n))
            }
            None => (None, None),
        };
        Ok(SplitReport {
            recall_at,
            n_turns: rankings.len(),
            overall_score: overall,
            n_actions,
        })
    };

    let present: BTreeSet<Split> = corpus.iter().flat_map(|d| d.splits.iter().copied()).collect();
    let mut per_split = BTreeMap::new();
    for split in &present {
        per_split.insert(split.to_string(), aggregate(&|s| s.contains(split))?);
    }
    let overall = aggregate(&|_| true)?;

    let subsets: Vec<&SplitReport> = Split::OOD_SUBSETS
        .iter()
        .filter_map(|s| per_split.get(s.as_str()))
        .filter(|r| r.n_turns > 0)
        .collect();
    let ood_macro = (!subsets.is_empty()).then(|| {
        ks.iter()
            .map(|k| {
                let mean = subsets.iter().map(|r| r.recall_at[k]).sum::<f64>() / subsets.len() as f64;
                (*k, mean)
            })
            .collect()
    });

    Ok(EvalOutcome {
        report: EvalReport {
            per_split,
            overall,
            ood_macro,
            config_echo: config.clone(),
        },
        turns,
    })
}

/// One evaluation per cell of the grid, history outermost.
pub fn sweep(
    corpus: &[Demonstration],
    embedder: &dyn Embedder,
    base: &EvalConfig,
    axes: &SweepAxes,
) -> Result<Vec<EvalReport>, HarnessError> {
    Ok(sweep_detailed(corpus, embedder, base, axes)?
        .into_iter()
        .map(|o| o.report)
        .collect())
}

/// Like [`sweep`], keeping the per-turn records of every cell.
pub fn sweep_detailed(
    corpus: &[Demonstration],
    embedder: &dyn Embedder,
    base: &EvalConfig,
    axes: &SweepAxes,
) -> Result<Vec<EvalOutcome>, HarnessError> {
    axes.validate()?;
    let mut out = Vec::with_capacity(axes.cells());
    for &history_turns in &axes.history_turns {
        for &limit in &axes.candidate_token_limit {
            let config = EvalConfig {
                history_turns,
                candidate_token_limit: limit,
                ..base.clone()
            };
            out.push(evaluate_detailed(corpus, embedder, &config, None)?);
        }
    }
    Ok(out)
}

/// Positive and sampled negative pairs from every evaluable turn of the
/// training demos (all demos when none is tagged `train`).
pub fn build_training_set(corpus: &[Demonstration], config: &EvalConfig) -> Result<Vec<TrainingExample>, HarnessError> {
    config.validate()?;
    let has_train = corpus.iter().any(|d| d.splits.contains(&Split::Train));
    let mut rng = ChaCha8Rng::seed_from_u64(config.train.fit.seed);
    let mut out = Vec::new();
    for demo in corpus.iter().filter(|d| !has_train || d.splits.contains(&Split::Train)) {
        let mut cache = SnapshotCache::new(demo, &config.uid_attr);
        for pos in demo.evaluable_positions() {
            let state = turn_state(demo, pos, config, &mut cache)?;
            let query = render_dmr_query(&state, &config.query);
            let Some(target) = state.candidates.iter().find(|c| c.is_target) else {
                continue;
            };
            let mut negatives: Vec<&CandidateElement> = state.candidates.iter().filter(|c| !c.is_target).collect();
            negatives.shuffle(&mut rng);
            negatives.truncate(config.train.negatives_per_target);
            let weight = if config.train.normalize_per_turn {
                1.0 / (1 + negatives.len()) as f64
            } else {
                1.0
            };
            for (cand, is_target) in std::iter::once((target, true)).chain(negatives.into_iter().map(|c| (c, false))) {
                let mut ex = TrainingExample::new(query.clone(), cand.rendered_text.clone(), is_target);
                ex.weight = weight;
                out.push(ex);
            }
        }
    }
    Ok(out)
}
