//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use dmr::actions::{Action, Intent};
use dmr::dom::{DomNode, DomTree};
use dmr::encoder::{DualEncoderModel, TrainingExample};
use dmr::harness::{build_training_set, evaluate_detailed, synth, EvalConfig, EvalOutcome, Split};
use dmr::encoder::fit;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::path::PathBuf;

pub fn fixture_corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus/demos.jsonl")
}

/// Selection sort: repeatedly take the highest remaining score, lowest
/// index on ties.
pub fn oracle_rank(scores: &[f64], k: usize) -> Vec<usize> {
    let mut taken = vec![false; scores.len()];
    let mut out = Vec::new();
    while out.len() < k.min(scores.len()) {
        let mut best: Option<usize> = None;
        for i in 0..scores.len() {
            if taken[i] {
                continue;
            }
            best = match best {
                Some(b) if scores[b] >= scores[i] => Some(b),
                _ => Some(i),
            };
        }
        let b = best.unwrap();
        taken[b] = true;
        out.push(b);
    }
    out
}

/// Score vectors with many exact ties, signed zeros included.
pub fn random_scores(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(0..=64usize);
    let levels = rng.random_range(1..=8u32);
    (0..n)
        .map(|_| match rng.random_range(0..4u32) {
            0 => f64::from(rng.random_range(0..levels)) / 4.0 - 1.0,
            1 => {
                if rng.random_bool(0.5) {
                    0.0
                } else {
                    -0.0
                }
            }
            _ => rng.random_range(-1.0..1.0),
        })
        .collect()
}

/// chrF with clipped matches found by striking reference n-grams off a list
/// one at a time.
pub fn oracle_chrf(pred: &str, reference: &str, max_order: usize) -> f64 {
    let p: Vec<char> = pred.chars().filter(|c| !c.is_whitespace()).collect();
    let r: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let mut f_sum = 0.0;
    let mut orders = 0;
    for n in 1..=max_order {
        let gp: Vec<&[char]> = if p.len() >= n { p.windows(n).collect() } else { Vec::new() };
        let mut gr: Vec<&[char]> = if r.len() >= n { r.windows(n).collect() } else { Vec::new() };
        let (tp, tr) = (gp.len(), gr.len());
        if tp == 0 && tr == 0 {
            continue;
        }
        orders += 1;
        let mut matched = 0usize;
        for g in gp {
            if let Some(i) = gr.iter().position(|x| *x == g) {
                gr.swap_remove(i);
                matched += 1;
            }
        }
        if matched > 0 {
            let prec = matched as f64 / tp as f64;
            let rec = matched as f64 / tr as f64;
            f_sum += 2.0 * prec * rec / (prec + rec);
        }
    }
    if orders == 0 {
        0.0
    } else {
        f_sum / orders as f64
    }
}

const TAGS: &[&str] = &["div", "span", "a", "button", "p", "ul", "li", "input", "section"];

/// A random tree of exactly `n` nodes, built by attaching each new node
/// under a uniformly chosen earlier one.
pub fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> DomNode {
    // parent index and tag for every node; node 0 is the root
    let mut parent = vec![usize::MAX];
    let mut tag = vec!["html"];
    for i in 1..n {
        parent.push(rng.random_range(0..i));
        tag.push(TAGS[rng.random_range(0..TAGS.len())]);
    }
    fn build(i: usize, parent: &[usize], tag: &[&str]) -> DomNode {
        let mut node = DomNode::new(tag[i]).with_attr("id", format!("n{i}"));
        for c in (i + 1..parent.len()).filter(|&c| parent[c] == i) {
            node = node.with_child(build(c, parent, tag));
        }
        node
    }
    build(0, &parent, tag.as_slice())
}

/// Expected xpath of every node keyed by its `id`, by explicit root-to-node
/// path walking.
pub fn oracle_xpaths(root: &DomNode) -> HashMap<String, String> {
    fn walk(node: &DomNode, path: String, out: &mut HashMap<String, String>) {
        out.insert(node.attributes["id"].clone(), path.clone());
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for child in &node.children {
            let k = seen.entry(child.tag.as_str()).or_insert(0);
            *k += 1;
            walk(child, format!("{path}/{}[{}]", child.tag, k), out);
        }
    }
    let mut out = HashMap::new();
    walk(root, format!("/{}[1]", root.tag), &mut out);
    out
}

pub fn tree(root: DomNode) -> DomTree {
    DomTree::new(root, "uid").unwrap()
}

fn word(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    const ALPHABET: &[char] = &['a', 'b', 'x', 'Z', ' ', '"', '\\', '=', ',', '(', ')', 'é', '7', '\n'];
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
}

/// A random valid action, with random extra arguments on some.
pub fn random_action(rng: &mut ChaCha8Rng) -> Action {
    let intents = [
        Intent::Click,
        Intent::TextInput,
        Intent::Submit,
        Intent::Load,
        Intent::Say,
        Intent::Scroll,
        Intent::Change,
    ];
    let intent = intents[rng.random_range(0..intents.len())];
    let mut args: Vec<(String, String)> = intent
        .required_args()
        .iter()
        .map(|a| (a.to_string(), word(rng, 12)))
        .collect();
    if let Some(i) = args.iter().position(|(k, _)| k == "uid") {
        args[i].1 = format!("u{}", rng.random_range(0..1000));
    }
    for e in 0..rng.random_range(0..3) {
        args.push((format!("extra_{e}"), word(rng, 6)));
    }
    Action::new(intent, args).unwrap()
}

/// Mean loss over `batch`, recomputed from the model's public encoders.
pub fn oracle_loss(batch: &[TrainingExample], model: &DualEncoderModel) -> f64 {
    batch
        .iter()
        .map(|ex| {
            let u = model.encode_query(&ex.query_text).unwrap();
            let v = model.encode_candidate(&ex.candidate_text).unwrap();
            let s: f64 = u.values().iter().zip(v.values()).map(|(a, b)| a * b).sum();
            ex.weight * (ex.label - s).powi(2)
        })
        .sum::<f64>()
        / batch.len() as f64
}

/// Trains on the marker corpus's training demos with the default
/// configuration and evaluates every turn.
pub fn marker_run(seed: u64) -> EvalOutcome {
    let corpus = synth::marker_corpus(200, seed);
    let config = EvalConfig::default();
    let examples = build_training_set(&corpus, &config).unwrap();
    let model = fit(&examples, &config.encoder.hash, &config.train.fit).unwrap().model;
    evaluate_detailed(&corpus, &model, &config, None).unwrap()
}

pub fn held_out_recall(outcome: &EvalOutcome, split: Split, k: usize) -> f64 {
    outcome.report.per_split[split.as_str()].recall_at[&k]
}

/// Trains with a ten-turn history on the history corpus's training demos,
/// then evaluates the held-out demos with five and ten turns of history.
/// Returns out-of-domain Recall@1 for (5, 10).
pub fn history_ablation(seed: u64) -> (f64, f64) {
    let corpus = synth::history_corpus(300, seed);
    let train_cfg = EvalConfig {
        history_turns: 10,
        ..EvalConfig::default()
    };
    let examples = build_training_set(&corpus, &train_cfg).unwrap();
    let model = fit(&examples, &train_cfg.encoder.hash, &train_cfg.train.fit).unwrap().model;
    let held_out: Vec<_> = corpus.into_iter().filter(|d| !d.splits.contains(&Split::Train)).collect();
    let r1 = |h: usize| {
        let cfg = EvalConfig {
            history_turns: h,
            ..EvalConfig::default()
        };
        let o = evaluate_detailed(&held_out, &model, &cfg, None).unwrap();
        held_out_recall(&o, Split::TestOod, 1)
    };
    (r1(5), r1(10))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
