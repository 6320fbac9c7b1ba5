//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use dmr::actions::{chrf, parse_action, serialize_action, turn_score, TurnScore};
use dmr::context::{truncate_hierarchical, ComponentName, TruncationBudget};
use dmr::dom::{compute_xpath, count_tokens, resolve_xpath};
use dmr::encoder::{batch_gradients, DualEncoderModel, HashEncoderConfig, TrainingExample};
use dmr::harness::{
    ingest, overall_score, recall_at_k, sweep_detailed, EvalConfig, Split, SweepAxes, TokenLimit,
};
use dmr::ranking::{rank_top_k, RankingResult};
use rand::RngExt;
use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ranking_oracle() -> Check {
    let mut rng = common::rng(1);
    for i in 0..10_000 {
        let scores = common::random_scores(&mut rng);
        let k = rng.random_range(0..=scores.len());
        let got = rank_top_k(&scores, k);
        ensure(got == common::oracle_rank(&scores, k), || format!("vector {i} differs"))?;
    }
    Ok("10000 vectors, exact".into())
}

fn gradients() -> Check {
    let mut rng = common::rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let base_dim = rng.random_range(4..=16);
        let proj_dim = rng.random_range(2..=base_dim.min(8));
        let config = HashEncoderConfig {
            base_dim,
            proj_dim,
            ngram_orders: [1, 2].into_iter().collect(),
            seed: rng.random_range(0..100),
        };
        let n = base_dim * proj_dim;
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = DualEncoderModel::from_parts(config, q, c).map_err(|e| e.to_string())?;
        let text = |rng: &mut rand_chacha::ChaCha8Rng| -> String {
            (0..rng.random_range(3..12)).map(|_| ['a', 'b', 'c', 'd', ' '][rng.random_range(0..5)]).collect()
        };
        let batch: Vec<TrainingExample> = (0..rng.random_range(1..5))
            .map(|_| TrainingExample::new(text(&mut rng), text(&mut rng), rng.random_bool(0.5)))
            .collect();
        let (grads, _) = batch_gradients(&batch, &model).map_err(|e| e.to_string())?;
        for head in 0..2 {
            let analytic = if head == 0 { &grads.w_query } else { &grads.w_cand };
            for i in 0..n {
                let at = |d: f64| {
                    let (mut q, mut c) = (model.w_query().to_vec(), model.w_cand().to_vec());
                    if head == 0 { q[i] += d } else { c[i] += d }
                    let m = DualEncoderModel::from_parts(model.config().clone(), q, c).unwrap();
                    common::oracle_loss(&batch, &m)
                };
                let numeric = (at(1e-5) - at(-1e-5)) / 2e-5;
                let scale = analytic[i].abs().max(numeric.abs());
                if scale >= 1e-6 {
                    worst = worst.max((analytic[i] - numeric).abs() / scale);
                }
            }
        }
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:.2e}"))?;
    Ok(format!("max relative error {worst:.2e}"))
}

fn training_sanity() -> Check {
    let outcome = common::marker_run(7);
    let r1 = common::held_out_recall(&outcome, Split::TestWeb, 1);
    let r10 = common::held_out_recall(&outcome, Split::TestWeb, 10);
    ensure(r1 >= 0.9 && r10 == 1.0, || format!("recall@1 {r1}, recall@10 {r10}"))?;
    Ok(format!("held-out recall@1 {r1:.3}, recall@10 {r10:.3}"))
}

fn history_ablation() -> Check {
    let (h5, h10) = common::history_ablation(3);
    ensure(h10 - h5 >= 0.2, || format!("recall@1 h5 {h5}, h10 {h10}"))?;
    ensure(common::history_ablation(3) == (h5, h10), || "second run differs".into())?;
    Ok(format!("recall@1 history 5: {h5:.3}, history 10: {h10:.3}"))
}

fn token_limits() -> Check {
    let corpus = ingest(&common::fixture_corpus()).map_err(|e| e.to_string())?;
    let model = DualEncoderModel::init(&HashEncoderConfig::default()).map_err(|e| e.to_string())?;
    let limits = [TokenLimit(Some(100)), TokenLimit(Some(200)), TokenLimit(Some(400)), TokenLimit::NONE];
    let axes = SweepAxes {
        history_turns: vec![5],
        candidate_token_limit: limits.to_vec(),
    };
    let cells = sweep_detailed(&corpus, &model, &EvalConfig::default(), &axes).map_err(|e| e.to_string())?;
    ensure(cells.len() == 4, || format!("{} reports", cells.len()))?;
    let mut sets: BTreeMap<(String, u64), Vec<String>> = BTreeMap::new();
    let mut checked = 0;
    for (cell, limit) in cells.iter().zip(limits) {
        for t in &cell.turns {
            for c in &t.candidates {
                let n = count_tokens(&c.rendered_text);
                ensure(limit.0.is_none_or(|l| n <= l), || format!("{} has {n} tokens over {limit}", c.uid))?;
                checked += 1;
            }
            let uids: Vec<String> = t.candidates.iter().map(|c| c.uid.clone()).collect();
            let prev = sets.entry((t.demo_id.clone(), t.turn)).or_insert_with(|| uids.clone());
            ensure(*prev == uids, || format!("candidate set of {}:{} changes", t.demo_id, t.turn))?;
        }
    }
    Ok(format!("4 reports, {checked} renderings within limit, candidate sets identical"))
}

fn truncation() -> Check {
    let mut rng = common::rng(6);
    let names = [ComponentName::Dom, ComponentName::Candidates, ComponentName::Utterances, ComponentName::Actions];
    for case in 0..1000 {
        let sizes: Vec<usize> = (0..rng.random_range(1..7)).map(|_| rng.random_range(0..80)).collect();
        let total = rng.random_range(0..300);
        let threshold = rng.random_range(0..=total);
        let budget = TruncationBudget::new(total, threshold).map_err(|e| e.to_string())?;
        let input: Vec<(ComponentName, Vec<String>)> = sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| (names[i % 4], (0..n).map(|j| format!("w{j}")).collect()))
            .collect();
        let out = truncate_hierarchical(&input, &budget);
        let counts: Vec<usize> = out.components.iter().map(|c| c.token_count).collect();
        ensure(out.total_tokens <= total, || format!("case {case}: over budget"))?;
        let small_trimmed = sizes.iter().zip(&counts).any(|(&o, &c)| o <= threshold && c < o);
        ensure(!small_trimmed || counts.iter().all(|&c| c <= threshold), || {
            format!("case {case}: {sizes:?} -> {counts:?} trimmed a small component first")
        })?;
        let again: Vec<(ComponentName, Vec<String>)> =
            out.components.iter().map(|c| (c.name, vec![c.text.clone()])).collect();
        ensure(truncate_hierarchical(&again, &budget) == out, || format!("case {case}: not idempotent"))?;
    }
    Ok("1000 component sets".into())
}

fn metrics() -> Check {
    let c = chrf("abc", "abd", 2);
    ensure((c - 7.0 / 12.0).abs() <= 1e-9, || format!("chrf {c}"))?;
    let results: Vec<RankingResult> = [1, 11, 3, 12]
        .iter()
        .enumerate()
        .map(|(i, &r)| RankingResult {
            turn_index: i,
            k: 10,
            scored: vec![],
            target_uid: Some("t".into()),
            target_rank: Some(r),
        })
        .collect();
    let recall = recall_at_k(&results, 10).map_err(|e| e.to_string())?;
    ensure(recall == 0.5, || format!("recall {recall}"))?;
    let ts = |f| TurnScore { intent_match: 1, text_score: f, final_score: f };
    let overall = overall_score(&[ts(1.0), ts(0.0), ts(0.5)]).map_err(|e| e.to_string())?;
    ensure(overall == 0.5, || format!("overall {overall}"))?;
    let mut rng = common::rng(9);
    let mut mismatched = 0;
    for _ in 0..1000 {
        let (p, r) = (common::random_action(&mut rng), common::random_action(&mut rng));
        if p.intent != r.intent {
            mismatched += 1;
            let s = turn_score(&p, &r, 6);
            ensure(s.final_score == 0.0, || format!("{p} vs {r} scored {}", s.final_score))?;
        }
    }
    Ok(format!("chrf {c:.6}, recall 0.5, overall 0.5, {mismatched} mismatched pairs gated"))
}

fn round_trips() -> Check {
    let mut rng = common::rng(10);
    for _ in 0..1000 {
        let a = common::random_action(&mut rng);
        let text = serialize_action(&a);
        let back = parse_action(&text).map_err(|e| format!("{text}: {e}"))?;
        ensure(back == a && serialize_action(&back) == text, || format!("{text} does not round-trip"))?;
    }
    for _ in 0..10 {
        let root = common::random_tree(&mut rng, 100);
        let expected = common::oracle_xpaths(&root);
        let tree = common::tree(root);
        for node in tree.nodes() {
            let p = compute_xpath(node, &tree).map_err(|e| e.to_string())?;
            ensure(p == expected[&node.attributes["id"]], || format!("xpath {p}"))?;
            ensure(resolve_xpath(&tree, &p).is_some_and(|n| std::ptr::eq(n, node)), || format!("resolve {p}"))?;
        }
    }
    let path = common::fixture_corpus();
    let demos = ingest(&path).map_err(|e| e.to_string())?;
    let expected: Vec<usize> = std::fs::read_to_string(&path)
        .map_err(|e| e.to_string())?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["turns"].as_array().unwrap().len())
        .collect();
    let got: Vec<usize> = demos.iter().map(|d| d.turns.len()).collect();
    ensure(got == expected, || format!("turn counts {got:?} vs {expected:?}"))?;
    Ok(format!("1000 actions, 10 trees of 100 nodes, {} demos / {} turns", demos.len(), got.iter().sum::<usize>()))
}

fn cli_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = common::fixture_corpus();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("report{run}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_dmr"))
            .arg("eval")
            .arg(&corpus)
            .arg("--out")
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("eval exited with {status}"))?;
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[1], || "reports differ".into())?;
    Ok(format!("{} bytes, identical", outputs[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("ranking matches full-sort oracle", Duration::from_secs(5), ranking_oracle),
        ("gradient correctness", Duration::from_secs(30), gradients),
        ("training sanity", Duration::from_secs(60), training_sanity),
        ("history-length ablation direction", Duration::from_secs(60), history_ablation),
        ("token-limit ablation mechanics", Duration::MAX, token_limits),
        ("truncation invariants", Duration::MAX, truncation),
        ("metric fixtures", Duration::MAX, metrics),
        ("round trips", Duration::MAX, round_trips),
        ("eval determinism", Duration::MAX, cli_determinism),
    ];
    let mut failed = 0;
    for (name, bound, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let verdict = match &result {
            Ok(_) if took > bound => Err(format!("took {took:.2?}, bound {bound:.0?}")),
            Ok(d) => Ok(d.clone()),
            Err(e) => Err(e.clone()),
        };
        match verdict {
            Ok(detail) => println!("PASS  {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{took:.2?}]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
