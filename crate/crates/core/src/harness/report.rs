use super::config::EvalConfig;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    /// Recall@k as a fraction in [0, 1], keyed by k.
    pub recall_at: BTreeMap<usize, f64>,
    pub n_turns: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overall_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_actions: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_split: BTreeMap<String, SplitReport>,
    pub overall: SplitReport,
    /// Unweighted mean of recall over the out-of-domain subsets present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ood_macro: Option<BTreeMap<usize, f64>>,
    pub config_echo: EvalConfig,
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn opt_pct(x: Option<&f64>) -> String {
    x.map(|v| pct(*v)).unwrap_or_default()
}

/// One row per split (plus `overall`), one column per k, in percent.
pub fn report_csv(report: &EvalReport) -> String {
    let ks: Vec<usize> = report.config_echo.sorted_ks();
    let mut out = String::from("split,n_turns");
    for k in &ks {
        let _ = write!(out, ",recall@{k}");
    }
    out.push_str(",overall_score\n");
    let rows = report
        .per_split
        .iter()
        .map(|(name, r)| (name.as_str(), r))
        .chain(std::iter::once(("overall", &report.overall)));
    for (name, r) in rows {
        let _ = write!(out, "{name},{}", r.n_turns);
        for k in &ks {
            let _ = write!(out, ",{}", opt_pct(r.recall_at.get(k)));
        }
        let _ = writeln!(out, ",{}", opt_pct(r.overall_score.as_ref()));
    }
    if let Some(m) = &report.ood_macro {
        out.push_str("test-ood-macro,");
        for k in &ks {
            let _ = write!(out, ",{}", opt_pct(m.get(k)));
        }
        out.push_str(",\n");
    }
    out
}

/// Long-format sweep results: one row per (cell, k) over all turns.
pub fn sweep_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("history_turns,candidate_token_limit,k,recall\n");
    for r in reports {
        let c = &r.config_echo;
        for (k, v) in &r.overall.recall_at {
            let _ = writeln!(out, "{},{},{k},{}", c.history_turns, c.candidate_token_limit, pct(*v));
        }
    }
    out
}

/// Recall@k grid with history down the side and token limit across.
pub fn sweep_table(reports: &[EvalReport], k: usize) -> String {
    let mut histories: Vec<usize> = Vec::new();
    let mut limits = Vec::new();
    for r in reports {
        let c = &r.config_echo;
        if !histories.contains(&c.history_turns) {
            histories.push(c.history_turns);
        }
        if !limits.contains(&c.candidate_token_limit) {
            limits.push(c.candidate_token_limit);
        }
    }
    let mut out = format!("recall@{k}");
    for l in &limits {
        let _ = write!(out, "\t{l}");
    }
    out.push('\n');
    for h in &histories {
        let _ = write!(out, "{h}");
        for l in &limits {
            let cell = reports
                .iter()
                .find(|r| r.config_echo.history_turns == *h && r.config_echo.candidate_token_limit == *l)
                .and_then(|r| r.overall.recall_at.get(&k));
            let _ = write!(out, "\t{}", cell.map(|v| pct(*v)).unwrap_or_else(|| "-".into()));
        }
        out.push('\n');
    }
    out
}
