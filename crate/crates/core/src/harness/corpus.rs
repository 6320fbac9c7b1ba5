//! Demonstration corpora: one JSON object per line, DOM snapshots stored as
//! separate HTML files referenced by path relative to the corpus file.

use super::HarnessError;
use crate::actions::parse_action;
use crate::context::{Speaker, Turn};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Split {
    #[serde(rename = "train")]
    Train,
    #[serde(rename = "test-web")]
    TestWeb,
    #[serde(rename = "test-cat")]
    TestCat,
    #[serde(rename = "test-geo")]
    TestGeo,
    #[serde(rename = "test-vis")]
    TestVis,
    #[serde(rename = "test-ood")]
    TestOod,
}

impl Split {
    pub const OOD_SUBSETS: [Split; 4] = [Split::TestWeb, Split::TestCat, Split::TestGeo, Split::TestVis];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::TestWeb => "test-web",
            Split::TestCat => "test-cat",
            Split::TestGeo => "test-geo",
            Split::TestVis => "test-vis",
            Split::TestOod => "test-ood",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Split::Train,
            Split::TestWeb,
            Split::TestCat,
            Split::TestGeo,
            Split::TestVis,
            Split::TestOod,
        ]
        .into_iter()
        .find(|x| x.as_str() == s)
        .ok_or_else(|| format!("unknown split {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default)]
    pub website: String,
    #[serde(default)]
    pub category: String,
    #[serde(default)]
    pub geography: String,
}

/// Where a DOM snapshot's HTML lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SnapshotSource {
    File(PathBuf),
    Inline(String),
}

impl SnapshotSource {
    pub fn load(&self) -> std::io::Result<String> {
        match self {
            SnapshotSource::File(p) => std::fs::read_to_string(p),
            SnapshotSource::Inline(html) => Ok(html.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub id: String,
    pub splits: BTreeSet<Split>,
    pub metadata: Metadata,
    pub turns: Vec<Turn>,
    pub dom_snapshots: BTreeMap<String, SnapshotSource>,
}

impl Demonstration {
    /// Positions of turns whose target element can be ranked: navigator
    /// turns whose action names a uid.
    pub fn evaluable_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.turns
            .iter()
            .enumerate()
            .filter(|(_, t)| t.target_uid().is_some())
            .map(|(i, _)| i)
    }

    /// Checks turn and snapshot invariants and adds the `test-ood` tag when
    /// any out-of-domain subset tag is present.
    pub fn validate(&mut self) -> Result<(), HarnessError> {
        let err = |turn: Option<usize>, reason: String| HarnessError::Format {
            demo: self.id.clone(),
            turn,
            reason,
        };
        if self.id.is_empty() {
            return Err(err(None, "empty demo id".into()));
        }
        let mut last: Option<u64> = None;
        for (pos, turn) in self.turns.iter().enumerate() {
            let at = Some(turn.index as usize);
            if turn.utterance.is_none() && turn.action.is_none() {
                return Err(err(at, "turn has neither utterance nor action".into()));
            }
            if last.is_some_and(|l| turn.index <= l) {
                return Err(err(at, format!("turn index does not increase (position {pos})")));
            }
            last = Some(turn.index);
            if let Some(r) = &turn.dom_ref {
                if !self.dom_snapshots.contains_key(r) {
                    return Err(err(at, format!("dom_ref {r:?} not in dom_snapshots")));
                }
            } else if turn.target_uid().is_some() {
                return Err(err(at, "element action without dom_ref".into()));
            }
        }
        for (key, src) in &self.dom_snapshots {
            if let SnapshotSource::File(p) = src {
                if !p.is_file() {
                    return Err(err(None, format!("snapshot {key:?} missing at {}", p.display())));
                }
            }
        }
        if Split::OOD_SUBSETS.iter().any(|s| self.splits.contains(s)) {
            self.splits.insert(Split::TestOod);
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TurnRecord {
    index: i64,
    speaker: Speaker,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    utterance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamp_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dom_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    screenshot_ref: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DemoRecord {
    id: String,
    #[serde(default)]
    splits: Vec<String>,
    #[serde(default)]
    metadata: Metadata,
    turns: Vec<TurnRecord>,
    #[serde(default)]
    dom_snapshots: BTreeMap<String, String>,
}

/// Parses and validates one corpus line. Snapshot paths are resolved
/// against `base_dir`.
pub fn parse_demo_line(line: &str, base_dir: &Path, line_no: usize) -> Result<Demonstration, HarnessError> {
    let record: DemoRecord = serde_json::from_str(line).map_err(|e| {
        // salvage the id for the error message if the object is otherwise broken
        let demo = serde_json::from_str::<serde_json::Value>(line)
            .ok()
            .and_then(|v| v.get("id").and_then(|i| i.as_str()).map(String::from))
            .unwrap_or_else(|| format!("line {line_no}"));
        HarnessError::Format {
            demo,
            turn: None,
            reason: e.to_string(),
        }
    })?;
    let id = record.id;
    let fail = |turn: Option<usize>, reason: String| HarnessError::Format {
        demo: id.clone(),
        turn,
        reason,
    };
    let splits = record
        .splits
        .iter()
        .map(|s| s.parse::<Split>().map_err(|e| fail(None, e)))
        .collect::<Result<BTreeSet<_>, _>>()?;
    let mut turns = Vec::with_capacity(record.turns.len());
    for t in record.turns {
        if t.index < 0 {
            return Err(fail(None, format!("negative turn index {}", t.index)));
        }
        let action = t
            .action
            .as_deref()
            .map(parse_action)
            .transpose()
            .map_err(|e| fail(Some(t.index as usize), format!("bad action: {e}")))?;
        turns.push(Turn {
            index: t.index as u64,
            speaker: t.speaker,
            utterance: t.utterance,
            action,
            timestamp_s: t.timestamp_s,
            dom_ref: t.dom_ref,
            screenshot_ref: t.screenshot_ref,
        });
    }
    let mut demo = Demonstration {
        id: id.clone(),
        splits,
        metadata: record.metadata,
        turns,
        dom_snapshots: record
            .dom_snapshots
            .into_iter()
            .map(|(k, rel)| (k, SnapshotSource::File(base_dir.join(rel))))
            .collect(),
    };
    demo.validate()?;
    Ok(demo)
}

/// Reads and validates a JSONL corpus. Blank lines are skipped.
pub fn ingest(path: &Path) -> Result<Vec<Demonstration>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut seen = BTreeSet::new();
    let mut demos = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let demo = parse_demo_line(line, base_dir, i + 1)?;
        if !seen.insert(demo.id.clone()) {
            return Err(HarnessError::Format {
                demo: demo.id,
                turn: None,
                reason: "duplicate demo id".into(),
            });
        }
        demos.push(demo);
    }
    Ok(demos)
}

/// Writes `demos` as `demos.jsonl` in `dir`, with inline snapshots saved
/// under `dir/snapshots/`. Returns the corpus file path.
pub fn write_corpus(demos: &[Demonstration], dir: &Path) -> Result<PathBuf, HarnessError> {
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| HarnessError::Io { path, source }
    };
    let snap_dir = dir.join("snapshots");
    std::fs::create_dir_all(&snap_dir).map_err(io(&snap_dir))?;
    let mut out = String::new();
    for demo in demos {
        let mut snapshots = BTreeMap::new();
        for (key, src) in &demo.dom_snapshots {
            let rel = format!("snapshots/{}_{}.html", demo.id, key);
            let html = src.load().map_err(io(Path::new(&rel)))?;
            let target = dir.join(&rel);
            std::fs::write(&target, html).map_err(io(&target))?;
            snapshots.insert(key.clone(), rel);
        }
        let record = DemoRecord {
            id: demo.id.clone(),
            splits: demo.splits.iter().map(|s| s.to_string()).collect(),
            metadata: demo.metadata.clone(),
            turns: demo
                .turns
                .iter()
                .map(|t| TurnRecord {
                    index: t.index as i64,
                    speaker: t.speaker,
                    utterance: t.utterance.clone(),
                    action: t.action.as_ref().map(ToString::to_string),
                    timestamp_s: t.timestamp_s,
                    dom_ref: t.dom_ref.clone(),
                    screenshot_ref: t.screenshot_ref.clone(),
                })
                .collect(),
            dom_snapshots: snapshots,
        };
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    let path = dir.join("demos.jsonl");
    std::fs::write(&path, out).map_err(io(&path))?;
    Ok(path)
}
