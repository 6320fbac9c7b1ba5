//! Per-turn agent state, the ranking query text, and the token-budgeted
//! action-model input.

mod truncate;

pub use truncate::{truncate_hierarchical, ActionModelInput, Component, ComponentName, TruncationBudget};

use crate::actions::{serialize_action, Action};
use crate::dom::tokenize::truncate_tokens;
use crate::dom::{normalize_whitespace, CandidateElement, DomTree};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContextError {
    #[error("turn {turn} out of range for {len} turns")]
    TurnOutOfRange { turn: usize, len: usize },
    #[error("invalid budget: threshold {threshold} exceeds total limit {total}")]
    InvalidBudget { total: usize, threshold: usize },
    #[error("candidate {0:?} is not among the state's candidates")]
    CandidateNotInState(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Instructor,
    Navigator,
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Speaker::Instructor => "instructor",
            Speaker::Navigator => "navigator",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: u64,
    pub speaker: Speaker,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Action>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dom_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screenshot_ref: Option<String>,
}

impl Turn {
    pub fn utterance(index: u64, speaker: Speaker, text: impl Into<String>) -> Self {
        Self {
            index,
            speaker,
            utterance: Some(text.into()),
            action: None,
            timestamp_s: None,
            dom_ref: None,
            screenshot_ref: None,
        }
    }

    pub fn action(index: u64, action: Action) -> Self {
        Self {
            index,
            speaker: Speaker::Navigator,
            utterance: None,
            action: Some(action),
            timestamp_s: None,
            dom_ref: None,
            screenshot_ref: None,
        }
    }

    pub fn with_dom_ref(mut self, dom_ref: impl Into<String>) -> Self {
        self.dom_ref = Some(dom_ref.into());
        self
    }

    /// History lines contributed by this turn: the utterance, then the action.
    pub fn history_lines(&self) -> impl Iterator<Item = String> + '_ {
        let utterance = self
            .utterance
            .as_deref()
            .map(|u| format!("[{}] {}", self.speaker, normalize_whitespace(u)));
        let action = self
            .action
            .as_ref()
            .map(|a| format!("[action] {}", serialize_action(a)));
        utterance.into_iter().chain(action)
    }

    /// Target uid of an element-directed navigator action.
    pub fn target_uid(&self) -> Option<&str> {
        match self.speaker {
            Speaker::Navigator => self.action.as_ref()?.uid(),
            Speaker::Instructor => None,
        }
    }
}

/// How the history length is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryUnit {
    /// Every turn counts.
    #[default]
    Turns,
    /// The window reaches back to the n-th most recent instructor utterance.
    InstructorUtterances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryWindow {
    pub turns: Vec<Turn>,
    pub window_size: usize,
}

/// The contiguous run of turns before position `t` covered by a window of
/// `n_turns`, oldest first.
pub fn build_history_window(
    turns: &[Turn],
    t: usize,
    n_turns: usize,
    unit: HistoryUnit,
) -> Result<HistoryWindow, ContextError> {
    if t >= turns.len() {
        return Err(ContextError::TurnOutOfRange {
            turn: t,
            len: turns.len(),
        });
    }
    let start = match unit {
        HistoryUnit::Turns => t.saturating_sub(n_turns),
        HistoryUnit::InstructorUtterances if n_turns == 0 => t,
        HistoryUnit::InstructorUtterances => turns[..t]
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, turn)| turn.speaker == Speaker::Instructor && turn.utterance.is_some())
            .nth(n_turns - 1)
            .map_or(0, |(i, _)| i),
    };
    Ok(HistoryWindow {
        turns: turns[start..t].to_vec(),
        window_size: n_turns,
    })
}

/// Most recent instructor utterance at or before position `t`.
pub fn current_utterance(turns: &[Turn], t: usize) -> Option<&str> {
    turns[..=t.min(turns.len().checked_sub(1)?)]
        .iter()
        .rev()
        .filter(|turn| turn.speaker == Speaker::Instructor)
        .find_map(|turn| turn.utterance.as_deref())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Viewport {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub turn_index: usize,
    pub dom: DomTree,
    pub utterance: String,
    pub history: HistoryWindow,
    pub screenshot_ref: Option<String>,
    pub viewport: Option<Viewport>,
    pub candidates: Vec<CandidateElement>,
}

impl AgentState {
    /// State at position `t` of `turns`.
    pub fn from_turns(
        turns: &[Turn],
        t: usize,
        dom: DomTree,
        candidates: Vec<CandidateElement>,
        history_turns: usize,
        unit: HistoryUnit,
    ) -> Result<Self, ContextError> {
        let history = build_history_window(turns, t, history_turns, unit)?;
        Ok(Self {
            turn_index: t,
            dom,
            utterance: current_utterance(turns, t).unwrap_or_default().to_owned(),
            history,
            screenshot_ref: turns[t].screenshot_ref.clone(),
            viewport: None,
            candidates,
        })
    }
}

/// Settings for the ranking query text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct QueryFormat {
    pub delimiter: String,
}

impl Default for QueryFormat {
    fn default() -> Self {
        Self {
            delimiter: "\n".to_owned(),
        }
    }
}

/// Query text for the ranking encoder: the current utterance, then one
/// history line per utterance or action, oldest first. The DOM is not
/// included.
pub fn render_dmr_query(state: &AgentState, format: &QueryFormat) -> String {
    let d = &format.delimiter;
    let mut out = format!("utterance: {}{d}history:", normalize_whitespace(&state.utterance));
    for line in state.history.turns.iter().flat_map(Turn::history_lines) {
        out.push_str(d);
        out.push_str(&line);
    }
    out
}

/// Per-node cap applied to the flat DOM rendering before global truncation.
pub const DOM_NODE_TOKEN_CAP: usize = 20;

fn dom_subcomponents(tree: &DomTree) -> Vec<String> {
    tree.nodes()
        .filter_map(|node| {
            let mut parts: Vec<&str> = node
                .attributes
                .values()
                .map(String::as_str)
                .filter(|v| !v.trim().is_empty())
                .collect();
            if !node.text.is_empty() {
                parts.push(&node.text);
            }
            if parts.is_empty() {
                return None;
            }
            let flat = normalize_whitespace(&parts.join(" "));
            Some(truncate_tokens(&flat, DOM_NODE_TOKEN_CAP).to_owned())
        })
        .collect()
}

/// Builds the named components of the action-model input and fits them to
/// `budget`.
pub fn assemble_action_input(
    state: &AgentState,
    top_candidates: &[CandidateElement],
    budget: &TruncationBudget,
) -> Result<ActionModelInput, ContextError> {
    for c in top_candidates {
        if !state.candidates.iter().any(|s| s.uid == c.uid) {
            return Err(ContextError::CandidateNotInState(c.uid.clone()));
        }
    }
    let candidates = top_candidates
        .iter()
        .map(|c| format!("{} [{}] {}", c.xpath, c.child_tags.join(" "), c.rendered_text))
        .collect();
    let mut utterances: Vec<String> = state
        .history
        .turns
        .iter()
        .filter_map(|t| {
            t.utterance
                .as_deref()
                .map(|u| format!("[{}] {}", t.speaker, normalize_whitespace(u)))
        })
        .collect();
    if !state.utterance.is_empty() {
        utterances.push(format!("[current] {}", normalize_whitespace(&state.utterance)));
    }
    let actions = state
        .history
        .turns
        .iter()
        .filter_map(|t| t.action.as_ref().map(serialize_action))
        .collect();
    let viewport = vec![match state.viewport {
        Some(v) => format!("viewport: {}x{}", v.width, v.height),
        None => "viewport: unspecified".to_owned(),
    }];
    let screenshot = state
        .screenshot_ref
        .iter()
        .map(|r| format!("screenshot: {r}"))
        .collect();
    let components = vec![
        (ComponentName::Dom, dom_subcomponents(&state.dom)),
        (ComponentName::Candidates, candidates),
        (ComponentName::Utterances, utterances),
        (ComponentName::Actions, actions),
        (ComponentName::Viewport, viewport),
        (ComponentName::ScreenshotNote, screenshot),
    ];
    Ok(truncate_hierarchical(&components, budget))
}
