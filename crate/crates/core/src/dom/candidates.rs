use super::tokenize::{count_tokens, truncate_tokens};
use super::{DomError, DomNode, DomTree};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// A DOM element rendered as a ranking candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateElement {
    /// The element's uid, or its xpath when it has none.
    pub uid: String,
    pub xpath: String,
    pub rendered_text: String,
    pub token_count: usize,
    pub is_target: bool,
    /// Tags of the element's direct children, in order.
    #[serde(default)]
    pub child_tags: Vec<String>,
}

/// Which elements count as candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateConfig {
    pub tags: BTreeSet<String>,
    /// Presence of any of these attributes makes an element a candidate.
    pub marker_attrs: Vec<String>,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        Self {
            tags: [
                "a", "button", "input", "select", "textarea", "option", "label", "summary",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
            marker_attrs: vec!["role".into(), "onclick".into()],
        }
    }
}

impl CandidateConfig {
    pub fn is_candidate(&self, node: &DomNode, uid_attr: &str) -> bool {
        self.tags.contains(&node.tag)
            || node.uid.is_some()
            || node.attributes.contains_key(uid_attr)
            || self
                .marker_attrs
                .iter()
                .any(|a| node.attributes.contains_key(a))
    }
}

/// Renders `node` as `<tag a="v" ...>text</tag>`, attributes in source
/// order, optionally cut to the first `token_limit` tokens.
pub fn render_element(node: &DomNode, token_limit: Option<usize>) -> String {
    let mut out = String::with_capacity(16 + node.text.len());
    out.push('<');
    out.push_str(&node.tag);
    for (name, value) in &node.attributes {
        out.push(' ');
        out.push_str(name);
        out.push_str("=\"");
        escape_into(&mut out, value, true);
        out.push('"');
    }
    out.push('>');
    escape_into(&mut out, &node.text, false);
    out.push_str("</");
    out.push_str(&node.tag);
    out.push('>');
    match token_limit {
        Some(limit) => truncate_tokens(&out, limit).to_owned(),
        None => out,
    }
}

fn escape_into(out: &mut String, s: &str, attribute: bool) {
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '"' if attribute => out.push_str("&quot;"),
            '<' if !attribute => out.push_str("&lt;"),
            '>' if !attribute => out.push_str("&gt;"),
            _ => out.push(ch),
        }
    }
}

pub fn extract_candidates(
    tree: &DomTree,
    target_uid: Option<&str>,
    token_limit: Option<usize>,
) -> Result<Vec<CandidateElement>, DomError> {
    extract_candidates_with(tree, target_uid, token_limit, &CandidateConfig::default())
}

/// Candidates in document order. `is_target` is set on the node whose uid
/// equals `target_uid`.
pub fn extract_candidates_with(
    tree: &DomTree,
    target_uid: Option<&str>,
    token_limit: Option<usize>,
    config: &CandidateConfig,
) -> Result<Vec<CandidateElement>, DomError> {
    if let Some(target) = target_uid {
        if tree.find_uid(target).is_none() {
            return Err(DomError::TargetNotFound(target.to_owned()));
        }
    }
    let out = tree
        .nodes()
        .filter(|n| config.is_candidate(n, tree.uid_attr()))
        .map(|node| {
            let rendered_text = render_element(node, token_limit);
            CandidateElement {
                uid: node.uid.clone().unwrap_or_else(|| node.xpath.clone()),
                xpath: node.xpath.clone(),
                token_count: count_tokens(&rendered_text),
                is_target: target_uid.is_some() && node.uid.as_deref() == target_uid,
                child_tags: node.children.iter().map(|c| c.tag.clone()).collect(),
                rendered_text,
            }
        })
        .collect();
    Ok(out)
}
