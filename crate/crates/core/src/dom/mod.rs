//! Simplified DOM trees, candidate extraction and element rendering.

mod candidates;
mod parse;
pub mod tokenize;
mod xpath;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

pub use candidates::{
    extract_candidates, extract_candidates_with, render_element, CandidateConfig,
    CandidateElement,
};
pub use parse::{parse_html, parse_html_with, ParseOptions};
pub use tokenize::count_tokens;
pub use xpath::{compute_xpath, resolve_xpath};

/// Attribute that carries element identifiers unless configured otherwise.
pub const DEFAULT_UID_ATTR: &str = "uid";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomError {
    #[error("no element could be recovered from the document")]
    EmptyDocument,
    #[error("target uid {0:?} not present in tree")]
    TargetNotFound(String),
    #[error("node is not part of this tree")]
    NodeNotInTree,
    #[error("invalid tag name {0:?}")]
    InvalidTag(String),
    #[error("uid {0:?} appears more than once")]
    DuplicateUid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomNode {
    pub tag: String,
    pub attributes: IndexMap<String, String>,
    /// Direct text content, whitespace-normalized.
    pub text: String,
    pub children: Vec<DomNode>,
    pub uid: Option<String>,
    pub xpath: String,
}

impl DomNode {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            attributes: IndexMap::new(),
            text: String::new(),
            children: Vec::new(),
            uid: None,
            xpath: String::new(),
        }
    }

    pub fn with_attr(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.entry(name.into()).or_insert_with(|| value.into());
        self
    }

    pub fn with_text(mut self, text: impl AsRef<str>) -> Self {
        self.text = normalize_whitespace(text.as_ref());
        self
    }

    pub fn with_child(mut self, child: DomNode) -> Self {
        self.children.push(child);
        self
    }

    /// Pre-order (document order) traversal of this subtree.
    pub fn descendants(&self) -> Preorder<'_> {
        Preorder { stack: vec![self] }
    }
}

pub struct Preorder<'a> {
    stack: Vec<&'a DomNode>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a DomNode;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomTree {
    root: DomNode,
    node_count: usize,
    uid_attr: String,
}

impl DomTree {
    /// Builds a tree from a node hierarchy, filling in xpaths and uids from
    /// `uid_attr`. Duplicate uids are rejected.
    pub fn new(root: DomNode, uid_attr: &str) -> Result<Self, DomError> {
        Self::finalize(root, uid_attr, true)
    }

    /// Like [`DomTree::new`], but a repeated uid is kept only on its first
    /// occurrence in document order.
    pub(crate) fn new_lenient(root: DomNode, uid_attr: &str) -> Self {
        Self::finalize(root, uid_attr, false).expect("lenient finalize cannot fail on uids")
    }

    fn finalize(mut root: DomNode, uid_attr: &str, strict: bool) -> Result<Self, DomError> {
        let mut seen = HashSet::new();
        let mut count = 0;
        let path = format!("/{}[1]", root.tag);
        assign(&mut root, path, uid_attr, strict, &mut seen, &mut count)?;
        Ok(Self {
            root,
            node_count: count,
            uid_attr: uid_attr.to_owned(),
        })
    }

    pub fn root(&self) -> &DomNode {
        &self.root
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn uid_attr(&self) -> &str {
        &self.uid_attr
    }

    /// All nodes in document order.
    pub fn nodes(&self) -> Preorder<'_> {
        self.root.descendants()
    }

    pub fn find_uid(&self, uid: &str) -> Option<&DomNode> {
        self.nodes().find(|n| n.uid.as_deref() == Some(uid))
    }
}

fn assign(
    node: &mut DomNode,
    xpath: String,
    uid_attr: &str,
    strict: bool,
    seen: &mut HashSet<String>,
    count: &mut usize,
) -> Result<(), DomError> {
    if !is_valid_tag(&node.tag) {
        return Err(DomError::InvalidTag(node.tag.clone()));
    }
    *count += 1;
    node.uid = match node.attributes.get(uid_attr) {
        Some(uid) if seen.insert(uid.clone()) => Some(uid.clone()),
        Some(uid) if strict => return Err(DomError::DuplicateUid(uid.clone())),
        _ => None,
    };
    let mut sibling_index: Vec<(String, usize)> = Vec::new();
    for child in &mut node.children {
        let idx = match sibling_index.iter_mut().find(|(t, _)| *t == child.tag) {
            Some((_, n)) => {
                *n += 1;
                *n
            }
            None => {
                sibling_index.push((child.tag.clone(), 1));
                1
            }
        };
        let child_path = format!("{}/{}[{}]", xpath, child.tag, idx);
        assign(child, child_path, uid_attr, strict, seen, count)?;
    }
    node.xpath = xpath;
    Ok(())
}

pub(crate) fn is_valid_tag(tag: &str) -> bool {
    !tag.is_empty()
        && tag
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
}

/// Collapses whitespace runs to single spaces and trims both ends.
pub fn normalize_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DomNode {
        DomNode::new("html").with_child(
            DomNode::new("body").with_child(
                DomNode::new("ul")
                    .with_child(DomNode::new("li").with_text("one"))
                    .with_child(DomNode::new("li").with_attr("uid", "x").with_text("two")),
            ),
        )
    }

    #[test]
    fn tree_counts_and_paths() {
        let tree = DomTree::new(sample(), "uid").unwrap();
        assert_eq!(tree.node_count(), 5);
        let paths: Vec<_> = tree.nodes().map(|n| n.xpath.as_str()).collect();
        assert_eq!(
            paths,
            [
                "/html[1]",
                "/html[1]/body[1]",
                "/html[1]/body[1]/ul[1]",
                "/html[1]/body[1]/ul[1]/li[1]",
                "/html[1]/body[1]/ul[1]/li[2]",
            ]
        );
        assert_eq!(tree.find_uid("x").unwrap().text, "two");
    }

    #[test]
    fn duplicate_uid_rejected() {
        let root = DomNode::new("div")
            .with_child(DomNode::new("a").with_attr("uid", "u"))
            .with_child(DomNode::new("a").with_attr("uid", "u"));
        assert_eq!(
            DomTree::new(root.clone(), "uid"),
            Err(DomError::DuplicateUid("u".into()))
        );
        let lenient = DomTree::new_lenient(root, "uid");
        let uids: Vec<_> = lenient.nodes().map(|n| n.uid.clone()).collect();
        assert_eq!(uids, [None, Some("u".into()), None]);
    }

    #[test]
    fn invalid_tag_rejected() {
        assert!(matches!(
            DomTree::new(DomNode::new("Div"), "uid"),
            Err(DomError::InvalidTag(_))
        ));
    }

    #[test]
    fn whitespace_normalization() {
        assert_eq!(normalize_whitespace("  a \n\t b  "), "a b");
        assert_eq!(normalize_whitespace(""), "");
    }
}
