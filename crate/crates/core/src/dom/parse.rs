//! A small, forgiving HTML parser. It recovers a tree from most real-world
//! markup but makes no attempt at full HTML5 error recovery.

use super::{normalize_whitespace, DomError, DomNode, DomTree, DEFAULT_UID_ATTR};
use indexmap::IndexMap;

const VOID_TAGS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];
const RAW_TEXT_TAGS: &[&str] = &["script", "style"];
/// Opening one of these while the same tag is the innermost open element
/// closes the open one first (`<li>a<li>b`).
const SELF_NESTING_CLOSERS: &[&str] = &["li", "p", "option", "tr", "td", "th", "dt", "dd"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOptions {
    pub uid_attr: String,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            uid_attr: DEFAULT_UID_ATTR.to_owned(),
        }
    }
}

pub fn parse_html(html: &str) -> Result<DomTree, DomError> {
    parse_html_with(html, &ParseOptions::default())
}

pub fn parse_html_with(html: &str, options: &ParseOptions) -> Result<DomTree, DomError> {
    let mut parser = Parser {
        src: html,
        pos: 0,
        stack: Vec::new(),
        top_level: Vec::new(),
    };
    parser.run();
    let mut top = parser.top_level;
    let root = match top.len() {
        0 => return Err(DomError::EmptyDocument),
        1 => top.pop().expect("one element"),
        _ => {
            let mut html = DomNode::new("html");
            html.children = top;
            html
        }
    };
    Ok(DomTree::new_lenient(root, &options.uid_attr))
}

struct Open {
    tag: String,
    attributes: IndexMap<String, String>,
    text: String,
    children: Vec<DomNode>,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    stack: Vec<Open>,
    top_level: Vec<DomNode>,
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn run(&mut self) {
        while self.pos < self.src.len() {
            let rest = self.rest();
            if rest.starts_with("<!--") {
                self.skip_past(4, "-->");
            } else if rest.starts_with("<!") || rest.starts_with("<?") {
                self.skip_past(2, ">");
            } else if rest.starts_with("</") {
                self.end_tag();
            } else if rest.starts_with('<')
                && rest[1..].starts_with(|c: char| c.is_ascii_alphabetic())
            {
                self.start_tag();
            } else {
                self.text();
            }
        }
        while !self.stack.is_empty() {
            self.close_top();
        }
    }

    /// Moves past the next `marker` found at or after `offset`, or to the
    /// end of input.
    fn skip_past(&mut self, offset: usize, marker: &str) {
        let from = self.pos + offset.min(self.rest().len());
        self.pos = match self.src[from..].find(marker) {
            Some(i) => from + i + marker.len(),
            None => self.src.len(),
        };
    }

    fn text(&mut self) {
        // A lone '<' that does not open a tag is literal text.
        let start = self.pos;
        let skip = usize::from(self.rest().starts_with('<'));
        let end = self.src[start + skip..]
            .find('<')
            .map_or(self.src.len(), |i| start + skip + i);
        self.pos = end;
        if let Some(open) = self.stack.last_mut() {
            let decoded = decode_entities(&self.src[start..end]);
            if !decoded.trim().is_empty() {
                open.text.push(' ');
                open.text.push_str(&decoded);
            }
        }
    }

    fn read_name(&mut self) -> String {
        let rest = self.rest();
        let len = rest
            .find(|c: char| c.is_whitespace() || c == '>' || c == '/' || c == '=')
            .unwrap_or(rest.len());
        self.pos += len;
        rest[..len].to_owned()
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn end_tag(&mut self) {
        self.pos += 2;
        let name = sanitize_tag(&self.read_name());
        self.skip_past(0, ">");
        if let Some(depth) = self.stack.iter().rposition(|o| o.tag == name) {
            while self.stack.len() > depth {
                self.close_top();
            }
        }
    }

    fn start_tag(&mut self) {
        self.pos += 1;
        let tag = sanitize_tag(&self.read_name());
        let mut attributes = IndexMap::new();
        let mut self_closing = false;
        loop {
            self.skip_ws();
            let rest = self.rest();
            if rest.is_empty() {
                break;
            }
            if rest.starts_with('>') {
                self.pos += 1;
                break;
            }
            if rest.starts_with("/>") {
                self.pos += 2;
                self_closing = true;
                break;
            }
            if rest.starts_with('/') || rest.starts_with('=') {
                self.pos += 1;
                continue;
            }
            let name = self.read_name().to_ascii_lowercase();
            self.skip_ws();
            let value = if self.rest().starts_with('=') {
                self.pos += 1;
                self.skip_ws();
                self.attr_value()
            } else {
                String::new()
            };
            attributes.entry(name).or_insert(value);
        }

        if SELF_NESTING_CLOSERS.contains(&tag.as_str())
            && self.stack.last().is_some_and(|o| o.tag == tag)
        {
            self.close_top();
        }

        let open = Open {
            tag,
            attributes,
            text: String::new(),
            children: Vec::new(),
        };
        if self_closing || VOID_TAGS.contains(&open.tag.as_str()) {
            self.stack.push(open);
            self.close_top();
        } else if RAW_TEXT_TAGS.contains(&open.tag.as_str()) {
            let closer = format!("</{}", open.tag);
            let lower = self.rest().to_ascii_lowercase();
            self.pos = match lower.find(&closer) {
                Some(i) => self.pos + i,
                None => self.src.len(),
            };
            self.stack.push(open);
            if self.pos < self.src.len() {
                self.end_tag();
            } else {
                self.close_top();
            }
        } else {
            self.stack.push(open);
        }
    }

    fn attr_value(&mut self) -> String {
        let rest = self.rest();
        let raw = match rest.chars().next() {
            Some(q @ ('"' | '\'')) => {
                let body = &rest[1..];
                let len = body.find(q).unwrap_or(body.len());
                self.pos += 1 + len + usize::from(len < body.len());
                &body[..len]
            }
            _ => {
                let len = rest
                    .find(|c: char| c.is_whitespace() || c == '>')
                    .unwrap_or(rest.len());
                self.pos += len;
                &rest[..len]
            }
        };
        decode_entities(raw)
    }

    fn close_top(&mut self) {
        let open = self.stack.pop().expect("close_top on empty stack");
        let node = DomNode {
            tag: open.tag,
            attributes: open.attributes,
            text: normalize_whitespace(&open.text),
            children: open.children,
            uid: None,
            xpath: String::new(),
        };
        match self.stack.last_mut() {
            Some(parent) => parent.children.push(node),
            None => self.top_level.push(node),
        }
    }
}

/// Lowercases and replaces anything outside `[a-z0-9-]` with `-`.
fn sanitize_tag(raw: &str) -> String {
    let tag: String = raw
        .chars()
        .map(|c| {
            let c = c.to_ascii_lowercase();
            if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' {
                c
            } else {
                '-'
            }
        })
        .collect();
    if tag.is_empty() {
        "-".to_owned()
    } else {
        tag
    }
}

pub(crate) fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_owned();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest[1..].find(';').filter(|&i| i <= 10).and_then(|i| {
            let name = &rest[1..1 + i];
            let ch = match name {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some('\u{a0}'),
                _ => {
                    if let Some(hex) = name.strip_prefix("#x").or_else(|| name.strip_prefix("#X")) {
                        u32::from_str_radix(hex, 16).ok().and_then(char::from_u32)
                    } else if let Some(dec) = name.strip_prefix('#') {
                        dec.parse().ok().and_then(char::from_u32)
                    } else {
                        None
                    }
                }
            };
            ch.map(|c| (c, i + 2))
        });
        match decoded {
            Some((c, consumed)) => {
                out.push(c);
                rest = &rest[consumed..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}
