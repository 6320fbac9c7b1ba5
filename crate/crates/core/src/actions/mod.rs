//! Action strings: `intent(name="value", ...)`.

mod metrics;

pub use metrics::{chrf, intent_match, turn_score, TurnScore, DEFAULT_CHRF_ORDERS};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionError {
    #[error("syntax error at byte {pos}: {reason}")]
    SyntaxError { pos: usize, reason: &'static str },
    #[error("unknown intent {0:?}")]
    UnknownIntent(String),
    #[error("missing required argument {0:?}")]
    MissingArg(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intent {
    Click,
    TextInput,
    Submit,
    Load,
    Say,
    Scroll,
    Change,
}

impl Intent {
    pub const ALL: [Intent; 7] = [
        Intent::Click,
        Intent::TextInput,
        Intent::Submit,
        Intent::Load,
        Intent::Say,
        Intent::Scroll,
        Intent::Change,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Intent::Click => "click",
            Intent::TextInput => "text_input",
            Intent::Submit => "submit",
            Intent::Load => "load",
            Intent::Say => "say",
            Intent::Scroll => "scroll",
            Intent::Change => "change",
        }
    }

    /// Required arguments, in canonical order.
    pub fn required_args(self) -> &'static [&'static str] {
        match self {
            Intent::Click | Intent::Submit => &["uid"],
            Intent::TextInput => &["uid", "text"],
            Intent::Load => &["url"],
            Intent::Say => &["utterance"],
            Intent::Scroll => &["x", "y"],
            Intent::Change => &["uid", "value"],
        }
    }

    /// The argument compared by text similarity, for textual intents.
    pub fn text_arg(self) -> Option<&'static str> {
        match self {
            Intent::Say => Some("utterance"),
            Intent::TextInput => Some("text"),
            Intent::Load => Some("url"),
            Intent::Change => Some("value"),
            Intent::Click | Intent::Submit | Intent::Scroll => None,
        }
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Intent {
    type Err = ActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Intent::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| ActionError::UnknownIntent(s.to_owned()))
    }
}

/// Equality ignores argument order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub intent: Intent,
    pub args: IndexMap<String, String>,
}

impl Action {
    pub fn new<K, V>(intent: Intent, args: impl IntoIterator<Item = (K, V)>) -> Result<Self, ActionError>
    where
        K: Into<String>,
        V: Into<String>,
    {
        let action = Self {
            intent,
            args: args.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        };
        action.validate()?;
        Ok(action)
    }

    pub fn validate(&self) -> Result<(), ActionError> {
        match self
            .intent
            .required_args()
            .iter()
            .find(|a| !self.args.contains_key(**a))
        {
            Some(missing) => Err(ActionError::MissingArg(missing)),
            None => Ok(()),
        }
    }

    pub fn arg(&self, name: &str) -> Option<&str> {
        self.args.get(name).map(String::as_str)
    }

    pub fn uid(&self) -> Option<&str> {
        self.arg("uid")
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_action(self))
    }
}

impl FromStr for Action {
    type Err = ActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_action(s)
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&serialize_action(self))
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_action(&s).map_err(serde::de::Error::custom)
    }
}

/// Canonical form: required arguments in their fixed order, then any extra
/// arguments in insertion order.
pub fn serialize_action(action: &Action) -> String {
    let required = action.intent.required_args();
    let mut out = String::new();
    out.push_str(action.intent.as_str());
    out.push('(');
    let ordered = required
        .iter()
        .filter_map(|name| action.args.get_key_value(*name))
        .chain(
            action
                .args
                .iter()
                .filter(|(k, _)| !required.contains(&k.as_str())),
        );
    for (i, (name, value)) in ordered.enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(name);
        out.push_str("=\"");
        for ch in value.chars() {
            if ch == '"' || ch == '\\' {
                out.push('\\');
            }
            out.push(ch);
        }
        out.push('"');
    }
    out.push(')');
    out
}

pub fn parse_action(text: &str) -> Result<Action, ActionError> {
    let mut p = Cursor { src: text, pos: 0 };
    p.skip_ws();
    let intent_name = p.ident();
    if intent_name.is_empty() {
        return Err(p.error("expected intent name"));
    }
    p.skip_ws();
    p.expect('(', "expected '('")?;
    let mut args = IndexMap::new();
    p.skip_ws();
    if !p.eat(')') {
        loop {
            p.skip_ws();
            let name = p.ident();
            if name.is_empty() {
                return Err(p.error("expected argument name"));
            }
            p.skip_ws();
            p.expect('=', "expected '='")?;
            p.skip_ws();
            let value = p.quoted()?;
            if args.insert(name.to_owned(), value).is_some() {
                return Err(p.error("duplicate argument"));
            }
            p.skip_ws();
            if p.eat(')') {
                break;
            }
            p.expect(',', "expected ',' or ')'")?;
        }
    }
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.error("trailing input"));
    }
    let intent: Intent = intent_name.parse()?;
    let action = Action { intent, args };
    action.validate()?;
    Ok(action)
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn error(&self, reason: &'static str) -> ActionError {
        ActionError::SyntaxError {
            pos: self.pos,
            reason,
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn ident(&mut self) -> &'a str {
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-'))
            .unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    fn eat(&mut self, c: char) -> bool {
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char, reason: &'static str) -> Result<(), ActionError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(reason))
        }
    }

    fn quoted(&mut self) -> Result<String, ActionError> {
        self.expect('"', "expected '\"'")?;
        let mut out = String::new();
        let mut chars = self.src[self.pos..].char_indices();
        while let Some((i, ch)) = chars.next() {
            match ch {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, esc @ ('"' | '\\'))) => out.push(esc),
                    Some((j, _)) => {
                        self.pos += j;
                        return Err(self.error("invalid escape"));
                    }
                    None => break,
                },
                _ => out.push(ch),
            }
        }
        self.pos = self.src.len();
        Err(self.error("unterminated string"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_click() {
        let a = parse_action(r#"click(uid="b12")"#).unwrap();
        assert_eq!(a.intent, Intent::Click);
        assert_eq!(a.uid(), Some("b12"));
    }

    #[test]
    fn escaped_quotes() {
        let a = parse_action(r#"say(utterance="All done \"ok\"")"#).unwrap();
        assert_eq!(a.arg("utterance"), Some(r#"All done "ok""#));
        assert_eq!(serialize_action(&a), r#"say(utterance="All done \"ok\"")"#);
    }

    #[test]
    fn missing_required() {
        assert_eq!(parse_action("click()"), Err(ActionError::MissingArg("uid")));
        assert_eq!(
            parse_action(r#"text_input(uid="a")"#),
            Err(ActionError::MissingArg("text"))
        );
    }

    #[test]
    fn unknown_intent() {
        assert_eq!(
            parse_action(r#"hover(uid="a")"#),
            Err(ActionError::UnknownIntent("hover".into()))
        );
    }

    #[test]
    fn syntax_errors() {
        for bad in [
            "",
            "click",
            "click(uid=b1)",
            r#"click(uid="b1""#,
            r#"click(uid="b1",)"#,
            r#"click(uid="b1") x"#,
            r#"click(uid="b1", uid="b2")"#,
            r#"say(utterance="bad \n escape")"#,
        ] {
            assert!(
                matches!(parse_action(bad), Err(ActionError::SyntaxError { .. })),
                "{bad:?} -> {:?}",
                parse_action(bad)
            );
        }
    }

    #[test]
    fn canonical_order_and_extras() {
        let a = parse_action(r#" text_input ( zeta="1" , text="hi", uid="u" ) "#).unwrap();
        assert_eq!(serialize_action(&a), r#"text_input(uid="u", text="hi", zeta="1")"#);
    }

    #[test]
    fn load_template() {
        let a = Action::new(Intent::Load, [("url", "https://x.y")]).unwrap();
        assert_eq!(serialize_action(&a), r#"load(url="https://x.y")"#);
    }

    #[test]
    fn backslashes_round_trip() {
        let a = Action::new(Intent::Say, [("utterance", r#"a\b"c\"#)]).unwrap();
        assert_eq!(parse_action(&serialize_action(&a)).unwrap(), a);
    }
}
