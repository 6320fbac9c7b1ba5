//! The artifact tokenizer: maximal alphanumeric runs are one token, every
//! other non-whitespace character is a token of its own, whitespace is
//! discarded.

/// Byte spans `(start, end)` of each token in `text`.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if run_start.is_none() {
                run_start = Some(i);
            }
            continue;
        }
        if let Some(start) = run_start.take() {
            spans.push((start, i));
        }
        if !ch.is_whitespace() {
            spans.push((i, i + ch.len_utf8()));
        }
    }
    if let Some(start) = run_start {
        spans.push((start, text.len()));
    }
    spans
}

/// Number of tokens in `text`.
pub fn count_tokens(text: &str) -> usize {
    let mut count = 0;
    let mut in_run = false;
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            if !in_run {
                count += 1;
                in_run = true;
            }
        } else {
            in_run = false;
            if !ch.is_whitespace() {
                count += 1;
            }
        }
    }
    count
}

/// Keeps the first `limit` tokens of `text`, cutting right after the last
/// kept token. Whitespace between kept tokens is preserved.
pub fn truncate_tokens(text: &str, limit: usize) -> &str {
    if limit == 0 {
        return "";
    }
    let spans = token_spans(text);
    if spans.len() <= limit {
        return text;
    }
    &text[..spans[limit - 1].1]
}

/// Drops the last `n` tokens of `text`, along with any whitespace left
/// dangling at the new end.
pub fn drop_tail_tokens(text: &str, n: usize) -> &str {
    if n == 0 {
        return text;
    }
    let spans = token_spans(text);
    if n >= spans.len() {
        return "";
    }
    &text[..spans[spans.len() - n - 1].1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_has_no_tokens() {
        assert_eq!(count_tokens(""), 0);
        assert_eq!(count_tokens("   \n\t"), 0);
    }

    #[test]
    fn quotes_are_single_tokens() {
        assert_eq!(count_tokens(r#"click the "Submit" button"#), 6);
    }

    #[test]
    fn spans_agree_with_count() {
        let s = r##"<a href="#">Go 2x·ok</a>"##;
        assert_eq!(token_spans(s).len(), count_tokens(s));
    }

    #[test]
    fn truncation_keeps_prefix() {
        let s = r##"<a href="#">Go</a>"##;
        assert_eq!(truncate_tokens(s, 2), "<a");
        assert_eq!(truncate_tokens(s, 3), "<a href");
        assert_eq!(truncate_tokens(s, 100), s);
        assert_eq!(truncate_tokens(s, 0), "");
    }

    #[test]
    fn drop_tail() {
        assert_eq!(drop_tail_tokens("a b c", 1), "a b");
        assert_eq!(drop_tail_tokens("a b c", 3), "");
        assert_eq!(drop_tail_tokens("a b c", 0), "a b c");
    }
}
