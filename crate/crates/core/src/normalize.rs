//! Whitespace cleanup applied to every snippet before it is parsed or stored.
//!
//! The shared leading indentation is removed by exact character match, so a
//! body that mixes tabs and spaces keeps that mix and still raises the same
//! indentation error it would have raised in place.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedSnippet {
    pub content: String,
    pub removed_prefix: String,
}

/// Space, tab, vertical tab and form feed. U+00A0 and other Unicode spaces
/// are content.
fn is_indent_char(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\x0b' | '\x0c')
}

fn is_blank(line: &str) -> bool {
    line.chars().all(is_indent_char)
}

fn leading_whitespace(line: &str) -> &str {
    let end = line
        .char_indices()
        .find(|(_, c)| !is_indent_char(*c))
        .map_or(line.len(), |(i, _)| i);
    &line[..end]
}

/// Longest whitespace string that is a literal prefix of every non-blank line.
pub fn common_indent<S: AsRef<str>>(lines: &[S]) -> String {
    let mut prefix: Option<&str> = None;
    for line in lines.iter().map(AsRef::as_ref).filter(|l| !is_blank(l)) {
        let indent = leading_whitespace(line);
        prefix = Some(match prefix {
            None => indent,
            Some(p) => {
                let shared = p
                    .char_indices()
                    .zip(indent.chars())
                    .find(|((_, a), b)| a != b)
                    .map_or(p.len().min(indent.len()), |((i, _), _)| i);
                &p[..shared]
            }
        });
        if prefix == Some("") {
            break;
        }
    }
    prefix.unwrap_or("").to_string()
}

/// Splits on `\n`, `\r\n` and lone `\r`, keeping a trailing empty segment
/// when the text ends with a terminator.
fn split_lines(content: &str) -> Vec<&str> {
    let mut lines = Vec::new();
    let bytes = content.as_bytes();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\n' => {
                lines.push(&content[start..i]);
                start = i + 1;
            }
            b'\r' => {
                lines.push(&content[start..i]);
                if bytes.get(i + 1) == Some(&b'\n') {
                    i += 1;
                }
                start = i + 1;
            }
            _ => {}
        }
        i += 1;
    }
    lines.push(&content[start..]);
    lines
}

pub fn normalize_snippet(content: &str) -> NormalizedSnippet {
    let lines = split_lines(content);
    let prefix = common_indent(&lines);
    let mut out = String::with_capacity(content.len());
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if is_blank(line) {
            continue;
        }
        let body = line.strip_prefix(prefix.as_str()).unwrap_or(line);
        out.push_str(body.trim_end_matches(is_indent_char));
    }
    NormalizedSnippet {
        content: out,
        removed_prefix: prefix,
    }
}
