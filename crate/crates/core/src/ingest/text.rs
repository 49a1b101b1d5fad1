//! Shared tokenizer for the line-oriented text formats (`boardspec`,
//! `packlib`, `spancal`, `boltplan`, `reuse-ledger`).
//!
//! A line is whitespace-separated tokens. `#` starts a comment outside
//! quotes. Tokens may be double-quoted with `\"` and `\\` escapes.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self { line, column, message: message.into() }
    }

    pub fn at(line: &Line, message: impl Into<String>) -> Self {
        Self::new(line.number, 1, message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    /// 1-based line number in the source.
    pub number: usize,
    pub tokens: Vec<String>,
}

impl Line {
    pub fn keyword(&self) -> &str {
        &self.tokens[0]
    }

    pub fn args(&self) -> &[String] {
        &self.tokens[1..]
    }

    pub fn expect_args(&self, n: usize) -> Result<&[String], SyntaxError> {
        if self.tokens.len() - 1 != n {
            return Err(SyntaxError::at(
                self,
                format!("`{}` takes {} argument(s), got {}", self.keyword(), n, self.tokens.len() - 1),
            ));
        }
        Ok(self.args())
    }

    pub fn number_at(&self, i: usize) -> Result<f64, SyntaxError> {
        let tok = self
            .tokens
            .get(i)
            .ok_or_else(|| SyntaxError::at(self, format!("missing argument {i}")))?;
        parse_number(tok).ok_or_else(|| SyntaxError::at(self, format!("`{tok}` is not a finite number")))
    }
}

pub fn parse_number(tok: &str) -> Option<f64> {
    tok.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn decode_utf8(bytes: &[u8]) -> Result<&str, SyntaxError> {
    std::str::from_utf8(bytes).map_err(|e| {
        let offset = e.valid_up_to();
        let line = bytes[..offset].iter().filter(|b| **b == b'\n').count() + 1;
        SyntaxError::new(line, 1, format!("invalid UTF-8 at byte offset {offset}"))
    })
}

/// Splits the source into non-empty token lines.
pub fn tokenize(src: &str) -> Result<Vec<Line>, SyntaxError> {
    let mut out = Vec::new();
    for (idx, raw) in src.lines().enumerate() {
        let number = idx + 1;
        let mut tokens = Vec::new();
        let mut chars = raw.char_indices().peekable();
        while let Some(&(col, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
            } else if c == '#' {
                break;
            } else if c == '"' {
                chars.next();
                let mut tok = String::new();
                let mut closed = false;
                while let Some((_, c)) = chars.next() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match chars.next() {
                            Some((_, e @ ('"' | '\\'))) => tok.push(e),
                            Some((_, 'n')) => tok.push('\n'),
                            _ => return Err(SyntaxError::new(number, col + 1, "bad escape in quoted token")),
                        },
                        c => tok.push(c),
                    }
                }
                if !closed {
                    return Err(SyntaxError::new(number, col + 1, "unterminated quote"));
                }
                tokens.push(tok);
            } else {
                let mut tok = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || c == '#' {
                        break;
                    }
                    if c == '"' {
                        return Err(SyntaxError::new(number, col + 1, "quote inside bare token"));
                    }
                    tok.push(c);
                    chars.next();
                }
                tokens.push(tok);
            }
        }
        if !tokens.is_empty() {
            out.push(Line { number, tokens });
        }
    }
    Ok(out)
}

/// Checks the `<magic> v<N>` header and returns the remaining lines.
pub fn expect_header<'a>(lines: &'a [Line], magic: &str, version: u32) -> Result<&'a [Line], SyntaxError> {
    let Some(first) = lines.first() else {
        return Err(SyntaxError::new(1, 1, format!("empty file, expected `{magic} v{version}` header")));
    };
    let want = format!("v{version}");
    if first.tokens.len() != 2 || first.tokens[0] != magic || first.tokens[1] != want {
        return Err(SyntaxError::at(first, format!("expected `{magic} v{version}` header")));
    }
    Ok(&lines[1..])
}

/// Token that re-tokenizes to exactly `s`.
pub struct Quoted<'a>(pub &'a str);

impl fmt::Display for Quoted<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.0;
        let bare = !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == '"' || c == '#' || c == '\\');
        if bare {
            return f.write_str(s);
        }
        f.write_str("\"")?;
        for c in s.chars() {
            match c {
                '"' => f.write_str("\\\"")?,
                '\\' => f.write_str("\\\\")?,
                '\n' => f.write_str("\\n")?,
                c => write!(f, "{c}")?,
            }
        }
        f.write_str("\"")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn comments_and_quotes() {
        let lines = tokenize("a b # c\n\n  \"x y\" \"q\\\"\"\n").unwrap();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].tokens, vec!["a", "b"]);
        assert_eq!(lines[1].number, 3);
        assert_eq!(lines[1].tokens, vec!["x y", "q\""]);
    }

    #[test]
    fn unterminated_quote_reports_position() {
        let err = tokenize("ok\n  \"abc").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
    }

    #[test]
    fn header_check() {
        let lines = tokenize("packlib v1\nx").unwrap();
        assert_eq!(expect_header(&lines, "packlib", 1).unwrap().len(), 1);
        assert!(expect_header(&lines, "boardspec", 1).is_err());
    }

    proptest! {
        #[test]
        fn quoted_tokens_roundtrip(s in "\\PC*") {
            let line = format!("k {}", Quoted(&s));
            let parsed = tokenize(&line).unwrap();
            prop_assert_eq!(&parsed[0].tokens[1], &s);
        }
    }
}
