//! Minimal s-expression reader for KiCad board files.
//!
//! Iterative with a nesting limit; recursion over the result stays shallow.

use super::text::SyntaxError;

pub const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s) => Some(s),
            Sexp::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items) => Some(items),
            Sexp::Atom(_) => None,
        }
    }

    /// First atom of a list, the form's keyword.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }

    /// Child lists whose head is `name`.
    pub fn children<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Sexp> + 'a {
        self.as_list()
            .unwrap_or(&[])
            .iter()
            .filter(move |c| c.head() == Some(name))
    }

    pub fn child(&self, name: &str) -> Option<&Sexp> {
        self.as_list()?.iter().find(|c| c.head() == Some(name))
    }

    /// Atom at position `i` of this list (0 is the head).
    pub fn atom(&self, i: usize) -> Option<&str> {
        self.as_list()?.get(i)?.as_atom()
    }

    pub fn number(&self, i: usize) -> Option<f64> {
        self.atom(i)?.parse::<f64>().ok().filter(|v| v.is_finite())
    }
}

fn position(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let col = offset - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

fn err(src: &str, offset: usize, msg: impl Into<String>) -> SyntaxError {
    let (line, col) = position(src, offset);
    SyntaxError::new(line, col, msg)
}

/// Parses exactly one top-level expression.
pub fn parse(src: &str) -> Result<Sexp, SyntaxError> {
    let bytes = src.as_bytes();
    let mut stack: Vec<(usize, Vec<Sexp>)> = Vec::new();
    let mut root: Option<Sexp> = None;
    let mut i = 0;
    let emit = |stack: &mut Vec<(usize, Vec<Sexp>)>, root: &mut Option<Sexp>, node: Sexp, at: usize| {
        match stack.last_mut() {
            Some((_, items)) => {
                items.push(node);
                Ok(())
            }
            None if root.is_none() => {
                *root = Some(node);
                Ok(())
            }
            None => Err(err(src, at, "trailing content after top-level expression")),
        }
    };
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'(' => {
                if root.is_some() && stack.is_empty() {
                    return Err(err(src, i, "trailing content after top-level expression"));
                }
                if stack.len() >= MAX_DEPTH {
                    return Err(err(src, i, format!("nesting deeper than {MAX_DEPTH}")));
                }
                stack.push((i, Vec::new()));
                i += 1;
            }
            b')' => {
                let (_, items) = stack.pop().ok_or_else(|| err(src, i, "unbalanced `)`"))?;
                emit(&mut stack, &mut root, Sexp::List(items), i)?;
                i += 1;
            }
            b'"' => {
                let start = i;
                i += 1;
                let mut s = String::new();
                loop {
                    let Some(&b) = bytes.get(i) else {
                        return Err(err(src, start, "unterminated string"));
                    };
                    match b {
                        b'"' => {
                            i += 1;
                            break;
                        }
                        b'\\' => {
                            let Some(&e) = bytes.get(i + 1) else {
                                return Err(err(src, start, "unterminated string"));
                            };
                            if !e.is_ascii() {
                                return Err(err(src, i, "non-ASCII escape"));
                            }
                            s.push(match e {
                                b'n' => '\n',
                                b't' => '\t',
                                _ => e as char,
                            });
                            i += 2;
                        }
                        _ => {
                            let ch = src[i..].chars().next().expect("in bounds");
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                emit(&mut stack, &mut root, Sexp::Atom(s), start)?;
            }
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b' ' | b'\t' | b'\r' | b'\n' | b'(' | b')' | b'"') {
                    i += 1;
                }
                emit(&mut stack, &mut root, Sexp::Atom(src[start..i].to_string()), start)?;
            }
        }
    }
    if let Some((open, _)) = stack.last() {
        return Err(err(src, *open, "unclosed `(`"));
    }
    root.ok_or_else(|| err(src, 0, "empty input"))
}
