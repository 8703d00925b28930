//! Line-oriented tokenizer shared by the graph, program, tape and rule formats.

use std::fmt;

use crate::store::Resource;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    /// Bare identifier `[A-Za-z_][A-Za-z0-9_:-]*`.
    Ident(String),
    /// `<...>` reference, brackets stripped.
    Iri(String),
    /// Double-quoted literal, escapes resolved.
    Literal(String),
    /// Bare integer, kept as its digits.
    Integer(String),
    Bind(String),
    Static(String),
    LParen,
    RParen,
    Pipe,
    Comma,
    Amp,
    Arrow,
    Eq,
    Ne,
    Dot,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Iri(s) => write!(f, "`<{s}>`"),
            Tok::Literal(s) => write!(f, "literal {s:?}"),
            Tok::Integer(s) => write!(f, "`{s}`"),
            Tok::Bind(s) => write!(f, "`?{s}`"),
            Tok::Static(s) => write!(f, "`!{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Arrow => f.write_str("`=>`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Ne => f.write_str("`!=`"),
            Tok::Dot => f.write_str("`.`"),
        }
    }
}

/// A token with its 1-based column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub col: usize,
}

/// Error produced while reading any of the text formats.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl SyntaxError {
    pub(crate) fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            col,
            message: message.into(),
        }
    }
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | ':' | '-')
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if is_ident_start(c)) && chars.all(is_ident_char)
}

fn is_boundary(c: Option<char>) -> bool {
    match c {
        None => true,
        Some(c) => !is_ident_char(c),
    }
}

/// Tokenizes one line. `#` at a token boundary starts a comment.
pub(crate) fn tokenize(line: &str, lineno: usize) -> Result<Vec<Spanned>, SyntaxError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        let err = |msg: String| SyntaxError::new(lineno, col, msg);
        let tok = match c {
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            '|' => {
                i += 1;
                Tok::Pipe
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '&' => {
                i += 1;
                Tok::Amp
            }
            '.' => {
                i += 1;
                Tok::Dot
            }
            '=' => {
                if chars.get(i + 1) == Some(&'>') {
                    i += 2;
                    Tok::Arrow
                } else {
                    i += 1;
                    Tok::Eq
                }
            }
            '!' if chars.get(i + 1) == Some(&'=') => {
                i += 2;
                Tok::Ne
            }
            '?' | '!' => {
                let start = i + 1;
                let mut j = start;
                if j >= chars.len() || !is_ident_start(chars[j]) {
                    return Err(err(format!("expected head name after `{c}`")));
                }
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                let name: String = chars[start..j].iter().collect();
                i = j;
                if c == '?' {
                    Tok::Bind(name)
                } else {
                    Tok::Static(name)
                }
            }
            '<' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '>' {
                    if chars[j].is_whitespace() || chars[j] == '<' {
                        return Err(SyntaxError::new(
                            lineno,
                            j + 1,
                            "invalid character inside `<...>`",
                        ));
                    }
                    j += 1;
                }
                if j >= chars.len() {
                    return Err(err("unterminated `<`".into()));
                }
                if j == start {
                    return Err(err("empty `<>` reference".into()));
                }
                let v: String = chars[start..j].iter().collect();
                i = j + 1;
                Tok::Iri(v)
            }
            '"' => {
                let mut j = i + 1;
                let mut v = String::new();
                loop {
                    match chars.get(j) {
                        None => return Err(err("unterminated literal".into())),
                        Some('"') => break,
                        Some('\\') => {
                            let e = match chars.get(j + 1) {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('r') => '\r',
                                Some('t') => '\t',
                                other => {
                                    return Err(SyntaxError::new(
                                        lineno,
                                        j + 1,
                                        format!("unknown escape {other:?}"),
                                    ))
                                }
                            };
                            v.push(e);
                            j += 2;
                        }
                        Some(&ch) => {
                            v.push(ch);
                            j += 1;
                        }
                    }
                }
                i = j + 1;
                Tok::Literal(v)
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if !is_boundary(chars.get(j).copied()) {
                    return Err(err("malformed integer".into()));
                }
                i = j;
                Tok::Integer(chars[start..j].iter().collect())
            }
            c if is_ident_start(c) => {
                let start = i;
                let mut j = i;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                i = j;
                Tok::Ident(chars[start..j].iter().collect())
            }
            other => return Err(err(format!("unexpected character {other:?}"))),
        };
        out.push(Spanned { tok, col });
    }
    Ok(out)
}

/// Renders a string as a quoted literal token.
pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Cursor over the tokens of one line.
pub(crate) struct Cursor<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Spanned], line: usize, line_len: usize) -> Self {
        Self {
            toks,
            pos: 0,
            line,
            end_col: line_len + 1,
        }
    }

    pub fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    pub fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |s| s.col)
    }

    pub fn next(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos).map(|s| &s.tok);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError::new(self.line, self.col(), message)
    }

    pub fn expect(&mut self, want: &Tok) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(t) if t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.error(format!("expected {want}, found {t}"))),
            None => Err(self.error(format!("expected {want}, found end of line"))),
        }
    }

    pub fn expect_ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            Some(t) => Err(self.error(format!("expected {what}, found {t}"))),
            None => Err(self.error(format!("expected {what}, found end of line"))),
        }
    }

    pub fn expect_end(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.error(format!("unexpected {t}"))),
        }
    }

    /// Reads a constant term: identifier or `<uri>` as a uri, literal or integer as a literal.
    pub fn constant(&mut self) -> Result<Resource, SyntaxError> {
        let col = self.col();
        let r = match self.peek() {
            Some(Tok::Ident(s)) | Some(Tok::Iri(s)) => Resource::try_uri(s.as_str())
                .map_err(|e| SyntaxError::new(self.line, col, e.to_string()))?,
            Some(Tok::Literal(s)) | Some(Tok::Integer(s)) => Resource::literal(s.as_str()),
            Some(t) => return Err(self.error(format!("expected a constant, found {t}"))),
            None => return Err(self.error("expected a constant, found end of line")),
        };
        self.pos += 1;
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s, 1).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn mixed_line() {
        assert_eq!(
            toks(r#"row A | read (!x1 hasBrother ?x2) | guard x1=0, x2!="a\"b" # c"#),
            vec![
                Tok::Ident("row".into()),
                Tok::Ident("A".into()),
                Tok::Pipe,
                Tok::Ident("read".into()),
                Tok::LParen,
                Tok::Static("x1".into()),
                Tok::Ident("hasBrother".into()),
                Tok::Bind("x2".into()),
                Tok::RParen,
                Tok::Pipe,
                Tok::Ident("guard".into()),
                Tok::Ident("x1".into()),
                Tok::Eq,
                Tok::Integer("0".into()),
                Tok::Comma,
                Tok::Ident("x2".into()),
                Tok::Ne,
                Tok::Literal("a\"b".into()),
            ]
        );
    }

    #[test]
    fn hash_inside_iri_is_not_a_comment() {
        assert_eq!(
            toks("<http://x.org/a#b> p . # tail"),
            vec![
                Tok::Iri("http://x.org/a#b".into()),
                Tok::Ident("p".into()),
                Tok::Dot
            ]
        );
    }

    #[test]
    fn arrow_and_amp() {
        assert_eq!(
            toks("p(?x,1) & q(a,?y) => r(?x,?y)")
                .iter()
                .filter(|t| matches!(t, Tok::Amp | Tok::Arrow))
                .count(),
            2
        );
    }

    #[test]
    fn errors_carry_columns() {
        let e = tokenize("a b \"open", 7).unwrap_err();
        assert_eq!((e.line, e.col), (7, 5));
        let e = tokenize("a ^", 2).unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
    }

    #[test]
    fn quote_round_trips_through_tokenizer() {
        let s = "tab\there \"q\" back\\slash\nline";
        assert_eq!(toks(&quote(s)), vec![Tok::Literal(s.into())]);
    }
}
