use super::SqlError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// Lowercased identifier or keyword.
    Word(String),
    Str(String),
    Int(i64),
    Float(f64),
    LParen,
    RParen,
    Comma,
    Dot,
    Star,
    Semi,
    Minus,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Str(s) => format!("'{s}'"),
            Tok::Int(i) => i.to_string(),
            Tok::Float(x) => x.to_string(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Star => "`*`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Ne => "`<>`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub(crate) fn lex(text: &str) -> Result<Vec<Spanned>, SqlError> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    let syntax = |line, col, expected: &str| SqlError::Syntax {
        line,
        col,
        expected: expected.to_string(),
    };
    while let Some(&(off, c)) = it.peek() {
        let (sl, sc) = (line, col);
        if c == '\n' {
            it.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            it.next();
            col += 1;
            continue;
        }
        if c == '-' && text[off..].starts_with("--") {
            while let Some(&(_, c)) = it.peek() {
                if c == '\n' {
                    break;
                }
                it.next();
            }
            continue;
        }
        let tok = if c.is_alphabetic() || c == '_' {
            let mut w = String::new();
            while let Some(&(_, c)) = it.peek() {
                if c.is_alphanumeric() || c == '_' || c == '$' {
                    w.push(c);
                    it.next();
                    col += 1;
                } else {
                    break;
                }
            }
            Tok::Word(w.to_lowercase())
        } else if c.is_ascii_digit() {
            let mut lit = String::new();
            let mut float = false;
            while let Some(&(_, c)) = it.peek() {
                if c.is_ascii_digit() {
                    lit.push(c);
                } else if c == '.' && !float {
                    float = true;
                    lit.push(c);
                } else {
                    break;
                }
                it.next();
                col += 1;
            }
            if float {
                Tok::Float(lit.parse().map_err(|_| syntax(sl, sc, "a number"))?)
            } else {
                Tok::Int(lit.parse().map_err(|_| syntax(sl, sc, "a 64-bit integer"))?)
            }
        } else if c == '\'' {
            it.next();
            col += 1;
            let mut s = String::new();
            loop {
                match it.next() {
                    None => return Err(syntax(sl, sc, "closing quote")),
                    Some((_, '\'')) => {
                        col += 1;
                        if matches!(it.peek(), Some((_, '\''))) {
                            it.next();
                            col += 1;
                            s.push('\'');
                        } else {
                            break;
                        }
                    }
                    Some((_, '\n')) => {
                        line += 1;
                        col = 1;
                        s.push('\n');
                    }
                    Some((_, ch)) => {
                        col += 1;
                        s.push(ch);
                    }
                }
            }
            Tok::Str(s)
        } else {
            it.next();
            col += 1;
            let next = it.peek().map(|&(_, c)| c);
            let mut two = |t: Tok| {
                it.next();
                col += 1;
                t
            };
            match (c, next) {
                ('(', _) => Tok::LParen,
                (')', _) => Tok::RParen,
                (',', _) => Tok::Comma,
                ('.', _) => Tok::Dot,
                ('*', _) => Tok::Star,
                (';', _) => Tok::Semi,
                ('-', _) => Tok::Minus,
                ('=', _) => Tok::Eq,
                ('<', Some('>')) => two(Tok::Ne),
                ('<', Some('=')) => two(Tok::Le),
                ('<', _) => Tok::Lt,
                ('>', Some('=')) => two(Tok::Ge),
                ('>', _) => Tok::Gt,
                ('!', Some('=')) => two(Tok::Ne),
                _ => return Err(syntax(sl, sc, "an SQL token")),
            }
        };
        out.push(Spanned {
            tok,
            line: sl,
            col: sc,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

/// Splits a script into statements at top-level `;`, respecting quotes and
/// comments. Empty statements are dropped.
pub fn split_statements(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars().peekable();
    let mut in_str = false;
    while let Some(c) = chars.next() {
        if in_str {
            cur.push(c);
            if c == '\'' {
                if chars.peek() == Some(&'\'') {
                    cur.push(chars.next().unwrap());
                } else {
                    in_str = false;
                }
            }
            continue;
        }
        match c {
            '\'' => {
                in_str = true;
                cur.push(c);
            }
            '-' if chars.peek() == Some(&'-') => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        cur.push('\n');
                        break;
                    }
                }
            }
            ';' => {
                if !cur.trim().is_empty() {
                    out.push(cur.trim().to_string());
                }
                cur.clear();
            }
            _ => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}
