use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    /// `Name:` at the start of a header item.
    Header(String),
    Ident(String),
    Str(String),
    Int(u64),
    Punct(char),
    Body,
    End,
    Abort,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: &str| Error::Syntax { line, col, msg: msg.to_string() };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
            for k in 0..n {
                if chars[*i + k] == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
            }
            *i += n;
        };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            let mut depth = 0usize;
            loop {
                if i + 1 >= chars.len() {
                    return Err(err(tl, tc, "unterminated comment"));
                }
                if chars[i] == '/' && chars[i + 1] == '*' {
                    depth += 1;
                    advance(&mut i, &mut line, &mut col, 2);
                } else if chars[i] == '*' && chars[i + 1] == '/' {
                    depth -= 1;
                    advance(&mut i, &mut line, &mut col, 2);
                    if depth == 0 {
                        break;
                    }
                } else {
                    advance(&mut i, &mut line, &mut col, 1);
                }
            }
        } else if c == '"' {
            let mut s = String::new();
            advance(&mut i, &mut line, &mut col, 1);
            loop {
                match chars.get(i) {
                    None => return Err(err(tl, tc, "unterminated string")),
                    Some('"') => {
                        advance(&mut i, &mut line, &mut col, 1);
                        break;
                    }
                    Some('\\') if i + 1 < chars.len() => {
                        s.push(chars[i + 1]);
                        advance(&mut i, &mut line, &mut col, 2);
                    }
                    Some(&ch) => {
                        s.push(ch);
                        advance(&mut i, &mut line, &mut col, 1);
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), line: tl, col: tc });
        } else if c == '-' && chars.get(i + 1) == Some(&'-') {
            let rest: String = chars[i..chars.len().min(i + 9)].iter().collect();
            let (tok, n) = if rest.starts_with("--BODY--") {
                (Tok::Body, 8)
            } else if rest.starts_with("--END--") {
                (Tok::End, 7)
            } else if rest.starts_with("--ABORT--") {
                (Tok::Abort, 9)
            } else {
                return Err(err(tl, tc, "unexpected '--'"));
            };
            advance(&mut i, &mut line, &mut col, n);
            out.push(Token { tok, line: tl, col: tc });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse().map_err(|_| err(tl, tc, "integer out of range"))?;
            out.push(Token { tok: Tok::Int(v), line: tl, col: tc });
        } else if c.is_ascii_alphabetic() || c == '_' || c == '@' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || matches!(chars[i], '_' | '-' | '.' | '@')) {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let s: String = chars[start..i].iter().collect();
            if chars.get(i) == Some(&':') {
                advance(&mut i, &mut line, &mut col, 1);
                out.push(Token { tok: Tok::Header(s), line: tl, col: tc });
            } else {
                out.push(Token { tok: Tok::Ident(s), line: tl, col: tc });
            }
        } else if "[]{}()!&|".contains(c) {
            advance(&mut i, &mut line, &mut col, 1);
            out.push(Token { tok: Tok::Punct(c), line: tl, col: tc });
        } else {
            return Err(err(tl, tc, &format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}
