//! Hand-rolled lexer. Line comments start with `--`.

use super::Diagnostic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    GenName(u64),
    Int(i64),
    Hash,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Bar,
    BarBar,
    Tilde,
    Colon,
    Semi,
    Dot,
    At,
    Eq,
    Star,
    Bang,
    Question,
    Plus,
    Amp,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
}

pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                i += 1;
            }
            '-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'-' {
                    while i < bytes.len() && bytes[i] != b'\n' {
                        i += 1;
                    }
                } else if i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                    let ds = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let n: i64 = src[ds..i].parse().map_err(|_| {
                        Diagnostic::error(start, i, "integer literal out of range")
                    })?;
                    toks.push(Token {
                        kind: TokenKind::Int(-n),
                        start,
                        end: i,
                    });
                } else {
                    return Err(Diagnostic::error(start, i + 1, "unexpected '-'"));
                }
            }
            '%' => {
                i += 1;
                let ds = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if ds == i {
                    return Err(Diagnostic::error(start, i, "expected digits after '%'"));
                }
                let n: u64 = src[ds..i]
                    .parse()
                    .map_err(|_| Diagnostic::error(start, i, "generated name out of range"))?;
                toks.push(Token {
                    kind: TokenKind::GenName(n),
                    start,
                    end: i,
                });
            }
            '0'..='9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: i64 = src[start..i]
                    .parse()
                    .map_err(|_| Diagnostic::error(start, i, "integer literal out of range"))?;
                toks.push(Token {
                    kind: TokenKind::Int(n),
                    start,
                    end: i,
                });
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'')
                {
                    i += 1;
                }
                toks.push(Token {
                    kind: TokenKind::Ident(src[start..i].to_string()),
                    start,
                    end: i,
                });
            }
            '|' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'|' {
                    i += 2;
                    toks.push(Token {
                        kind: TokenKind::BarBar,
                        start,
                        end: i,
                    });
                } else {
                    i += 1;
                    toks.push(Token {
                        kind: TokenKind::Bar,
                        start,
                        end: i,
                    });
                }
            }
            _ => {
                let kind = match c {
                    '#' => TokenKind::Hash,
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    '~' => TokenKind::Tilde,
                    ':' => TokenKind::Colon,
                    ';' => TokenKind::Semi,
                    '.' => TokenKind::Dot,
                    '@' => TokenKind::At,
                    '=' => TokenKind::Eq,
                    '*' => TokenKind::Star,
                    '!' => TokenKind::Bang,
                    '?' => TokenKind::Question,
                    '+' => TokenKind::Plus,
                    '&' => TokenKind::Amp,
                    _ => {
                        return Err(Diagnostic::error(
                            start,
                            start + c.len_utf8(),
                            format!("unexpected character {c:?}"),
                        ))
                    }
                };
                i += c.len_utf8();
                toks.push(Token {
                    kind,
                    start,
                    end: i,
                });
            }
        }
    }
    toks.push(Token {
        kind: TokenKind::Eof,
        start: src.len(),
        end: src.len(),
    });
    Ok(toks)
}
