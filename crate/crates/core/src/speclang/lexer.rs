use std::fmt;

use super::{Pos, SpecError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Quoted(String),
    Number(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Eq,
    Neq,
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Quoted(s) => write!(f, "string {s:?}"),
            Tok::Number(s) => write!(f, "number `{s}`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Neq => f.write_str("`!=`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn lex_error(pos: Pos, expected: &str, found: String) -> SpecError {
    SpecError::Syntax {
        pos,
        expected: vec![expected.to_owned()],
        found,
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SpecError> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let simple = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            ':' => Some(Tok::Colon),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(tok) = simple {
            bump!();
            tokens.push(Token { tok, pos });
            continue;
        }
        match c {
            '!' | '-' => {
                let want = if c == '!' { '=' } else { '>' };
                bump!();
                if i < chars.len() && chars[i] == want {
                    bump!();
                    let tok = if c == '!' { Tok::Neq } else { Tok::Arrow };
                    tokens.push(Token { tok, pos });
                } else {
                    let found = chars.get(i).map_or("end of input".into(), |c| format!("{c:?}"));
                    return Err(lex_error(
                        Pos { line, column: col },
                        &format!("`{want}` after `{c}`"),
                        found,
                    ));
                }
            }
            '"' => {
                bump!();
                let mut text = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => {
                            return Err(lex_error(
                                Pos { line, column: col },
                                "closing `\"`",
                                "end of line".into(),
                            ))
                        }
                        Some('"') => {
                            bump!();
                            break;
                        }
                        Some('\\') => {
                            bump!();
                            match chars.get(i) {
                                Some(&e @ ('"' | '\\')) => {
                                    text.push(e);
                                    bump!();
                                }
                                other => {
                                    return Err(lex_error(
                                        Pos { line, column: col },
                                        "escape `\\\"` or `\\\\`",
                                        other.map_or("end of input".into(), |c| format!("{c:?}")),
                                    ))
                                }
                            }
                        }
                        Some(&ch) => {
                            text.push(ch);
                            bump!();
                        }
                    }
                }
                tokens.push(Token {
                    tok: Tok::Quoted(text),
                    pos,
                });
            }
            c if c.is_ascii_digit() => {
                let mut text = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    text.push(chars[i]);
                    bump!();
                }
                if i < chars.len() && chars[i] == '.' {
                    text.push('.');
                    bump!();
                    if !(i < chars.len() && chars[i].is_ascii_digit()) {
                        let found = chars.get(i).map_or("end of input".into(), |c| format!("{c:?}"));
                        return Err(lex_error(Pos { line, column: col }, "digit", found));
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        text.push(chars[i]);
                        bump!();
                    }
                }
                if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                    return Err(lex_error(
                        Pos { line, column: col },
                        "delimiter after number",
                        format!("{:?}", chars[i]),
                    ));
                }
                tokens.push(Token {
                    tok: Tok::Number(text),
                    pos,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut text = String::new();
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    text.push(chars[i]);
                    bump!();
                }
                tokens.push(Token {
                    tok: Tok::Ident(text),
                    pos,
                });
            }
            other => return Err(lex_error(pos, "token", format!("{other:?}"))),
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, column: col },
    });
    Ok(tokens)
}
