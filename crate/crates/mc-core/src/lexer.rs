//! Tokenizer shared by the three DSL front-ends (system, observer, MSC).
//!
//! One token language covers all three grammars. Keywords are reserved:
//! a keyword is never accepted where an identifier is required. Positions
//! are 1-based line/column; `//` starts a comment running to end of line.

use crate::diag::{Diagnostic, Pos};
use std::fmt;

/// Words that can never be used as identifiers.
pub const KEYWORDS: &[&str] = &[
    "system", "signal", "process", "env", "queue", "var", "timer", "state",
    "initial", "on", "input", "output", "timeout", "spontaneous", "when",
    "to", "set", "reset", "emits", "Bool", "Int", "Enum", "true", "false",
    "and", "or", "not", "div", "mod", "observer", "kind", "success",
    "error", "cut", "from", "by", "in", "discard", "msc", "endmsc",
    "property", "type", "inst",
];

pub fn is_keyword(w: &str) -> bool {
    KEYWORDS.contains(&w)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    /// Identifier or keyword; the parser tells them apart.
    Word(String),
    Int(i64),
    /// `->`
    Arrow,
    /// `:=`
    Assign,
    /// `..`
    DotDot,
    /// `!=`
    NotEq,
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    At,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Colon,
    Dot,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "'{w}'"),
            Tok::Int(n) => write!(f, "'{n}'"),
            Tok::Arrow => write!(f, "'->'"),
            Tok::Assign => write!(f, "':='"),
            Tok::DotDot => write!(f, "'..'"),
            Tok::NotEq => write!(f, "'!='"),
            Tok::Eq => write!(f, "'='"),
            Tok::Lt => write!(f, "'<'"),
            Tok::Le => write!(f, "'<='"),
            Tok::Gt => write!(f, "'>'"),
            Tok::Ge => write!(f, "'>='"),
            Tok::Plus => write!(f, "'+'"),
            Tok::Minus => write!(f, "'-'"),
            Tok::Star => write!(f, "'*'"),
            Tok::At => write!(f, "'@'"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::LBrace => write!(f, "'{{'"),
            Tok::RBrace => write!(f, "'}}'"),
            Tok::Semi => write!(f, "';'"),
            Tok::Comma => write!(f, "','"),
            Tok::Colon => write!(f, "':'"),
            Tok::Dot => write!(f, "'.'"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
    /// One past the last column of the token, on the same line. Lets the
    /// MSC header parser require `from-start` to be written without spaces.
    pub end_col: u32,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }
}

/// Tokenize `text`, ending with a single [`Tok::Eof`] token.
pub fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut lx = Lexer { chars: text.chars().peekable(), line: 1, col: 1 };
    let mut toks = Vec::new();
    loop {
        // Skip whitespace and comments.
        loop {
            match lx.peek() {
                Some(c) if c.is_whitespace() => {
                    lx.bump();
                }
                Some('/') => {
                    let pos = lx.pos();
                    lx.bump();
                    if lx.peek() == Some('/') {
                        while let Some(c) = lx.peek() {
                            if c == '\n' {
                                break;
                            }
                            lx.bump();
                        }
                    } else {
                        return Err(Diagnostic::error_at(
                            pos.line,
                            pos.col,
                            "unexpected character '/'",
                        ));
                    }
                }
                _ => break,
            }
        }
        let pos = lx.pos();
        let Some(c) = lx.peek() else {
            toks.push(Token { tok: Tok::Eof, pos, end_col: pos.col });
            return Ok(toks);
        };

        let tok = if c.is_ascii_alphabetic() {
            let mut w = String::new();
            while let Some(c) = lx.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    w.push(c);
                    lx.bump();
                } else {
                    break;
                }
            }
            Tok::Word(w)
        } else if c.is_ascii_digit() {
            let mut n: i64 = 0;
            while let Some(c) = lx.peek() {
                let Some(d) = c.to_digit(10) else { break };
                lx.bump();
                n = n
                    .checked_mul(10)
                    .and_then(|n| n.checked_add(d as i64))
                    .ok_or_else(|| {
                        Diagnostic::error_at(pos.line, pos.col, "integer literal too large")
                    })?;
            }
            Tok::Int(n)
        } else {
            lx.bump();
            match c {
                '-' if lx.peek() == Some('>') => {
                    lx.bump();
                    Tok::Arrow
                }
                '-' => Tok::Minus,
                ':' if lx.peek() == Some('=') => {
                    lx.bump();
                    Tok::Assign
                }
                ':' => Tok::Colon,
                '.' if lx.peek() == Some('.') => {
                    lx.bump();
                    Tok::DotDot
                }
                '.' => Tok::Dot,
                '!' if lx.peek() == Some('=') => {
                    lx.bump();
                    Tok::NotEq
                }
                '<' if lx.peek() == Some('=') => {
                    lx.bump();
                    Tok::Le
                }
                '<' => Tok::Lt,
                '>' if lx.peek() == Some('=') => {
                    lx.bump();
                    Tok::Ge
                }
                '>' => Tok::Gt,
                '=' => Tok::Eq,
                '+' => Tok::Plus,
                '*' => Tok::Star,
                '@' => Tok::At,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ';' => Tok::Semi,
                ',' => Tok::Comma,
                other => {
                    return Err(Diagnostic::error_at(
                        pos.line,
                        pos.col,
                        format!("unexpected character '{other}'"),
                    ));
                }
            }
        };
        toks.push(Token { tok, pos, end_col: lx.col });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<Tok> {
        lex(text).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn multi_character_operators_lex_greedily() {
        assert_eq!(
            kinds("-> := .. != <= >= < > = - . :"),
            vec![
                Tok::Arrow,
                Tok::Assign,
                Tok::DotDot,
                Tok::NotEq,
                Tok::Le,
                Tok::Ge,
                Tok::Lt,
                Tok::Gt,
                Tok::Eq,
                Tok::Minus,
                Tok::Dot,
                Tok::Colon,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn words_and_numbers_carry_positions() {
        let toks = lex("ab\n  12").unwrap();
        assert_eq!(toks[0].tok, Tok::Word("ab".into()));
        assert_eq!((toks[0].pos.line, toks[0].pos.col, toks[0].end_col), (1, 1, 3));
        assert_eq!(toks[1].tok, Tok::Int(12));
        assert_eq!((toks[1].pos.line, toks[1].pos.col, toks[1].end_col), (2, 3, 5));
    }

    #[test]
    fn comments_run_to_end_of_line() {
        assert_eq!(kinds("a // b c ; ->\nd"), vec![
            Tok::Word("a".into()),
            Tok::Word("d".into()),
            Tok::Eof
        ]);
    }

    #[test]
    fn stray_characters_are_rejected_with_position() {
        let d = lex("a\n  ?").unwrap_err();
        assert!(d.message.contains("unexpected character"), "{d}");
        assert_eq!(d.pos.map(|p| (p.line, p.col)), Some((2, 3)));
        let d = lex("!x").unwrap_err();
        assert!(d.message.contains("unexpected character '!'"), "{d}");
    }

    #[test]
    fn oversized_integers_are_rejected() {
        let d = lex("99999999999999999999").unwrap_err();
        assert!(d.message.contains("too large"), "{d}");
    }
}
