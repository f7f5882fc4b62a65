use crate::span::{Pos, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Colon,
    Comma,
    Dot,
    DotDot,
    Assign,
    Plus,
    Minus,
    Star,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Implies,
    Pipe,
    /// `--`, used by diagram interfaces.
    DashDash,
    /// `->`, used by diagram references.
    Arrow,
    /// `∀`
    Forall,
    /// `∃`
    Exists,
    /// `∈`
    In,
    /// `∅`
    EmptySet,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::DotDot => "..",
            Tok::Assign => ":=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::Implies => "=>",
            Tok::Pipe => "|",
            Tok::DashDash => "--",
            Tok::Arrow => "->",
            Tok::Forall => "∀",
            Tok::Exists => "∃",
            Tok::In => "∈",
            Tok::EmptySet => "∅",
            Tok::Ident(_) | Tok::Int(_) | Tok::Str(_) | Tok::Eof => "",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col, offset: self.offset }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.offset..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

/// Splits source text into tokens. The last token is always [`Tok::Eof`].
pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor { src, offset: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        // whitespace and line comments
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                }
                Some('/') if cur.peek2() == Some('/') => {
                    while !matches!(cur.peek(), None | Some('\n')) {
                        cur.bump();
                    }
                }
                _ => break,
            }
        }
        let start = cur.pos();
        let Some(c) = cur.bump() else {
            out.push(Token { tok: Tok::Eof, span: Span::new(start, start) });
            return Ok(out);
        };
        let err = |cur: &Cursor, msg: String| LexError { message: msg, span: Span::new(start, cur.pos()) };
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '∀' => Tok::Forall,
            '∃' => Tok::Exists,
            '∈' => Tok::In,
            '∅' => Tok::EmptySet,
            '∧' => Tok::AndAnd,
            '∨' => Tok::OrOr,
            '¬' => Tok::Bang,
            '⇒' => Tok::Implies,
            '≠' => Tok::Ne,
            '≤' => Tok::Le,
            '≥' => Tok::Ge,
            ':' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Assign
                } else {
                    Tok::Colon
                }
            }
            '.' => {
                if cur.peek() == Some('.') {
                    cur.bump();
                    Tok::DotDot
                } else {
                    Tok::Dot
                }
            }
            '-' => match cur.peek() {
                Some('-') => {
                    cur.bump();
                    Tok::DashDash
                }
                Some('>') => {
                    cur.bump();
                    Tok::Arrow
                }
                _ => Tok::Minus,
            },
            '=' => {
                if cur.peek() == Some('>') {
                    cur.bump();
                    Tok::Implies
                } else {
                    Tok::Eq
                }
            }
            '!' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Ne
                } else {
                    Tok::Bang
                }
            }
            '<' => match cur.peek() {
                Some('=') => {
                    cur.bump();
                    Tok::Le
                }
                Some('>') => {
                    cur.bump();
                    Tok::Ne
                }
                _ => Tok::Lt,
            },
            '>' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Ge
                } else {
                    Tok::Gt
                }
            }
            '&' => {
                if cur.peek() == Some('&') {
                    cur.bump();
                    Tok::AndAnd
                } else {
                    return Err(err(&cur, "expected `&&`".into()));
                }
            }
            '|' => {
                if cur.peek() == Some('|') {
                    cur.bump();
                    Tok::OrOr
                } else {
                    Tok::Pipe
                }
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None | Some('\n') => return Err(err(&cur, "unterminated string literal".into())),
                        Some('"') => break,
                        Some('\\') => match cur.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            _ => return Err(err(&cur, "unknown escape in string literal".into())),
                        },
                        Some(ch) => s.push(ch),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() => {
                let mut text = String::from(c);
                while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                    text.push(d);
                    cur.bump();
                }
                match text.parse::<u64>() {
                    Ok(v) if v <= i64::MAX as u64 => Tok::Int(v),
                    _ => return Err(err(&cur, format!("integer literal {text} is too large"))),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut text = String::from(c);
                while let Some(d) = cur.peek().filter(|d| d.is_ascii_alphanumeric() || *d == '_') {
                    text.push(d);
                    cur.bump();
                }
                Tok::Ident(text)
            }
            other => return Err(err(&cur, format!("unexpected character {other:?}"))),
        };
        out.push(Token { tok, span: Span::new(start, cur.pos()) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_and_unicode() {
        assert_eq!(
            toks("a<>b ∧ x ≤ 3 => y := -1"),
            vec![
                Tok::Ident("a".into()),
                Tok::Ne,
                Tok::Ident("b".into()),
                Tok::AndAnd,
                Tok::Ident("x".into()),
                Tok::Le,
                Tok::Int(3),
                Tok::Implies,
                Tok::Ident("y".into()),
                Tok::Assign,
                Tok::Minus,
                Tok::Int(1),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let t = lex("// hi\n  x").unwrap();
        assert_eq!(t[0].span.start.line, 2);
        assert_eq!(t[0].span.start.col, 3);
    }

    #[test]
    fn errors_are_located() {
        let e = lex("x @ y").unwrap_err();
        assert_eq!((e.span.start.col, e.span.end.col), (3, 4));
        assert!(lex("\"abc").is_err());
        assert!(lex("99999999999999999999").is_err());
    }
}
