//! Tokenizer for the contract dialect. Never fails: unknown characters and
//! malformed literals become [`TokenKind::Error`] tokens for the parser to
//! report.

use crate::diagnostic::{Position, Span};
use chrono::NaiveDate;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Number(f64),
    Date(NaiveDate),
    Str(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Assign,
    Dot,
    Lt,
    Le,
    EqSign,
    Ge,
    Gt,
    Error(String),
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Number(n) => format!("number `{n}`"),
            TokenKind::Date(d) => format!("date `{d}`"),
            TokenKind::Str(_) => "string literal".to_owned(),
            TokenKind::LParen => "`(`".to_owned(),
            TokenKind::RParen => "`)`".to_owned(),
            TokenKind::Comma => "`,`".to_owned(),
            TokenKind::Semi => "`;`".to_owned(),
            TokenKind::Colon => "`:`".to_owned(),
            TokenKind::Assign => "`:=`".to_owned(),
            TokenKind::Dot => "`.`".to_owned(),
            TokenKind::Lt => "`<`".to_owned(),
            TokenKind::Le => "`<=`".to_owned(),
            TokenKind::EqSign => "`=`".to_owned(),
            TokenKind::Ge => "`>=`".to_owned(),
            TokenKind::Gt => "`>`".to_owned(),
            TokenKind::Error(msg) => msg.clone(),
            TokenKind::Eof => "end of input".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Position,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, mut f: impl FnMut(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if !f(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }
}

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Tokenizes `source`. The returned vector always ends with an `Eof` token.
pub fn lex(source: &str) -> Vec<Token> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        pos: Position::new(1, 1),
    };
    let mut out = Vec::new();
    loop {
        // whitespace and line comments
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                }
                Some('/') if cur.peek2() == Some('/') => {
                    cur.take_while(|c| c != '\n');
                }
                _ => break,
            }
        }
        let start = cur.pos;
        let Some(c) = cur.peek() else {
            out.push(Token {
                kind: TokenKind::Eof,
                span: Span::new(start, start),
            });
            return out;
        };
        let kind = if is_ident_start(c) {
            TokenKind::Ident(cur.take_while(is_ident_char))
        } else if c.is_ascii_digit() || (c == '-' && cur.peek2().is_some_and(|d| d.is_ascii_digit())) {
            lex_number_or_date(&mut cur)
        } else if c == '"' {
            lex_string(&mut cur)
        } else {
            cur.bump();
            match c {
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                ',' => TokenKind::Comma,
                ';' => TokenKind::Semi,
                '.' => TokenKind::Dot,
                '=' => TokenKind::EqSign,
                ':' if cur.peek() == Some('=') => {
                    cur.bump();
                    TokenKind::Assign
                }
                ':' => TokenKind::Colon,
                '<' if cur.peek() == Some('=') => {
                    cur.bump();
                    TokenKind::Le
                }
                '<' => TokenKind::Lt,
                '>' if cur.peek() == Some('=') => {
                    cur.bump();
                    TokenKind::Ge
                }
                '>' => TokenKind::Gt,
                other => TokenKind::Error(format!("unexpected character `{other}`")),
            }
        };
        out.push(Token {
            kind,
            span: Span::new(start, cur.pos),
        });
    }
}

fn lex_number_or_date(cur: &mut Cursor<'_>) -> TokenKind {
    let mut text = String::new();
    if cur.peek() == Some('-') {
        text.push('-');
        cur.bump();
    }
    text.push_str(&cur.take_while(|c| c.is_ascii_digit()));
    // ISO date: YYYY-MM-DD
    if !text.starts_with('-') && text.len() == 4 && cur.peek() == Some('-') {
        let rest = cur.take_while(|c| c.is_ascii_digit() || c == '-');
        let full = format!("{text}{rest}");
        return match NaiveDate::parse_from_str(&full, "%Y-%m-%d") {
            Ok(d) if full.len() == 10 => TokenKind::Date(d),
            _ => TokenKind::Error(format!("invalid date `{full}`")),
        };
    }
    if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
        text.push('.');
        text.push_str(&cur.take_while(|c| c.is_ascii_digit()));
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let mut ahead = cur.chars.clone();
        ahead.next();
        let sign_or_digit = ahead.next();
        let ok = match sign_or_digit {
            Some('+' | '-') => ahead.next().is_some_and(|c| c.is_ascii_digit()),
            Some(c) => c.is_ascii_digit(),
            None => false,
        };
        if ok {
            text.push(cur.bump().unwrap());
            if matches!(cur.peek(), Some('+' | '-')) {
                text.push(cur.bump().unwrap());
            }
            text.push_str(&cur.take_while(|c| c.is_ascii_digit()));
        }
    }
    match text.parse::<f64>() {
        Ok(n) if n.is_finite() => TokenKind::Number(n),
        _ => TokenKind::Error(format!("invalid number `{text}`")),
    }
}

fn lex_string(cur: &mut Cursor<'_>) -> TokenKind {
    cur.bump();
    let mut s = String::new();
    loop {
        match cur.bump() {
            None | Some('\n') => return TokenKind::Error("unterminated string literal".into()),
            Some('"') => return TokenKind::Str(s),
            Some('\\') => match cur.bump() {
                Some('n') => s.push('\n'),
                Some('t') => s.push('\t'),
                Some('"') => s.push('"'),
                Some('\\') => s.push('\\'),
                Some(other) => return TokenKind::Error(format!("invalid escape `\\{other}`")),
                None => return TokenKind::Error("unterminated string literal".into()),
            },
            Some(c) => s.push(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        lex(src).into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn dates_numbers_and_operators() {
        assert_eq!(
            kinds("x.voltage >= -2.5 2024-03-31 := <"),
            vec![
                TokenKind::Ident("x".into()),
                TokenKind::Dot,
                TokenKind::Ident("voltage".into()),
                TokenKind::Ge,
                TokenKind::Number(-2.5),
                TokenKind::Date(NaiveDate::from_ymd_opt(2024, 3, 31).unwrap()),
                TokenKind::Assign,
                TokenKind::Lt,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn invalid_calendar_date_is_an_error_token() {
        assert!(matches!(kinds("2023-02-30")[0], TokenKind::Error(_)));
    }

    #[test]
    fn comments_are_skipped_and_positions_tracked() {
        let toks = lex("// header\n  foo");
        assert_eq!(toks[0].kind, TokenKind::Ident("foo".into()));
        assert_eq!(toks[0].span.start, Position::new(2, 3));
        assert_eq!(toks[0].span.end, Position::new(2, 6));
    }

    #[test]
    fn string_escapes() {
        assert_eq!(kinds(r#""a\"b\\c""#)[0], TokenKind::Str("a\"b\\c".into()));
        assert!(matches!(kinds("\"open")[0], TokenKind::Error(_)));
    }
}
