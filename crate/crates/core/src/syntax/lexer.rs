use std::fmt;

use num_bigint::BigInt;

use super::ast::Span;
use super::{ParseError, ParseErrorKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    // keywords
    Local,
    If,
    Then,
    Else,
    Fi,
    While,
    Do,
    Od,
    Call,
    For,
    From,
    To,
    Map,
    In,
    Update,
    On,
    With,
    Skip,
    True,
    False,
    /// `forall-`
    ForallDash,
    /// `exists-`
    ExistsDash,
    /// bare `exists` (internal syntax only)
    Exists,
    // annotation markers
    Pre,
    Post,
    Inv,
    Variant,
    // punctuation and operators
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Slash,
    DotDot,
    Bar,
    OrOr,
    AndAnd,
    Bang,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Percent,
    Implies,
    Arrow,
    AtPre,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(x) => return write!(f, "identifier `{x}`"),
            Tok::Int(n) => return write!(f, "integer `{n}`"),
            Tok::Local => "`local`",
            Tok::If => "`if`",
            Tok::Then => "`then`",
            Tok::Else => "`else`",
            Tok::Fi => "`fi`",
            Tok::While => "`while`",
            Tok::Do => "`do`",
            Tok::Od => "`od`",
            Tok::Call => "`call`",
            Tok::For => "`for`",
            Tok::From => "`from`",
            Tok::To => "`to`",
            Tok::Map => "`map`",
            Tok::In => "`in`",
            Tok::Update => "`update`",
            Tok::On => "`on`",
            Tok::With => "`with`",
            Tok::Skip => "`skip`",
            Tok::True => "`true`",
            Tok::False => "`false`",
            Tok::ForallDash => "`forall-`",
            Tok::ExistsDash => "`exists-`",
            Tok::Exists => "`exists`",
            Tok::Pre => "`:?`",
            Tok::Post => "`:!`",
            Tok::Inv => "`:?!`",
            Tok::Variant => "`:#`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Comma => "`,`",
            Tok::Colon => "`:`",
            Tok::Slash => "`/`",
            Tok::DotDot => "`..`",
            Tok::Bar => "`|`",
            Tok::OrOr => "`||`",
            Tok::AndAnd => "`&&`",
            Tok::Bang => "`!`",
            Tok::Eq => "`=`",
            Tok::Ne => "`/=`",
            Tok::Lt => "`<`",
            Tok::Le => "`<=`",
            Tok::Gt => "`>`",
            Tok::Ge => "`>=`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::Percent => "`%`",
            Tok::Implies => "`=>`",
            Tok::Arrow => "`<-`",
            Tok::AtPre => "`@pre`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "local" => Tok::Local,
        "if" => Tok::If,
        "then" => Tok::Then,
        "else" => Tok::Else,
        "fi" => Tok::Fi,
        "while" => Tok::While,
        "do" => Tok::Do,
        "od" => Tok::Od,
        "call" => Tok::Call,
        "for" => Tok::For,
        "from" => Tok::From,
        "to" => Tok::To,
        "map" => Tok::Map,
        "in" => Tok::In,
        "update" => Tok::Update,
        "on" => Tok::On,
        "with" => Tok::With,
        "skip" => Tok::Skip,
        "true" => Tok::True,
        "false" => Tok::False,
        "exists" => Tok::Exists,
        _ => return None,
    })
}

pub fn is_keyword(word: &str) -> bool {
    keyword(word).is_some() || word == "forall"
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn peek(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn bump(&mut self) {
        if let Some(c) = self.src[self.pos..].chars().next() {
            self.pos += c.len_utf8();
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek(0) {
                Some(c) if c.is_ascii_whitespace() => self.bump(),
                Some(b'/') if self.peek(1) == Some(b'/') => {
                    while let Some(c) = self.peek(0) {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn is_ident_start(c: u8) -> bool {
        c.is_ascii_alphabetic() || c == b'_'
    }

    fn is_ident_continue(c: u8) -> bool {
        c.is_ascii_alphanumeric() || c == b'_' || c == b'\''
    }

    fn next_token(&mut self) -> Result<Token, ParseError> {
        self.skip_trivia();
        let start = self.pos;
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek(0) else {
            return Ok(Token {
                tok: Tok::Eof,
                span: Span::new(start, start, line, col),
            });
        };
        let tok = if Self::is_ident_start(c) {
            while self.peek(0).is_some_and(Self::is_ident_continue) {
                self.bump();
            }
            let word = &self.src[start..self.pos];
            if (word == "forall" || word == "exists") && self.peek(0) == Some(b'-') {
                self.bump();
                if word == "forall" {
                    Tok::ForallDash
                } else {
                    Tok::ExistsDash
                }
            } else if let Some(kw) = keyword(word) {
                kw
            } else {
                Tok::Ident(word.to_string())
            }
        } else if c.is_ascii_digit() {
            while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
            let digits = &self.src[start..self.pos];
            Tok::Int(digits.parse().expect("digit run parses as integer"))
        } else {
            let two = |a: u8, b: u8| c == a && self_peek1(self.bytes, self.pos) == Some(b);
            let (tok, len) = if c == b':' && self.peek(1) == Some(b'?') && self.peek(2) == Some(b'!') {
                (Tok::Inv, 3)
            } else if two(b':', b'?') {
                (Tok::Pre, 2)
            } else if two(b':', b'!') {
                (Tok::Post, 2)
            } else if two(b':', b'#') {
                (Tok::Variant, 2)
            } else if two(b'.', b'.') {
                (Tok::DotDot, 2)
            } else if two(b'|', b'|') {
                (Tok::OrOr, 2)
            } else if two(b'&', b'&') {
                (Tok::AndAnd, 2)
            } else if two(b'/', b'=') {
                (Tok::Ne, 2)
            } else if two(b'<', b'=') {
                (Tok::Le, 2)
            } else if two(b'>', b'=') {
                (Tok::Ge, 2)
            } else if two(b'<', b'-') {
                (Tok::Arrow, 2)
            } else if two(b'=', b'>') {
                (Tok::Implies, 2)
            } else if self.src[self.pos..].starts_with("@pre")
                && !self
                    .bytes
                    .get(self.pos + 4)
                    .copied()
                    .is_some_and(Self::is_ident_continue)
            {
                (Tok::AtPre, 4)
            } else {
                let t = match c {
                    b'(' => Tok::LParen,
                    b')' => Tok::RParen,
                    b'{' => Tok::LBrace,
                    b'}' => Tok::RBrace,
                    b'[' => Tok::LBracket,
                    b']' => Tok::RBracket,
                    b',' => Tok::Comma,
                    b':' => Tok::Colon,
                    b'/' => Tok::Slash,
                    b'|' => Tok::Bar,
                    b'!' => Tok::Bang,
                    b'=' => Tok::Eq,
                    b'<' => Tok::Lt,
                    b'>' => Tok::Gt,
                    b'+' => Tok::Plus,
                    b'-' => Tok::Minus,
                    b'*' => Tok::Star,
                    b'%' => Tok::Percent,
                    _ => {
                        let ch = self.src[self.pos..].chars().next().unwrap_or('?');
                        return Err(ParseError::new(
                            ParseErrorKind::Lexical,
                            Span::new(start, start + ch.len_utf8(), line, col),
                            format!("unexpected character `{ch}`"),
                        ));
                    }
                };
                (t, 1)
            };
            for _ in 0..len {
                self.bump();
            }
            tok
        };
        Ok(Token {
            tok,
            span: Span::new(start, self.pos, line, col),
        })
    }
}

fn self_peek1(bytes: &[u8], pos: usize) -> Option<u8> {
    bytes.get(pos + 1).copied()
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        let t = lx.next_token()?;
        let eof = t.tok == Tok::Eof;
        out.push(t);
        if eof {
            return Ok(out);
        }
    }
}
