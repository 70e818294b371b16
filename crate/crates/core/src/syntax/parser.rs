//! Recursive-descent parser with precedence climbing for expressions.
//!
//! Precedence, loosest first: `=>` (right-assoc), `||`, `&&`, `!`,
//! comparisons, `+ -`, `* / %`, unary minus. A chain of comparisons such as
//! `1 <= i <= |A|` is read as the conjunction of its adjacent pairs.

use std::collections::BTreeSet;

use num_bigint::BigInt;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, ParseErrorKind, ParseOptions};

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    opts: ParseOptions,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    pub(crate) fn new(src: &str, opts: ParseOptions) -> PResult<Self> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            opts,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        if self.pos == 0 {
            self.span()
        } else {
            self.toks[self.pos - 1].span
        }
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let found = self.peek().to_string();
        let mut err = ParseError::new(
            ParseErrorKind::Syntax,
            self.span(),
            format!("expected {}, found {found}", expected.join(" or ")),
        );
        err.expected = expected.iter().map(|s| s.to_string()).collect();
        err
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(&[&tok.to_string()]))
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let sp = self.advance().span;
                Ok((name, sp))
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    pub(crate) fn program(&mut self) -> PResult<Program> {
        let mut procedures: Vec<Procedure> = Vec::new();
        while *self.peek() != Tok::Eof {
            let proc = self.procedure()?;
            if procedures.iter().any(|p| p.name == proc.name) {
                return Err(ParseError::new(
                    ParseErrorKind::DuplicateProcedure,
                    proc.span,
                    format!("procedure `{}` is defined more than once", proc.name),
                ));
            }
            let known: BTreeSet<&str> = procedures.iter().map(|p| p.name.as_str()).collect();
            check_calls(&proc.body, &proc.name, &known)?;
            procedures.push(proc);
        }
        Ok(Program { procedures })
    }

    fn procedure(&mut self) -> PResult<Procedure> {
        let (name, start) = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params: Vec<String> = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let (p, sp) = self.ident()?;
                if params.contains(&p) {
                    return Err(ParseError::new(
                        ParseErrorKind::DuplicateParameter,
                        sp,
                        format!("parameter `{p}` is declared twice"),
                    ));
                }
                params.push(p);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let mut pre = Vec::new();
        let mut post = Vec::new();
        loop {
            if self.eat(&Tok::Pre) {
                pre.push(Clause::declared(self.expr()?));
            } else if self.eat(&Tok::Post) {
                post.push(Clause::declared(self.expr()?));
            } else {
                break;
            }
        }
        self.expect(Tok::LBrace)?;
        let body = self.block(&[Tok::RBrace])?;
        let end = self.expect(Tok::RBrace)?;
        Ok(Procedure {
            name,
            params,
            pre,
            post,
            body,
            span: start.to(end),
        })
    }

    /// Statements up to (not including) one of `terminators`.
    fn block(&mut self, terminators: &[Tok]) -> PResult<Sentence> {
        let mut items = Vec::new();
        while !terminators.contains(self.peek()) {
            if *self.peek() == Tok::Eof {
                let names: Vec<String> = terminators.iter().map(|t| t.to_string()).collect();
                let names: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                return Err(self.unexpected(&names));
            }
            items.push(self.statement()?);
        }
        if items.is_empty() {
            return Ok(Sentence::skip().with_span(self.span()));
        }
        Ok(Sentence::seq_all(items))
    }

    fn statement(&mut self) -> PResult<Sentence> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Skip => {
                self.advance();
                Ok(Sentence::new(SentenceKind::Skip, start))
            }
            Tok::Local => {
                self.advance();
                let (name, _) = self.ident()?;
                self.expect(Tok::Arrow)?;
                let init = self.expr()?;
                let span = start.to(init.span);
                Ok(Sentence::new(SentenceKind::Local { name, init }, span))
            }
            Tok::If => {
                self.advance();
                let guard = self.expr()?;
                self.expect(Tok::Then)?;
                let then_branch = self.block(&[Tok::Else, Tok::Fi])?;
                if *self.peek() == Tok::Fi {
                    return Err(ParseError::new(
                        ParseErrorKind::MissingElse,
                        self.span(),
                        "`if` requires an `else` branch".to_string(),
                    ));
                }
                self.expect(Tok::Else)?;
                let else_branch = self.block(&[Tok::Fi])?;
                let end = self.expect(Tok::Fi)?;
                Ok(Sentence::new(
                    SentenceKind::If {
                        guard,
                        then_branch: Box::new(then_branch),
                        else_branch: Box::new(else_branch),
                    },
                    start.to(end),
                ))
            }
            Tok::While => {
                self.advance();
                let guard = self.expr()?;
                let mut invariants = Vec::new();
                while self.eat(&Tok::Inv) {
                    invariants.push(Clause::declared(self.expr()?));
                }
                if invariants.is_empty() {
                    return Err(ParseError::new(
                        ParseErrorKind::MissingInvariant,
                        self.span(),
                        "`while` requires at least one `:?!` invariant".to_string(),
                    ));
                }
                if *self.peek() != Tok::Variant {
                    return Err(ParseError::new(
                        ParseErrorKind::MissingVariant,
                        self.span(),
                        "`while` requires exactly one `:#` variant".to_string(),
                    ));
                }
                self.advance();
                let variant = self.expr()?;
                if *self.peek() == Tok::Variant {
                    return Err(ParseError::new(
                        ParseErrorKind::MissingVariant,
                        self.span(),
                        "`while` accepts exactly one `:#` variant".to_string(),
                    ));
                }
                self.expect(Tok::Do)?;
                let body = self.block(&[Tok::Od])?;
                let end = self.expect(Tok::Od)?;
                Ok(Sentence::new(
                    SentenceKind::While {
                        guard,
                        invariants,
                        variant,
                        body: Box::new(body),
                    },
                    start.to(end),
                ))
            }
            Tok::Call => {
                self.advance();
                let (callee, _) = self.ident()?;
                self.expect(Tok::LParen)?;
                let mut args: Vec<String> = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        let (a, sp) = match self.peek() {
                            Tok::Ident(_) => self.ident()?,
                            _ => {
                                let mut e = self.unexpected(&["identifier"]);
                                e.message = format!(
                                    "call arguments must be variables; {}",
                                    e.message
                                );
                                return Err(e);
                            }
                        };
                        if args.contains(&a) {
                            return Err(ParseError::new(
                                ParseErrorKind::AliasedCall,
                                sp,
                                format!("variable `{a}` passed twice to `{callee}`; call arguments must be distinct"),
                            ));
                        }
                        args.push(a);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                let end = self.expect(Tok::RParen)?;
                Ok(Sentence::new(SentenceKind::Call { callee, args }, start.to(end)))
            }
            Tok::For => {
                self.advance();
                let (index, _) = self.ident()?;
                self.expect(Tok::From)?;
                let lo = self.expr()?;
                self.expect(Tok::To)?;
                let hi = self.expr()?;
                self.expect(Tok::Do)?;
                let body = self.block(&[Tok::Od])?;
                let end = self.expect(Tok::Od)?;
                Ok(Sentence::new(
                    SentenceKind::For {
                        index,
                        lo,
                        hi,
                        body: Box::new(body),
                    },
                    start.to(end),
                ))
            }
            Tok::Map => {
                self.advance();
                let body = self.block(&[Tok::In])?;
                self.expect(Tok::In)?;
                let (array, _) = self.ident()?;
                self.expect(Tok::LBracket)?;
                self.expect(Tok::DotDot)?;
                let (index, _) = self.ident()?;
                self.expect(Tok::DotDot)?;
                let end = self.expect(Tok::RBracket)?;
                Ok(Sentence::new(
                    SentenceKind::Map {
                        body: Box::new(body),
                        array,
                        index,
                    },
                    start.to(end),
                ))
            }
            Tok::Ident(target) => {
                self.advance();
                if self.eat(&Tok::LBracket) {
                    // `A[i] <- e` abbreviates `A <- update A on i with e`
                    let index = self.expr()?;
                    self.expect(Tok::RBracket)?;
                    self.expect(Tok::Arrow)?;
                    let value = self.expr()?;
                    let span = start.to(value.span);
                    let array = Expr::new(ExprKind::Var(target.clone()), start);
                    let value = Expr::new(
                        ExprKind::Update(Box::new(array), Box::new(index), Box::new(value)),
                        span,
                    );
                    return Ok(Sentence::new(SentenceKind::Assign { target, value }, span));
                }
                self.expect(Tok::Arrow)?;
                let value = self.expr()?;
                let span = start.to(value.span);
                Ok(Sentence::new(SentenceKind::Assign { target, value }, span))
            }
            _ => Err(self.unexpected(&[
                "statement",
                "`local`",
                "`if`",
                "`while`",
                "`call`",
                "`for`",
                "`map`",
                "`skip`",
            ])),
        }
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        self.implies()
    }

    fn implies(&mut self) -> PResult<Expr> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implies()?;
            return Ok(bin(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<Expr> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.and()?;
            lhs = bin(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> PResult<Expr> {
        let mut lhs = self.not()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.not()?;
            lhs = bin(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Bang {
            let start = self.advance().span;
            let e = self.not()?;
            let span = start.to(e.span);
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(e)), span));
        }
        self.comparison()
    }

    fn comparison_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            _ => return None,
        })
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let first = self.additive()?;
        let mut operands = vec![first];
        let mut ops = Vec::new();
        while let Some(op) = self.comparison_op() {
            self.advance();
            ops.push(op);
            operands.push(self.additive()?);
        }
        if ops.is_empty() {
            return Ok(operands.pop().expect("one operand"));
        }
        let mut result: Option<Expr> = None;
        for (i, op) in ops.into_iter().enumerate() {
            let cmp = bin(op, operands[i].clone(), operands[i + 1].clone());
            result = Some(match result {
                None => cmp,
                Some(acc) => bin(BinOp::And, acc, cmp),
            });
        }
        Ok(result.expect("at least one comparison"))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = bin(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Minus {
            let start = self.advance().span;
            if let Tok::Int(n) = self.peek().clone() {
                // a negated literal is kept as a single literal node
                if !matches!(self.peek_at(1), Tok::LBracket) {
                    let end = self.advance().span;
                    return Ok(Expr::new(ExprKind::Int(-n), start.to(end)));
                }
            }
            let e = self.unary()?;
            let span = start.to(e.span);
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(e)), span));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while *self.peek() == Tok::LBracket {
            self.advance();
            let idx = self.expr()?;
            let end = self.expect(Tok::RBracket)?;
            let span = e.span.to(end);
            e = Expr::new(ExprKind::Access(Box::new(e), Box::new(idx)), span);
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(Expr::new(ExprKind::Int(n), start))
            }
            Tok::True => {
                self.advance();
                Ok(Expr::new(ExprKind::Bool(true), start))
            }
            Tok::False => {
                self.advance();
                Ok(Expr::new(ExprKind::Bool(false), start))
            }
            Tok::Ident(name) => {
                self.advance();
                if *self.peek() == Tok::AtPre {
                    let end = self.advance().span;
                    return Ok(Expr::new(ExprKind::VarAtPre(name), start.to(end)));
                }
                Ok(Expr::new(ExprKind::Var(name), start))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Bar => {
                self.advance();
                let e = self.additive()?;
                let end = self.expect(Tok::Bar)?;
                Ok(Expr::new(ExprKind::Size(Box::new(e)), start.to(end)))
            }
            Tok::Update => {
                self.advance();
                let array = self.additive()?;
                self.expect(Tok::On)?;
                let index = self.additive()?;
                self.expect(Tok::With)?;
                let value = self.additive()?;
                let span = start.to(value.span);
                Ok(Expr::new(
                    ExprKind::Update(Box::new(array), Box::new(index), Box::new(value)),
                    span,
                ))
            }
            Tok::ForallDash | Tok::ExistsDash => {
                let kind = if *self.peek() == Tok::ForallDash {
                    QuantKind::Forall
                } else {
                    QuantKind::Exists
                };
                self.advance();
                let (var, _) = self.ident()?;
                self.expect(Tok::Slash)?;
                let lo = self.additive()?;
                self.expect(Tok::Le)?;
                let (var2, sp) = self.ident()?;
                if var2 != var {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        sp,
                        format!("quantifier range must constrain the bound variable `{var}`, found `{var2}`"),
                    ));
                }
                self.expect(Tok::Lt)?;
                let hi = self.additive()?;
                self.expect(Tok::Colon)?;
                let body = self.expr()?;
                let span = start.to(body.span);
                Ok(Expr::new(
                    ExprKind::Quant {
                        kind,
                        var,
                        lo: Box::new(lo),
                        hi: Box::new(hi),
                        body: Box::new(body),
                    },
                    span,
                ))
            }
            Tok::Exists if self.opts.internal => {
                self.advance();
                let mut vars = Vec::new();
                loop {
                    let (v, _) = self.ident()?;
                    vars.push(Binder { name: v, ty: None });
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::LParen)?;
                let body = self.expr()?;
                let end = self.expect(Tok::RParen)?;
                Ok(Expr::new(
                    ExprKind::Exists {
                        vars,
                        body: Box::new(body),
                    },
                    start.to(end),
                ))
            }
            Tok::Exists => Err(ParseError::new(
                ParseErrorKind::InternalSyntax,
                start,
                "unbounded `exists` is internal syntax and cannot appear in source programs"
                    .to_string(),
            )),
            _ => Err(self.unexpected(&["expression"])),
        }
    }

    pub(crate) fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub(crate) fn trailing_error(&self) -> ParseError {
        self.unexpected(&["end of input"])
    }

    #[allow(dead_code)]
    pub(crate) fn last_span(&self) -> Span {
        self.prev_span()
    }
}

fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
    let span = l.span.to(r.span);
    Expr::new(ExprKind::Binary(op, Box::new(l), Box::new(r)), span)
}

fn check_calls(s: &Sentence, current: &str, known: &BTreeSet<&str>) -> PResult<()> {
    match &s.kind {
        SentenceKind::Call { callee, .. } => {
            if callee == current {
                return Err(ParseError::new(
                    ParseErrorKind::RecursiveCall,
                    s.span,
                    format!("procedure `{current}` calls itself; recursion is not allowed"),
                ));
            }
            if !known.contains(callee.as_str()) {
                return Err(ParseError::new(
                    ParseErrorKind::UndefinedProcedure,
                    s.span,
                    format!("call to `{callee}`, which is not defined before `{current}`"),
                ));
            }
            Ok(())
        }
        SentenceKind::If {
            then_branch,
            else_branch,
            ..
        } => {
            check_calls(then_branch, current, known)?;
            check_calls(else_branch, current, known)
        }
        SentenceKind::While { body, .. }
        | SentenceKind::For { body, .. }
        | SentenceKind::Map { body, .. } => check_calls(body, current, known),
        SentenceKind::Seq(a, b) => {
            check_calls(a, current, known)?;
            check_calls(b, current, known)
        }
        _ => Ok(()),
    }
}

#[allow(dead_code)]
fn big(n: i64) -> BigInt {
    BigInt::from(n)
}
