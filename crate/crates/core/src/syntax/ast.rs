//! Abstract syntax for Pest programs.
//!
//! Every node carries a [`Span`]. Spans never participate in equality, so two
//! trees compare equal exactly when they are structurally the same.

use std::fmt;

use num_bigint::BigInt;
use serde::Serialize;

use crate::types::Ty;

/// Source location of a node. Line and column are 1-based; `start`/`end` are
/// byte offsets into the source text.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl Span {
    pub fn new(start: usize, end: usize, line: u32, col: u32) -> Self {
        Span {
            start,
            end,
            line,
            col,
        }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: Span) -> Span {
        if self.line == 0 {
            return other;
        }
        if other.line == 0 {
            return self;
        }
        let (line, col) = if self.start <= other.start {
            (self.line, self.col)
        } else {
            (other.line, other.col)
        };
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
            line,
            col,
        }
    }

    pub fn is_dummy(&self) -> bool {
        self.line == 0
    }

    /// True when `inner` lies within `self` (dummy spans are contained everywhere).
    pub fn contains(&self, inner: &Span) -> bool {
        inner.is_dummy() || self.is_dummy() || (self.start <= inner.start && inner.end <= self.end)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "=",
            BinOp::Ne => "/=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "=>",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or | BinOp::Implies)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuantKind {
    Forall,
    Exists,
}

/// Variable bound by an unbounded existential. The type is `None` only for
/// binders read back from internal syntax before type inference runs.
/// Equality compares names only, the type being derived information.
#[derive(Clone, Debug)]
pub struct Binder {
    pub name: String,
    pub ty: Option<Ty>,
}

impl PartialEq for Binder {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Binder {
    pub fn new(name: impl Into<String>, ty: Ty) -> Self {
        Binder {
            name: name.into(),
            ty: Some(ty),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Int(BigInt),
    Bool(bool),
    Var(String),
    /// `x@pre`
    VarAtPre(String),
    Access(Box<Expr>, Box<Expr>),
    /// `|A|`
    Size(Box<Expr>),
    /// `update A on i with e`
    Update(Box<Expr>, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `forall-k / lo <= k < hi : body`
    Quant {
        kind: QuantKind,
        var: String,
        lo: Box<Expr>,
        hi: Box<Expr>,
        body: Box<Expr>,
    },
    /// Unbounded existential, produced only by the calculi.
    Exists { vars: Vec<Binder>, body: Box<Expr> },
}

/// Name under which a variable occurrence is stored in states and environments:
/// `x` for `Var(x)` and `x@pre` for `VarAtPre(x)`.
pub fn pre_key(name: &str) -> String {
    format!("{name}@pre")
}

/// Splits a state key into its base name and whether it is an `@pre` copy.
pub fn split_key(key: &str) -> (&str, bool) {
    match key.strip_suffix("@pre") {
        Some(base) => (base, true),
        None => (key, false),
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn synth(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: Span::default(),
        }
    }

    pub fn with_span(mut self, span: Span) -> Self {
        self.span = span;
        self
    }

    pub fn int(n: impl Into<BigInt>) -> Self {
        Expr::synth(ExprKind::Int(n.into()))
    }

    pub fn bool(b: bool) -> Self {
        Expr::synth(ExprKind::Bool(b))
    }

    pub fn tt() -> Self {
        Expr::bool(true)
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::synth(ExprKind::Var(name.into()))
    }

    pub fn var_at_pre(name: impl Into<String>) -> Self {
        Expr::synth(ExprKind::VarAtPre(name.into()))
    }

    /// Builds the variable expression for a state key (`x` or `x@pre`).
    pub fn from_key(key: &str) -> Self {
        match split_key(key) {
            (base, true) => Expr::var_at_pre(base),
            (base, false) => Expr::var(base),
        }
    }

    pub fn access(array: Expr, index: Expr) -> Self {
        Expr::synth(ExprKind::Access(Box::new(array), Box::new(index)))
    }

    pub fn size(array: Expr) -> Self {
        Expr::synth(ExprKind::Size(Box::new(array)))
    }

    pub fn update(array: Expr, index: Expr, value: Expr) -> Self {
        Expr::synth(ExprKind::Update(
            Box::new(array),
            Box::new(index),
            Box::new(value),
        ))
    }

    pub fn unary(op: UnOp, e: Expr) -> Self {
        Expr::synth(ExprKind::Unary(op, Box::new(e)))
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Self {
        Expr::synth(ExprKind::Binary(op, Box::new(l), Box::new(r)))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Self {
        Expr::unary(UnOp::Not, e)
    }

    pub fn eq(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Eq, l, r)
    }

    pub fn lt(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Lt, l, r)
    }

    pub fn le(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Le, l, r)
    }

    pub fn gt(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Gt, l, r)
    }

    pub fn ne(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Ne, l, r)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Add, l, r)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Sub, l, r)
    }

    pub fn implies(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Implies, l, r)
    }

    pub fn or(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Or, l, r)
    }

    /// Conjunction that keeps `&&` chains left-nested and drops literal `true`.
    pub fn and(l: Expr, r: Expr) -> Self {
        if l.is_true() {
            return r;
        }
        if r.is_true() {
            return l;
        }
        let mut acc = l;
        for c in r.into_conjuncts() {
            acc = Expr::binary(BinOp::And, acc, c);
        }
        acc
    }

    pub fn and_all(items: impl IntoIterator<Item = Expr>) -> Self {
        items.into_iter().fold(Expr::tt(), Expr::and)
    }

    pub fn forall(var: impl Into<String>, lo: Expr, hi: Expr, body: Expr) -> Self {
        Expr::quant(QuantKind::Forall, var, lo, hi, body)
    }

    pub fn exists_bounded(var: impl Into<String>, lo: Expr, hi: Expr, body: Expr) -> Self {
        Expr::quant(QuantKind::Exists, var, lo, hi, body)
    }

    pub fn quant(kind: QuantKind, var: impl Into<String>, lo: Expr, hi: Expr, body: Expr) -> Self {
        Expr::synth(ExprKind::Quant {
            kind,
            var: var.into(),
            lo: Box::new(lo),
            hi: Box::new(hi),
            body: Box::new(body),
        })
    }

    pub fn exists(vars: Vec<Binder>, body: Expr) -> Self {
        Expr::synth(ExprKind::Exists {
            vars,
            body: Box::new(body),
        })
    }

    pub fn is_true(&self) -> bool {
        matches!(self.kind, ExprKind::Bool(true))
    }

    pub fn is_false(&self) -> bool {
        matches!(self.kind, ExprKind::Bool(false))
    }

    /// State key of a variable occurrence, `None` for any other expression.
    pub fn var_key(&self) -> Option<String> {
        match &self.kind {
            ExprKind::Var(x) => Some(x.clone()),
            ExprKind::VarAtPre(x) => Some(pre_key(x)),
            _ => None,
        }
    }

    /// Top-level `&&` operands, left to right.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            match &e.kind {
                ExprKind::Binary(BinOp::And, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                _ => out.push(e),
            }
        }
        walk(self, &mut out);
        out
    }

    pub fn into_conjuncts(self) -> Vec<Expr> {
        let mut out = Vec::new();
        fn walk(e: Expr, out: &mut Vec<Expr>) {
            match e.kind {
                ExprKind::Binary(BinOp::And, l, r) => {
                    walk(*l, out);
                    walk(*r, out);
                }
                _ => out.push(e),
            }
        }
        walk(self, &mut out);
        out
    }

    /// True if the tree contains an unbounded existential anywhere.
    pub fn has_unbounded_exists(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e.kind, ExprKind::Exists { .. }) {
                found = true;
            }
        });
        found
    }

    /// Pre-order traversal of every subexpression.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) | ExprKind::VarAtPre(_) => {}
            ExprKind::Access(a, i) => {
                a.visit(f);
                i.visit(f);
            }
            ExprKind::Size(a) => a.visit(f),
            ExprKind::Update(a, i, v) => {
                a.visit(f);
                i.visit(f);
                v.visit(f);
            }
            ExprKind::Unary(_, e) => e.visit(f),
            ExprKind::Binary(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            ExprKind::Quant { lo, hi, body, .. } => {
                lo.visit(f);
                hi.visit(f);
                body.visit(f);
            }
            ExprKind::Exists { body, .. } => body.visit(f),
        }
    }
}

/// Where an annotation clause came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    /// Written by the programmer.
    Declared,
    /// Synthesized by contract inference or strengthening.
    Inferred,
    /// Candidate invariant proposed by `for` expansion; must be verified.
    Guessed,
    /// Invariant produced by `map` expansion; holds by the construct's shape.
    ByConstruction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub expr: Expr,
    pub origin: Origin,
}

impl Clause {
    pub fn declared(expr: Expr) -> Self {
        Clause {
            expr,
            origin: Origin::Declared,
        }
    }

    pub fn new(expr: Expr, origin: Origin) -> Self {
        Clause { expr, origin }
    }
}

pub fn conj_clauses(clauses: &[Clause]) -> Expr {
    Expr::and_all(clauses.iter().map(|c| c.expr.clone()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sentence {
    pub kind: SentenceKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SentenceKind {
    Skip,
    Assign {
        target: String,
        value: Expr,
    },
    Local {
        name: String,
        init: Expr,
    },
    If {
        guard: Expr,
        then_branch: Box<Sentence>,
        else_branch: Box<Sentence>,
    },
    While {
        guard: Expr,
        invariants: Vec<Clause>,
        variant: Expr,
        body: Box<Sentence>,
    },
    Call {
        callee: String,
        args: Vec<String>,
    },
    For {
        index: String,
        lo: Expr,
        hi: Expr,
        body: Box<Sentence>,
    },
    /// `map body in array[..index..]`
    Map {
        body: Box<Sentence>,
        array: String,
        index: String,
    },
    Seq(Box<Sentence>, Box<Sentence>),
}

impl Sentence {
    pub fn new(kind: SentenceKind, span: Span) -> Self {
        Sentence { kind, span }
    }

    pub fn skip() -> Self {
        Sentence::new(SentenceKind::Skip, Span::default())
    }

    pub fn assign(target: impl Into<String>, value: Expr) -> Self {
        Sentence::new(
            SentenceKind::Assign {
                target: target.into(),
                value,
            },
            Span::default(),
        )
    }

    pub fn local(name: impl Into<String>, init: Expr) -> Self {
        Sentence::new(
            SentenceKind::Local {
                name: name.into(),
                init,
            },
            Span::default(),
        )
    }

    pub fn with_span(mut self, span: Span) -> Self {
        self.span = span;
        self
    }

    /// Sequential composition. `skip` is an identity and chains are kept
    /// right-nested, so the result does not depend on how it was grouped.
    pub fn seq(first: Sentence, second: Sentence) -> Sentence {
        match (first.kind, second.kind) {
            (SentenceKind::Skip, kind) => Sentence::new(kind, second.span),
            (kind, SentenceKind::Skip) => Sentence::new(kind, first.span),
            (SentenceKind::Seq(a, b), kind) => {
                let rest = Sentence::seq(*b, Sentence::new(kind, second.span));
                Sentence::seq(*a, rest)
            }
            (k1, k2) => {
                let span = first.span.to(second.span);
                Sentence::new(
                    SentenceKind::Seq(
                        Box::new(Sentence::new(k1, first.span)),
                        Box::new(Sentence::new(k2, second.span)),
                    ),
                    span,
                )
            }
        }
    }

    pub fn seq_all(items: impl IntoIterator<Item = Sentence>) -> Sentence {
        let items: Vec<Sentence> = items.into_iter().collect();
        items
            .into_iter()
            .rev()
            .fold(Sentence::skip(), |acc, s| Sentence::seq(s, acc))
    }

    /// Statements of a right-nested sequence, in execution order.
    pub fn flatten(&self) -> Vec<&Sentence> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match &cur.kind {
                SentenceKind::Seq(a, b) => {
                    out.extend(a.flatten());
                    cur = b;
                }
                SentenceKind::Skip if !out.is_empty() => break,
                _ => {
                    out.push(cur);
                    break;
                }
            }
        }
        out
    }

    /// True if a `for` or `map` node occurs anywhere inside.
    pub fn has_sugar(&self) -> bool {
        match &self.kind {
            SentenceKind::For { .. } | SentenceKind::Map { .. } => true,
            SentenceKind::If {
                then_branch,
                else_branch,
                ..
            } => then_branch.has_sugar() || else_branch.has_sugar(),
            SentenceKind::While { body, .. } => body.has_sugar(),
            SentenceKind::Seq(a, b) => a.has_sugar() || b.has_sugar(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Procedure {
    pub name: String,
    pub params: Vec<String>,
    pub pre: Vec<Clause>,
    pub post: Vec<Clause>,
    pub body: Sentence,
    pub span: Span,
}

impl Procedure {
    pub fn pre_conj(&self) -> Expr {
        conj_clauses(&self.pre)
    }

    pub fn post_conj(&self) -> Expr {
        conj_clauses(&self.post)
    }

    /// `p1 = p1@pre && ... && pk = pk@pre`
    pub fn frozen_params(&self) -> Expr {
        Expr::and_all(
            self.params
                .iter()
                .map(|p| Expr::eq(Expr::var(p), Expr::var_at_pre(p))),
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub procedures: Vec<Procedure>,
}

impl Program {
    pub fn procedure(&self, name: &str) -> Option<&Procedure> {
        self.procedures.iter().find(|p| p.name == name)
    }

    pub fn procedure_mut(&mut self, name: &str) -> Option<&mut Procedure> {
        self.procedures.iter_mut().find(|p| p.name == name)
    }

    pub fn has_sugar(&self) -> bool {
        self.procedures.iter().any(|p| p.body.has_sugar())
    }
}
