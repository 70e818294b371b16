//! Big-step interpreter with runtime annotation checking.
//!
//! In checked mode every precondition, postcondition, invariant and variant
//! is evaluated and execution gets stuck when one of them fails. Erased mode
//! skips annotations but still traps undefined expressions in code.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::logic::local_vars;
use crate::syntax::{
    pre_key, BinOp, Clause, Expr, ExprKind, Procedure, Program, QuantKind, Sentence, SentenceKind,
    Span, UnOp,
};
use crate::types::{Ty, TypeEnv};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    Arr(Vec<BigInt>),
}

impl Value {
    pub fn int(n: i64) -> Self {
        Value::Int(BigInt::from(n))
    }

    pub fn arr(xs: &[i64]) -> Self {
        Value::Arr(xs.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_arr(&self) -> Option<&[BigInt]> {
        match self {
            Value::Arr(a) => Some(a),
            _ => None,
        }
    }

    pub fn ty(&self) -> Ty {
        match self {
            Value::Int(_) => Ty::Int,
            Value::Bool(_) => Ty::Bool,
            Value::Arr(_) => Ty::Arr,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        fn num(n: &BigInt) -> serde_json::Value {
            match n.to_i64() {
                Some(v) => serde_json::Value::from(v),
                None => serde_json::Value::String(n.to_string()),
            }
        }
        match self {
            Value::Int(n) => num(n),
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Arr(a) => serde_json::Value::Array(a.iter().map(num).collect()),
        }
    }

    /// Reads a value of type `ty` from JSON: numbers (or decimal strings for
    /// large integers), booleans, and arrays of integers.
    pub fn from_json(v: &serde_json::Value, ty: Ty) -> Result<Value, String> {
        fn num(v: &serde_json::Value) -> Result<BigInt, String> {
            match v {
                serde_json::Value::Number(n) => n
                    .as_i64()
                    .map(BigInt::from)
                    .ok_or_else(|| format!("{n} is not an integer")),
                serde_json::Value::String(s) => {
                    s.parse().map_err(|_| format!("`{s}` is not an integer"))
                }
                other => Err(format!("expected an integer, found {other}")),
            }
        }
        match ty {
            Ty::Int => num(v).map(Value::Int),
            Ty::Bool => v
                .as_bool()
                .map(Value::Bool)
                .ok_or_else(|| format!("expected a boolean, found {v}")),
            Ty::Arr => match v {
                serde_json::Value::Array(items) => {
                    items.iter().map(num).collect::<Result<_, _>>().map(Value::Arr)
                }
                other => Err(format!("expected an array of integers, found {other}")),
            },
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Arr(a) => {
                f.write_str("[")?;
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

/// Variable keys (`x`, `x@pre`) to values.
pub type State = BTreeMap<String, Value>;

pub fn state_to_json(st: &State) -> serde_json::Value {
    serde_json::Value::Object(st.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
}

/// Finite domain used to enumerate witnesses of unbounded existentials:
/// integers in `[-int, int]`, arrays of length `0..=len` over those integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub int: u32,
    pub len: u32,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { int: 3, len: 3 }
    }
}

impl Bounds {
    /// Integers of the domain in enumeration order: 0, 1, -1, 2, -2, ...
    pub fn ints(&self) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero()];
        for n in 1..=self.int as i64 {
            out.push(BigInt::from(n));
            out.push(BigInt::from(-n));
        }
        out
    }

    pub fn values(&self, ty: Ty) -> Vec<Value> {
        match ty {
            Ty::Int => self.ints().into_iter().map(Value::Int).collect(),
            Ty::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Ty::Arr => {
                let ints = self.ints();
                let mut out = Vec::new();
                for len in 0..=self.len as usize {
                    let mut cur = vec![0usize; len];
                    loop {
                        out.push(Value::Arr(cur.iter().map(|&i| ints[i].clone()).collect()));
                        let mut pos = 0;
                        while pos < len {
                            cur[pos] += 1;
                            if cur[pos] < ints.len() {
                                break;
                            }
                            cur[pos] = 0;
                            pos += 1;
                        }
                        if pos == len {
                            break;
                        }
                    }
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{0}: expression is undefined")]
    Undefined(Span),
    #[error("{0}: unbounded existential cannot be evaluated at runtime")]
    Unbounded(Span),
    #[error("{1}: variable `{0}` has no value")]
    Unbound(String, Span),
}

/// Truncating division and the matching remainder (sign of the dividend).
pub fn div_trunc(a: &BigInt, b: &BigInt) -> Option<BigInt> {
    if b.is_zero() {
        None
    } else {
        Some(a / b)
    }
}

pub fn rem_trunc(a: &BigInt, b: &BigInt) -> Option<BigInt> {
    if b.is_zero() {
        None
    } else {
        Some(a % b)
    }
}

struct Evaluator<'a> {
    state: &'a State,
    locals: Vec<(String, Value)>,
    witnesses: Option<Bounds>,
}

impl Evaluator<'_> {
    fn lookup(&self, key: &str, span: Span) -> Result<Value, EvalError> {
        if let Some((_, v)) = self.locals.iter().rev().find(|(n, _)| n == key) {
            return Ok(v.clone());
        }
        self.state
            .get(key)
            .cloned()
            .ok_or_else(|| EvalError::Unbound(key.to_string(), span))
    }

    fn int(&mut self, e: &Expr) -> Result<BigInt, EvalError> {
        match self.eval(e)? {
            Value::Int(n) => Ok(n),
            _ => Err(EvalError::Undefined(e.span)),
        }
    }

    fn bool(&mut self, e: &Expr) -> Result<bool, EvalError> {
        match self.eval(e)? {
            Value::Bool(b) => Ok(b),
            _ => Err(EvalError::Undefined(e.span)),
        }
    }

    fn arr(&mut self, e: &Expr) -> Result<Vec<BigInt>, EvalError> {
        match self.eval(e)? {
            Value::Arr(a) => Ok(a),
            _ => Err(EvalError::Undefined(e.span)),
        }
    }

    fn index(a: &[BigInt], i: &BigInt, span: Span) -> Result<usize, EvalError> {
        match i.to_usize() {
            Some(k) if k < a.len() => Ok(k),
            _ => Err(EvalError::Undefined(span)),
        }
    }

    fn eval(&mut self, e: &Expr) -> Result<Value, EvalError> {
        let sp = e.span;
        Ok(match &e.kind {
            ExprKind::Int(n) => Value::Int(n.clone()),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Var(x) => self.lookup(x, sp)?,
            ExprKind::VarAtPre(x) => self.lookup(&pre_key(x), sp)?,
            ExprKind::Access(a, i) => {
                let arr = self.arr(a)?;
                let idx = self.int(i)?;
                let k = Self::index(&arr, &idx, sp)?;
                Value::Int(arr[k].clone())
            }
            ExprKind::Size(a) => Value::Int(BigInt::from(self.arr(a)?.len())),
            ExprKind::Update(a, i, v) => {
                let mut arr = self.arr(a)?;
                let idx = self.int(i)?;
                let val = self.int(v)?;
                let k = Self::index(&arr, &idx, sp)?;
                arr[k] = val;
                Value::Arr(arr)
            }
            ExprKind::Unary(UnOp::Neg, x) => Value::Int(-self.int(x)?),
            ExprKind::Unary(UnOp::Not, x) => Value::Bool(!self.bool(x)?),
            ExprKind::Binary(op, l, r) => match op {
                BinOp::And => Value::Bool(self.bool(l)? && self.bool(r)?),
                BinOp::Or => Value::Bool(self.bool(l)? || self.bool(r)?),
                BinOp::Implies => Value::Bool(!self.bool(l)? || self.bool(r)?),
                BinOp::Eq | BinOp::Ne => {
                    let a = self.eval(l)?;
                    let b = self.eval(r)?;
                    Value::Bool((a == b) == (*op == BinOp::Eq))
                }
                _ => {
                    let a = self.int(l)?;
                    let b = self.int(r)?;
                    match op {
                        BinOp::Add => Value::Int(a + b),
                        BinOp::Sub => Value::Int(a - b),
                        BinOp::Mul => Value::Int(a * b),
                        BinOp::Div => Value::Int(div_trunc(&a, &b).ok_or(EvalError::Undefined(sp))?),
                        BinOp::Mod => Value::Int(rem_trunc(&a, &b).ok_or(EvalError::Undefined(sp))?),
                        BinOp::Lt => Value::Bool(a < b),
                        BinOp::Le => Value::Bool(a <= b),
                        BinOp::Gt => Value::Bool(a > b),
                        BinOp::Ge => Value::Bool(a >= b),
                        _ => unreachable!("logical operators handled above"),
                    }
                }
            },
            ExprKind::Quant {
                kind,
                var,
                lo,
                hi,
                body,
            } => {
                let mut k = self.int(lo)?;
                let hi = self.int(hi)?;
                let looking_for = *kind == QuantKind::Exists;
                let mut result = !looking_for;
                while k < hi {
                    self.locals.push((var.clone(), Value::Int(k.clone())));
                    let b = self.bool(body);
                    self.locals.pop();
                    if b? == looking_for {
                        result = looking_for;
                        break;
                    }
                    k += BigInt::one();
                }
                Value::Bool(result)
            }
            ExprKind::Exists { vars, body } => {
                let Some(bounds) = self.witnesses else {
                    return Err(EvalError::Unbounded(sp));
                };
                let domains: Vec<Vec<Value>> = vars
                    .iter()
                    .map(|b| bounds.values(b.ty.unwrap_or(Ty::Int)))
                    .collect();
                Value::Bool(self.search(vars, &domains, 0, body))
            }
        })
    }

    fn search(
        &mut self,
        vars: &[crate::syntax::Binder],
        domains: &[Vec<Value>],
        depth: usize,
        body: &Expr,
    ) -> bool {
        if depth == vars.len() {
            return matches!(self.eval(body), Ok(Value::Bool(true)));
        }
        for v in &domains[depth] {
            self.locals.push((vars[depth].name.clone(), v.clone()));
            let found = self.search(vars, domains, depth + 1, body);
            self.locals.pop();
            if found {
                return true;
            }
        }
        false
    }
}

/// Value of `e` in `state`. Unbounded existentials are rejected.
pub fn eval_expr(state: &State, e: &Expr) -> Result<Value, EvalError> {
    Evaluator {
        state,
        locals: Vec::new(),
        witnesses: None,
    }
    .eval(e)
}

/// Like [`eval_expr`], drawing witnesses of unbounded existentials from
/// `bounds`. An existential is true when some witness makes its body true.
pub fn eval_bounded(state: &State, e: &Expr, bounds: Bounds) -> Result<Value, EvalError> {
    Evaluator {
        state,
        locals: Vec::new(),
        witnesses: Some(bounds),
    }
    .eval(e)
}

/// Whether `e` is true in `state`; undefined counts as not true.
pub fn holds(state: &State, e: &Expr) -> bool {
    matches!(eval_expr(state, e), Ok(Value::Bool(true)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StuckKind {
    PreconditionFailed,
    PostconditionFailed,
    InvariantFailed,
    VariantNotPositive,
    VariantNotDecreased,
    UndefinedExpression,
    FuelExhausted,
}

impl fmt::Display for StuckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StuckKind::PreconditionFailed => "precondition failed",
            StuckKind::PostconditionFailed => "postcondition failed",
            StuckKind::InvariantFailed => "invariant failed",
            StuckKind::VariantNotPositive => "variant not positive",
            StuckKind::VariantNotDecreased => "variant did not decrease",
            StuckKind::UndefinedExpression => "undefined expression",
            StuckKind::FuelExhausted => "iteration budget exhausted",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Error)]
#[error("{span}: {kind} in `{procedure}`")]
pub struct Stuck {
    pub kind: StuckKind,
    pub span: Span,
    pub procedure: String,
    pub state: State,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Checked,
    Erased,
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub mode: Mode,
    /// Maximum number of loop iterations over the whole run.
    pub fuel: u64,
    /// Execute `for`/`map` directly instead of rejecting them.
    pub allow_sugar: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            mode: Mode::Checked,
            fuel: 1_000_000,
            allow_sugar: false,
        }
    }
}

struct Machine<'a> {
    prog: &'a Program,
    opts: RunOptions,
    fuel: u64,
    procedure: String,
}

impl Machine<'_> {
    fn stuck(&self, kind: StuckKind, span: Span, st: &State) -> Stuck {
        Stuck {
            kind,
            span,
            procedure: self.procedure.clone(),
            state: st.clone(),
        }
    }

    fn value(&self, e: &Expr, st: &State) -> Result<Value, Stuck> {
        eval_expr(st, e).map_err(|err| {
            let span = match err {
                EvalError::Undefined(s) | EvalError::Unbounded(s) | EvalError::Unbound(_, s) => s,
            };
            self.stuck(StuckKind::UndefinedExpression, span, st)
        })
    }

    fn truth(&self, e: &Expr, st: &State) -> Result<bool, Stuck> {
        match self.value(e, st)? {
            Value::Bool(b) => Ok(b),
            _ => Err(self.stuck(StuckKind::UndefinedExpression, e.span, st)),
        }
    }

    fn integer(&self, e: &Expr, st: &State) -> Result<BigInt, Stuck> {
        match self.value(e, st)? {
            Value::Int(n) => Ok(n),
            _ => Err(self.stuck(StuckKind::UndefinedExpression, e.span, st)),
        }
    }

    fn check_clauses(&self, clauses: &[Clause], st: &State, kind: StuckKind) -> Result<(), Stuck> {
        if self.opts.mode == Mode::Erased {
            return Ok(());
        }
        for c in clauses {
            // predicates with unbounded existentials are not executable
            if c.expr.has_unbounded_exists() {
                continue;
            }
            if !self.truth(&c.expr, st)? {
                return Err(self.stuck(kind, c.expr.span, st));
            }
        }
        Ok(())
    }

    fn tick(&mut self, span: Span, st: &State) -> Result<(), Stuck> {
        if self.fuel == 0 {
            return Err(self.stuck(StuckKind::FuelExhausted, span, st));
        }
        self.fuel -= 1;
        Ok(())
    }

    fn exec(&mut self, s: &Sentence, st: &mut State) -> Result<(), Stuck> {
        match &s.kind {
            SentenceKind::Skip => Ok(()),
            SentenceKind::Assign { target: x, value: e } | SentenceKind::Local { name: x, init: e } => {
                let v = self.value(e, st)?;
                st.insert(x.clone(), v);
                Ok(())
            }
            SentenceKind::If {
                guard,
                then_branch,
                else_branch,
            } => {
                let branch = if self.truth(guard, st)? {
                    then_branch
                } else {
                    else_branch
                };
                self.exec(branch, st)?;
                for x in local_vars(branch) {
                    st.remove(&x);
                }
                Ok(())
            }
            SentenceKind::While {
                guard,
                invariants,
                variant,
                body,
            } => {
                let checked = self.opts.mode == Mode::Checked;
                loop {
                    self.check_clauses(invariants, st, StuckKind::InvariantFailed)?;
                    if !self.truth(guard, st)? {
                        return Ok(());
                    }
                    let before = if checked {
                        let v = self.integer(variant, st)?;
                        if !v.is_positive() {
                            return Err(self.stuck(StuckKind::VariantNotPositive, variant.span, st));
                        }
                        Some(v)
                    } else {
                        None
                    };
                    self.tick(s.span, st)?;
                    self.exec(body, st)?;
                    for x in local_vars(body) {
                        st.remove(&x);
                    }
                    if let Some(before) = before {
                        let after = self.integer(variant, st)?;
                        if after >= before {
                            return Err(self.stuck(StuckKind::VariantNotDecreased, variant.span, st));
                        }
                    }
                }
            }
            SentenceKind::Call { callee, args } => {
                let proc = self
                    .prog
                    .procedure(callee)
                    .unwrap_or_else(|| panic!("call to unknown procedure `{callee}`"));
                let mut inner = State::new();
                for (formal, actual) in proc.params.iter().zip(args) {
                    let v = st
                        .get(actual)
                        .cloned()
                        .ok_or_else(|| self.stuck(StuckKind::UndefinedExpression, s.span, st))?;
                    inner.insert(pre_key(formal), v.clone());
                    inner.insert(formal.clone(), v);
                }
                let outer = std::mem::replace(&mut self.procedure, proc.name.clone());
                let result = self.run_body(proc, &mut inner);
                self.procedure = outer;
                result?;
                for (formal, actual) in proc.params.iter().zip(args) {
                    st.insert(actual.clone(), inner[formal].clone());
                }
                Ok(())
            }
            SentenceKind::For {
                index,
                lo,
                hi,
                body,
            } if self.opts.allow_sugar => {
                let lo = self.value(lo, st)?;
                st.insert(index.clone(), lo);
                loop {
                    let i = self.integer(&Expr::var(index), st)?;
                    if i >= self.integer(hi, st)? {
                        return Ok(());
                    }
                    self.tick(s.span, st)?;
                    self.exec(body, st)?;
                    for x in local_vars(body) {
                        st.remove(&x);
                    }
                    st.insert(index.clone(), Value::Int(i + 1));
                }
            }
            SentenceKind::Map { body, array, index } if self.opts.allow_sugar => {
                st.insert(index.clone(), Value::int(0));
                loop {
                    let i = self.integer(&Expr::var(index), st)?;
                    let len = self.integer(&Expr::size(Expr::var(array)), st)?;
                    if i >= len {
                        return Ok(());
                    }
                    self.tick(s.span, st)?;
                    self.exec(body, st)?;
                    for x in local_vars(body) {
                        st.remove(&x);
                    }
                    st.insert(index.clone(), Value::Int(i + 1));
                }
            }
            SentenceKind::For { .. } | SentenceKind::Map { .. } => {
                panic!("{}: `for`/`map` must be expanded before execution", s.span)
            }
            SentenceKind::Seq(a, b) => {
                self.exec(a, st)?;
                self.exec(b, st)
            }
        }
    }

    fn run_body(&mut self, proc: &Procedure, st: &mut State) -> Result<(), Stuck> {
        self.check_clauses(&proc.pre, st, StuckKind::PreconditionFailed)?;
        self.exec(&proc.body, st)?;
        for x in local_vars(&proc.body) {
            st.remove(&x);
        }
        self.check_clauses(&proc.post, st, StuckKind::PostconditionFailed)
    }
}

/// Runs procedure `name` from the given parameter values and returns the
/// final values of its parameters.
pub fn run_procedure(
    prog: &Program,
    name: &str,
    args: &BTreeMap<String, Value>,
    opts: RunOptions,
) -> Result<State, Stuck> {
    let proc = prog
        .procedure(name)
        .unwrap_or_else(|| panic!("no procedure `{name}`"));
    let mut st = State::new();
    for p in &proc.params {
        let v = args
            .get(p)
            .unwrap_or_else(|| panic!("missing argument `{p}`"))
            .clone();
        st.insert(pre_key(p), v.clone());
        st.insert(p.clone(), v);
    }
    let mut m = Machine {
        prog,
        opts,
        fuel: opts.fuel,
        procedure: name.to_string(),
    };
    m.run_body(proc, &mut st)?;
    Ok(proc
        .params
        .iter()
        .map(|p| (p.clone(), st[p].clone()))
        .collect())
}

/// Executes a single sentence from `state` in the context of `prog`.
pub fn exec_sentence(
    prog: &Program,
    s: &Sentence,
    state: &mut State,
    opts: RunOptions,
) -> Result<(), Stuck> {
    let mut m = Machine {
        prog,
        opts,
        fuel: opts.fuel,
        procedure: String::new(),
    };
    m.exec(s, state)
}

/// Parses a JSON object of initial parameter values for `proc`.
pub fn args_from_json(
    proc: &Procedure,
    env: &TypeEnv,
    json: &serde_json::Value,
) -> Result<BTreeMap<String, Value>, String> {
    let obj = json
        .as_object()
        .ok_or_else(|| "arguments must be a JSON object".to_string())?;
    for k in obj.keys() {
        if !proc.params.contains(k) {
            return Err(format!("`{}` has no parameter `{k}`", proc.name));
        }
    }
    let mut out = BTreeMap::new();
    for p in &proc.params {
        let v = obj
            .get(p)
            .ok_or_else(|| format!("missing value for parameter `{p}`"))?;
        let ty = env.get(p).expect("parameter typed");
        out.insert(
            p.clone(),
            Value::from_json(v, ty).map_err(|e| format!("parameter `{p}`: {e}"))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_expr, parse_program};

    fn st(pairs: &[(&str, Value)]) -> State {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn evaluates_comparisons_and_quantifiers() {
        let s = st(&[("a", Value::int(3)), ("b", Value::int(7))]);
        assert_eq!(eval_expr(&s, &parse_expr("a >= b").unwrap()), Ok(Value::Bool(false)));
        let s = st(&[("A", Value::arr(&[2, 9, 4])), ("m", Value::int(9))]);
        let e = parse_expr("exists-k / 0 <= k < |A| : m = A[k]").unwrap();
        assert_eq!(eval_expr(&s, &e), Ok(Value::Bool(true)));
    }

    #[test]
    fn out_of_range_access_is_undefined() {
        let s = st(&[("a", Value::arr(&[1])), ("i", Value::int(1)), ("y", Value::int(2))]);
        assert!(matches!(
            eval_expr(&s, &parse_expr("a[i] / y").unwrap()),
            Err(EvalError::Undefined(_))
        ));
    }

    #[test]
    fn division_truncates_toward_zero() {
        let s = State::new();
        let v = |src: &str| eval_expr(&s, &parse_expr(src).unwrap()).unwrap();
        assert_eq!(v("-7 / 2"), Value::int(-3));
        assert_eq!(v("-7 % 2"), Value::int(-1));
        assert_eq!(v("7 % -2"), Value::int(1));
        assert!(eval_expr(&s, &parse_expr("1 / 0").unwrap()).is_err());
    }

    #[test]
    fn short_circuit_protects_right_operand() {
        let s = st(&[("A", Value::arr(&[])), ("i", Value::int(0))]);
        let e = parse_expr("i < |A| && A[i] > 0").unwrap();
        assert_eq!(eval_expr(&s, &e), Ok(Value::Bool(false)));
    }

    #[test]
    fn update_leaves_original() {
        let s = st(&[("A", Value::arr(&[1, 2]))]);
        let e = parse_expr("update A on 0 with 5").unwrap();
        assert_eq!(eval_expr(&s, &e), Ok(Value::arr(&[5, 2])));
        assert_eq!(s["A"], Value::arr(&[1, 2]));
    }

    const SWAP: &str = "swap(x, y) :! x = y@pre && y = x@pre { local t <- x  x <- y  y <- t }
        caller(a, b) :! a = b@pre { call swap(a, b) }";

    #[test]
    fn copy_in_copy_out() {
        let prog = parse_program(SWAP).unwrap();
        let out = run_procedure(
            &prog,
            "caller",
            &BTreeMap::from([("a".into(), Value::int(1)), ("b".into(), Value::int(2))]),
            RunOptions::default(),
        )
        .unwrap();
        assert_eq!(out["a"], Value::int(2));
        assert_eq!(out["b"], Value::int(1));
    }

    #[test]
    fn variant_must_decrease() {
        let prog = parse_program("p(x) { while true :?! true :# 1 do skip od }").unwrap();
        let err = run_procedure(
            &prog,
            "p",
            &BTreeMap::from([("x".into(), Value::int(0))]),
            RunOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err.kind, StuckKind::VariantNotDecreased);
        let err = run_procedure(
            &prog,
            "p",
            &BTreeMap::from([("x".into(), Value::int(0))]),
            RunOptions {
                mode: Mode::Erased,
                fuel: 50,
                allow_sugar: false,
            },
        )
        .unwrap_err();
        assert_eq!(err.kind, StuckKind::FuelExhausted);
    }

    #[test]
    fn bounded_witness_search() {
        let mut e = parse_expr("exists v (v + v = x)").unwrap();
        let env: TypeEnv = [("x".to_string(), Ty::Int)].into_iter().collect();
        crate::types::type_expr(&mut e, &env).unwrap();
        let s = st(&[("x", Value::int(4))]);
        assert_eq!(eval_bounded(&s, &e, Bounds::default()), Ok(Value::Bool(true)));
        let s = st(&[("x", Value::int(3))]);
        assert_eq!(eval_bounded(&s, &e, Bounds::default()), Ok(Value::Bool(false)));
        assert!(eval_expr(&s, &e).is_err());
    }

    #[test]
    fn domain_sizes() {
        let b = Bounds { int: 1, len: 2 };
        assert_eq!(b.values(Ty::Int).len(), 3);
        assert_eq!(b.values(Ty::Arr).len(), 1 + 3 + 9);
    }
}
