//! Bounded-enumeration decision procedure for entailments.
//!
//! Searches for a state in which every hypothesis conjunct is true and the
//! goal is not. Unknowns (free variables, array cells, existential witnesses)
//! are assigned lazily: evaluation reports which unknown it needs and the
//! search branches over that unknown's finite domain only then. Conjuncts of
//! the form `x = e` with `x` unassigned bind `x` directly, which is exact.
//!
//! Since a conjunction is true exactly when each conjunct is true, the order
//! in which conjuncts are discharged does not matter; undefinedness only
//! matters inside a conjunct.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::interp::{Bounds, State, Value};
use crate::logic::{all_names, fresh_var, free_vars, subst_vars};
use crate::syntax::{BinOp, Expr, ExprKind, QuantKind, UnOp};
use crate::types::{Ty, TypeEnv};

use super::Verdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cell {
    Known(i64),
    Slot(usize),
}

#[derive(Clone, Debug)]
enum V {
    Int(i64),
    Bool(bool),
    Arr(Rc<Vec<Cell>>),
}

enum R {
    V(V),
    Undef,
    Need(usize),
    Abort(&'static str),
}

#[derive(Debug)]
enum Node {
    Int(i64),
    Bool(bool),
    Unk(usize),
    Local(usize),
    Access(Box<Node>, Box<Node>),
    Size(Box<Node>),
    Update(Box<Node>, Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Not(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Quant {
        exists: bool,
        lo: Box<Node>,
        hi: Box<Node>,
        body: Box<Node>,
    },
    /// Unbounded existential, flattened: binder types and body conjuncts.
    Exists {
        tys: Vec<Ty>,
        conj: Vec<(Node, bool)>,
    },
}

enum Out {
    Found,
    NotFound,
    NeedOuter(usize),
    Abort(&'static str),
}

#[derive(Clone, Copy)]
enum Loc {
    Val(i64),
    Unk(usize),
}

/// Default number of search steps before giving up.
pub const DEFAULT_BUDGET: u64 = 50_000_000;

struct Search {
    vals: Vec<Option<V>>,
    tys: Vec<Ty>,
    locals: Vec<Loc>,
    trail: Vec<usize>,
    ints: Vec<i64>,
    max_len: usize,
    steps: u64,
    budget: u64,
    enumerated: bool,
    snapshot: Option<Vec<Option<V>>>,
}

macro_rules! val {
    ($e:expr) => {
        match $e {
            R::V(v) => v,
            other => return other,
        }
    };
}

impl Search {
    fn new(bounds: Bounds, budget: u64) -> Self {
        let b = bounds.int as i64;
        let mut ints = vec![0];
        for n in 1..=b {
            ints.push(n);
            ints.push(-n);
        }
        Search {
            vals: Vec::new(),
            tys: Vec::new(),
            locals: Vec::new(),
            trail: Vec::new(),
            ints,
            max_len: bounds.len as usize,
            steps: 0,
            budget,
            enumerated: false,
            snapshot: None,
        }
    }

    fn alloc(&mut self, ty: Ty) -> usize {
        self.vals.push(None);
        self.tys.push(ty);
        self.vals.len() - 1
    }

    fn cell(&self, c: Cell) -> Result<i64, usize> {
        match c {
            Cell::Known(n) => Ok(n),
            Cell::Slot(s) => match &self.vals[s] {
                Some(V::Int(n)) => Ok(*n),
                _ => Err(s),
            },
        }
    }

    fn lookup(&self, id: usize) -> R {
        match &self.vals[id] {
            Some(v) => R::V(v.clone()),
            None => R::Need(id),
        }
    }

    fn int(&mut self, n: &Node) -> Result<i64, R> {
        match self.eval(n) {
            R::V(V::Int(i)) => Ok(i),
            R::V(_) => Err(R::Undef),
            other => Err(other),
        }
    }

    fn arith(op: BinOp, a: i64, b: i64) -> R {
        let r = match op {
            BinOp::Add => a.checked_add(b),
            BinOp::Sub => a.checked_sub(b),
            BinOp::Mul => a.checked_mul(b),
            BinOp::Div => {
                if b == 0 {
                    return R::Undef;
                }
                a.checked_div(b)
            }
            BinOp::Mod => {
                if b == 0 {
                    return R::Undef;
                }
                a.checked_rem(b)
            }
            BinOp::Lt => return R::V(V::Bool(a < b)),
            BinOp::Le => return R::V(V::Bool(a <= b)),
            BinOp::Gt => return R::V(V::Bool(a > b)),
            BinOp::Ge => return R::V(V::Bool(a >= b)),
            _ => unreachable!("not an integer operator"),
        };
        match r {
            Some(n) => R::V(V::Int(n)),
            None => R::Abort("integer overflow"),
        }
    }

    fn values_equal(&self, a: &V, b: &V) -> Result<bool, usize> {
        match (a, b) {
            (V::Int(x), V::Int(y)) => Ok(x == y),
            (V::Bool(x), V::Bool(y)) => Ok(x == y),
            (V::Arr(x), V::Arr(y)) => {
                if x.len() != y.len() {
                    return Ok(false);
                }
                let mut pending = None;
                for (cx, cy) in x.iter().zip(y.iter()) {
                    if cx == cy {
                        continue;
                    }
                    match (self.cell(*cx), self.cell(*cy)) {
                        (Ok(p), Ok(q)) => {
                            if p != q {
                                return Ok(false);
                            }
                        }
                        (Err(s), _) | (_, Err(s)) => {
                            pending.get_or_insert(s);
                        }
                    }
                }
                match pending {
                    Some(s) => Err(s),
                    None => Ok(true),
                }
            }
            _ => Ok(false),
        }
    }

    fn eval(&mut self, n: &Node) -> R {
        match n {
            Node::Int(i) => R::V(V::Int(*i)),
            Node::Bool(b) => R::V(V::Bool(*b)),
            Node::Unk(id) => self.lookup(*id),
            Node::Local(l) => match self.locals[*l] {
                Loc::Val(i) => R::V(V::Int(i)),
                Loc::Unk(id) => self.lookup(id),
            },
            Node::Access(a, i) => {
                let V::Arr(arr) = val!(self.eval(a)) else {
                    return R::Undef;
                };
                let idx = match self.int(i) {
                    Ok(x) => x,
                    Err(r) => return r,
                };
                if idx < 0 || idx as usize >= arr.len() {
                    return R::Undef;
                }
                match self.cell(arr[idx as usize]) {
                    Ok(v) => R::V(V::Int(v)),
                    Err(s) => R::Need(s),
                }
            }
            Node::Size(a) => match val!(self.eval(a)) {
                V::Arr(arr) => R::V(V::Int(arr.len() as i64)),
                _ => R::Undef,
            },
            Node::Update(a, i, v) => {
                let V::Arr(arr) = val!(self.eval(a)) else {
                    return R::Undef;
                };
                let idx = match self.int(i) {
                    Ok(x) => x,
                    Err(r) => return r,
                };
                let new = match self.int(v) {
                    Ok(x) => x,
                    Err(r) => return r,
                };
                if idx < 0 || idx as usize >= arr.len() {
                    return R::Undef;
                }
                let mut cells = (*arr).clone();
                cells[idx as usize] = Cell::Known(new);
                R::V(V::Arr(Rc::new(cells)))
            }
            Node::Neg(x) => match self.int(x) {
                Ok(i) => match i.checked_neg() {
                    Some(v) => R::V(V::Int(v)),
                    None => R::Abort("integer overflow"),
                },
                Err(r) => r,
            },
            Node::Not(x) => match val!(self.eval(x)) {
                V::Bool(b) => R::V(V::Bool(!b)),
                _ => R::Undef,
            },
            Node::Bin(op, l, r) => match op {
                BinOp::And | BinOp::Or | BinOp::Implies => {
                    let V::Bool(a) = val!(self.eval(l)) else {
                        return R::Undef;
                    };
                    let decided = match op {
                        BinOp::And if !a => Some(false),
                        BinOp::Or if a => Some(true),
                        BinOp::Implies if !a => Some(true),
                        _ => None,
                    };
                    if let Some(d) = decided {
                        return R::V(V::Bool(d));
                    }
                    match val!(self.eval(r)) {
                        V::Bool(b) => R::V(V::Bool(b)),
                        _ => R::Undef,
                    }
                }
                BinOp::Eq | BinOp::Ne => {
                    let a = val!(self.eval(l));
                    let b = val!(self.eval(r));
                    match self.values_equal(&a, &b) {
                        Ok(eq) => R::V(V::Bool(eq == (*op == BinOp::Eq))),
                        Err(s) => R::Need(s),
                    }
                }
                _ => {
                    let a = match self.int(l) {
                        Ok(x) => x,
                        Err(r) => return r,
                    };
                    let b = match self.int(r) {
                        Ok(x) => x,
                        Err(r) => return r,
                    };
                    Self::arith(*op, a, b)
                }
            },
            Node::Quant {
                exists,
                lo,
                hi,
                body,
            } => {
                let lo = match self.int(lo) {
                    Ok(x) => x,
                    Err(r) => return r,
                };
                let hi = match self.int(hi) {
                    Ok(x) => x,
                    Err(r) => return r,
                };
                let mut k = lo;
                while k < hi {
                    self.locals.push(Loc::Val(k));
                    let r = self.eval(body);
                    self.locals.pop();
                    match r {
                        R::V(V::Bool(b)) => {
                            if b == *exists {
                                return R::V(V::Bool(b));
                            }
                        }
                        R::V(_) => return R::Undef,
                        other => return other,
                    }
                    k += 1;
                }
                R::V(V::Bool(!*exists))
            }
            Node::Exists { tys, conj } => {
                let base = self.vals.len();
                let depth = self.locals.len();
                for ty in tys {
                    let id = self.alloc(*ty);
                    self.locals.push(Loc::Unk(id));
                }
                let mut sat = vec![false; conj.len()];
                let out = self.search(conj, &mut sat, base, false);
                self.locals.truncate(depth);
                self.vals.truncate(base);
                self.tys.truncate(base);
                match out {
                    Out::Found => R::V(V::Bool(true)),
                    Out::NotFound => R::V(V::Bool(false)),
                    Out::NeedOuter(u) => R::Need(u),
                    Out::Abort(why) => R::Abort(why),
                }
            }
        }
    }

    fn unassigned(&self, n: &Node, base: usize) -> Option<usize> {
        let id = match n {
            Node::Unk(id) => *id,
            Node::Local(l) => match self.locals[*l] {
                Loc::Unk(id) => id,
                Loc::Val(_) => return None,
            },
            _ => return None,
        };
        (id >= base && self.vals[id].is_none()).then_some(id)
    }

    /// `x = e` with `x` an unassigned unknown owned by this search.
    fn definition<'n>(&self, n: &'n Node, base: usize) -> Option<(usize, &'n Node)> {
        let Node::Bin(BinOp::Eq, l, r) = n else {
            return None;
        };
        if let Some(id) = self.unassigned(l, base) {
            return Some((id, r));
        }
        self.unassigned(r, base).map(|id| (id, &**l))
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let id = self.trail.pop().expect("trail entry");
            self.vals[id] = None;
        }
    }

    /// Finds an assignment of the unknowns numbered `base` and above under
    /// which every constraint `(node, want)` holds: `want = true` requires the
    /// node to be true, `want = false` requires it to be not true.
    fn search(&mut self, cons: &[(Node, bool)], sat: &mut [bool], base: usize, top: bool) -> Out {
        let mark = self.trail.len();
        let out = self.search_step(cons, sat, base, top);
        self.undo_to(mark);
        out
    }

    fn search_step(&mut self, cons: &[(Node, bool)], sat: &mut [bool], base: usize, top: bool) -> Out {
        loop {
            self.steps += 1;
            if self.steps > self.budget {
                return Out::Abort("search budget exhausted");
            }
            let mut progress = true;
            while progress {
                progress = false;
                for (i, (node, want)) in cons.iter().enumerate() {
                    if sat[i] || !*want {
                        continue;
                    }
                    let Some((id, rhs)) = self.definition(node, base) else {
                        continue;
                    };
                    match self.eval(rhs) {
                        R::V(v) => {
                            if self.vals[id].is_some() {
                                // bound while evaluating the right-hand side
                                continue;
                            }
                            self.vals[id] = Some(v);
                            self.trail.push(id);
                            sat[i] = true;
                            progress = true;
                        }
                        R::Undef => return Out::NotFound,
                        R::Abort(why) => return Out::Abort(why),
                        R::Need(_) => {}
                    }
                }
            }
            let Some(i) = sat.iter().position(|s| !s) else {
                if top {
                    self.snapshot = Some(self.vals.clone());
                }
                return Out::Found;
            };
            let want = cons[i].1;
            match self.eval(&cons[i].0) {
                R::V(V::Bool(b)) => {
                    if b != want {
                        return Out::NotFound;
                    }
                    sat[i] = true;
                }
                R::V(_) | R::Undef => {
                    if want {
                        return Out::NotFound;
                    }
                    sat[i] = true;
                }
                R::Abort(why) => return Out::Abort(why),
                R::Need(u) => {
                    if u < base {
                        return Out::NeedOuter(u);
                    }
                    return self.branch(u, cons, sat, base, top);
                }
            }
        }
    }

    fn branch(&mut self, u: usize, cons: &[(Node, bool)], sat: &[bool], base: usize, top: bool) -> Out {
        self.enumerated = true;
        let candidates: Vec<V> = match self.tys[u] {
            Ty::Int => self.ints.iter().map(|&i| V::Int(i)).collect(),
            Ty::Bool => vec![V::Bool(false), V::Bool(true)],
            Ty::Arr => Vec::new(),
        };
        if self.tys[u] == Ty::Arr {
            for len in 0..=self.max_len {
                let mark = self.vals.len();
                let cells: Vec<Cell> = (0..len).map(|_| Cell::Slot(self.alloc(Ty::Int))).collect();
                self.vals[u] = Some(V::Arr(Rc::new(cells)));
                let mut sat2 = sat.to_vec();
                let out = self.search(cons, &mut sat2, base, top);
                self.vals[u] = None;
                self.vals.truncate(mark);
                self.tys.truncate(mark);
                if !matches!(out, Out::NotFound) {
                    return out;
                }
            }
            return Out::NotFound;
        }
        for v in candidates {
            self.vals[u] = Some(v);
            let mut sat2 = sat.to_vec();
            let out = self.search(cons, &mut sat2, base, top);
            self.vals[u] = None;
            if !matches!(out, Out::NotFound) {
                return out;
            }
        }
        Out::NotFound
    }
}

/// Compiles expressions against a fixed numbering of free variables.
struct Compiler<'a> {
    free: &'a BTreeMap<String, usize>,
    scope: Vec<(String, usize)>,
    depth: usize,
}

impl Compiler<'_> {
    fn var(&self, key: &str, local_ok: bool) -> Result<Node, String> {
        if local_ok {
            if let Some((_, l)) = self.scope.iter().rev().find(|(n, _)| n == key) {
                return Ok(Node::Local(*l));
            }
        }
        self.free
            .get(key)
            .map(|id| Node::Unk(*id))
            .ok_or_else(|| format!("variable `{key}` has no type"))
    }

    fn compile(&mut self, e: &Expr) -> Result<Node, String> {
        let b = |n: Node| Box::new(n);
        Ok(match &e.kind {
            ExprKind::Int(n) => Node::Int(
                n.to_i64()
                    .ok_or_else(|| format!("literal {n} is too large"))?,
            ),
            ExprKind::Bool(v) => Node::Bool(*v),
            ExprKind::Var(x) => self.var(x, true)?,
            ExprKind::VarAtPre(x) => self.var(&format!("{x}@pre"), false)?,
            ExprKind::Access(a, i) => Node::Access(b(self.compile(a)?), b(self.compile(i)?)),
            ExprKind::Size(a) => Node::Size(b(self.compile(a)?)),
            ExprKind::Update(a, i, v) => Node::Update(
                b(self.compile(a)?),
                b(self.compile(i)?),
                b(self.compile(v)?),
            ),
            ExprKind::Unary(UnOp::Neg, x) => Node::Neg(b(self.compile(x)?)),
            ExprKind::Unary(UnOp::Not, x) => Node::Not(b(self.compile(x)?)),
            ExprKind::Binary(op, l, r) => Node::Bin(*op, b(self.compile(l)?), b(self.compile(r)?)),
            ExprKind::Quant {
                kind,
                var,
                lo,
                hi,
                body,
            } => {
                let lo = self.compile(lo)?;
                let hi = self.compile(hi)?;
                self.scope.push((var.clone(), self.depth));
                self.depth += 1;
                let body = self.compile(body);
                self.depth -= 1;
                self.scope.pop();
                Node::Quant {
                    exists: *kind == QuantKind::Exists,
                    lo: b(lo),
                    hi: b(hi),
                    body: b(body?),
                }
            }
            ExprKind::Exists { .. } => {
                let mut tys = Vec::new();
                let mut conj = Vec::new();
                let mark = self.scope.len();
                let depth = self.depth;
                let end = depth + group_size(e);
                let r = self.flatten(e, depth, end, &mut tys, &mut conj);
                self.scope.truncate(mark);
                self.depth = depth;
                r?;
                Node::Exists { tys, conj }
            }
        })
    }

    /// Collects the binders and conjuncts of nested existentials into one
    /// group whose binders occupy local slots `base..end`. Each conjunct sees
    /// exactly the binders enclosing it, and its own quantifiers live above
    /// `end`.
    fn flatten(
        &mut self,
        e: &Expr,
        base: usize,
        end: usize,
        tys: &mut Vec<Ty>,
        conj: &mut Vec<(Node, bool)>,
    ) -> Result<(), String> {
        match &e.kind {
            ExprKind::Exists { vars, body } => {
                let mark = self.scope.len();
                for v in vars {
                    self.scope.push((v.name.clone(), base + tys.len()));
                    tys.push(v.ty.unwrap_or(Ty::Int));
                }
                for c in body.conjuncts() {
                    self.flatten(c, base, end, tys, conj)?;
                }
                self.scope.truncate(mark);
                Ok(())
            }
            _ => {
                let saved = self.depth;
                self.depth = end;
                let node = self.compile(e);
                self.depth = saved;
                conj.push((node?, true));
                Ok(())
            }
        }
    }
}

/// Number of binders `flatten` puts into the group of `e`.
fn group_size(e: &Expr) -> usize {
    match &e.kind {
        ExprKind::Exists { vars, body } => vars.len() + body.conjuncts().into_iter().map(group_size).sum::<usize>(),
        _ => 0,
    }
}

/// Hypothesis conjuncts with top-level existentials opened into fresh free
/// variables, whose types are added to `env`.
fn open_hypothesis(h: &Expr, avoid: &mut BTreeSet<String>, env: &mut TypeEnv) -> Vec<Expr> {
    let mut out = Vec::new();
    for c in h.conjuncts() {
        match &c.kind {
            ExprKind::Exists { vars, body } => {
                let mut ren = BTreeMap::new();
                for v in vars {
                    let fresh = fresh_var(&v.name, avoid);
                    avoid.insert(fresh.clone());
                    env.insert(fresh.clone(), v.ty.unwrap_or(Ty::Int));
                    ren.insert(v.name.clone(), Expr::var(fresh));
                }
                let body = subst_vars(body, &ren);
                out.extend(open_hypothesis(&body, avoid, env));
            }
            _ => out.push(c.clone()),
        }
    }
    out
}

struct Prepared {
    free: BTreeMap<String, usize>,
    tys: Vec<Ty>,
    cons: Vec<(Node, bool)>,
}

fn prepare(h: &Expr, g: &Expr, env: &TypeEnv) -> Result<Prepared, String> {
    let mut avoid = all_names(h);
    avoid.extend(all_names(g));
    let mut env = env.clone();
    let hyps = open_hypothesis(h, &mut avoid, &mut env);
    let mut names = BTreeSet::new();
    for c in &hyps {
        names.extend(free_vars(c));
    }
    names.extend(free_vars(g));
    let mut free = BTreeMap::new();
    let mut tys = Vec::new();
    for n in names {
        let ty = env
            .get(&n)
            .ok_or_else(|| format!("variable `{n}` has no type"))?;
        free.insert(n, tys.len());
        tys.push(ty);
    }
    let mut cons = Vec::new();
    {
        let mut c = Compiler {
            free: &free,
            scope: Vec::new(),
            depth: 0,
        };
        for hyp in &hyps {
            cons.push((c.compile(hyp)?, true));
        }
        cons.push((c.compile(g)?, false));
    }
    Ok(Prepared { free, tys, cons })
}

fn to_value(v: &Option<V>, ty: Ty, vals: &[Option<V>]) -> Value {
    let cell = |c: &Cell| match c {
        Cell::Known(n) => BigInt::from(*n),
        Cell::Slot(s) => match &vals[*s] {
            Some(V::Int(n)) => BigInt::from(*n),
            _ => BigInt::from(0),
        },
    };
    match (v, ty) {
        (Some(V::Int(n)), _) => Value::Int(BigInt::from(*n)),
        (Some(V::Bool(b)), _) => Value::Bool(*b),
        (Some(V::Arr(cells)), _) => Value::Arr(cells.iter().map(cell).collect()),
        (None, Ty::Int) => Value::int(0),
        (None, Ty::Bool) => Value::Bool(false),
        (None, Ty::Arr) => Value::Arr(Vec::new()),
    }
}

/// Decides `h ⊢ g` by bounded search.
pub fn check(h: &Expr, g: &Expr, env: &TypeEnv, bounds: Bounds, budget: u64) -> Verdict {
    let prep = match prepare(h, g, env) {
        Ok(p) => p,
        Err(why) => return Verdict::Unknown { reason: why },
    };
    let mut s = Search::new(bounds, budget);
    for ty in &prep.tys {
        s.alloc(*ty);
    }
    let mut sat = vec![false; prep.cons.len()];
    match s.search(&prep.cons, &mut sat, 0, true) {
        Out::Found => {
            let snap = s.snapshot.take().expect("snapshot of counterexample");
            let state: State = prep
                .free
                .iter()
                .map(|(name, id)| (name.clone(), to_value(&snap[*id], prep.tys[*id], &snap)))
                .collect();
            Verdict::Invalid {
                counterexample: state,
            }
        }
        Out::NotFound if s.enumerated => Verdict::BoundedValid {
            int_bound: bounds.int,
            len_bound: bounds.len,
        },
        Out::NotFound => Verdict::Valid,
        Out::NeedOuter(_) => unreachable!("top-level search owns every unknown"),
        Out::Abort(why) => Verdict::Unknown {
            reason: why.to_string(),
        },
    }
}

/// Evaluates `h` and `g` in a fully given state, interpreting them exactly
/// as [`check`] does (top-level existentials of `h` opened under the same
/// names). Returns whether each is true, or `None` if the state lacks a
/// variable.
pub fn replay(h: &Expr, g: &Expr, env: &TypeEnv, state: &State, bounds: Bounds) -> Option<(bool, bool)> {
    let prep = prepare(h, g, env).ok()?;
    let mut s = Search::new(bounds, DEFAULT_BUDGET);
    for (name, id) in &prep.free {
        let v = state.get(name)?;
        s.alloc(prep.tys[*id]);
        s.vals[*id] = Some(match v {
            Value::Int(n) => V::Int(n.to_i64()?),
            Value::Bool(b) => V::Bool(*b),
            Value::Arr(a) => V::Arr(Rc::new(
                a.iter()
                    .map(|n| n.to_i64().map(Cell::Known))
                    .collect::<Option<Vec<_>>>()?,
            )),
        });
    }
    let mut truth = |n: &Node| -> Option<bool> {
        match s.eval(n) {
            R::V(V::Bool(b)) => Some(b),
            R::V(_) | R::Undef => Some(false),
            _ => None,
        }
    };
    let (goal, hyps) = prep.cons.split_last().expect("goal constraint");
    let mut h_true = true;
    for (n, _) in hyps {
        if !truth(n)? {
            h_true = false;
        }
    }
    let g_true = truth(&goal.0)?;
    Some((h_true, g_true))
}
