//! Monomorphic type inference from use.
//!
//! Every variable gets a type variable; constraints from literals, operators,
//! array syntax, guard and annotation positions and call sites are solved by
//! union-find over the three ground types. A variable left unconstrained is
//! an error rather than being defaulted.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{split_key, Expr, ExprKind, Procedure, Program, Sentence, SentenceKind, Span, UnOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ty {
    Int,
    Bool,
    Arr,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ty::Int => "int",
            Ty::Bool => "bool",
            Ty::Arr => "int[]",
        })
    }
}

/// Types of the variables of one procedure. `x@pre` is looked up as `x`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeEnv {
    vars: BTreeMap<String, Ty>,
}

impl TypeEnv {
    pub fn new() -> Self {
        TypeEnv::default()
    }

    pub fn get(&self, key: &str) -> Option<Ty> {
        self.vars.get(split_key(key).0).copied()
    }

    pub fn insert(&mut self, name: impl Into<String>, ty: Ty) {
        self.vars.insert(name.into(), ty);
    }

    pub fn contains(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Ty)> {
        self.vars.iter()
    }

    pub fn extend(&mut self, other: &TypeEnv) {
        for (k, t) in &other.vars {
            self.vars.insert(k.clone(), *t);
        }
    }
}

impl FromIterator<(String, Ty)> for TypeEnv {
    fn from_iter<I: IntoIterator<Item = (String, Ty)>>(iter: I) -> Self {
        TypeEnv {
            vars: iter.into_iter().collect(),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum TypeError {
    #[error("{span}: type of `{name}` cannot be determined from its uses")]
    Ambiguous { name: String, span: Span },
    #[error("{span}: expected {expected} (required at {expected_at}), found {found}")]
    Conflict {
        expected: Ty,
        expected_at: Span,
        found: Ty,
        span: Span,
    },
    #[error("{span}: undeclared variable `{name}`")]
    Undeclared { name: String, span: Span },
    #[error("{span}: local `{name}` shadows a variable already in scope")]
    Shadowing { name: String, span: Span },
    #[error("{span}: `{name}@pre` refers to `{name}`, which is not a parameter")]
    AtPreNotParam { name: String, span: Span },
    #[error("{span}: `{callee}` takes {expected} arguments, {found} given")]
    Arity {
        callee: String,
        expected: usize,
        found: usize,
        span: Span,
    },
}

impl TypeError {
    pub fn span(&self) -> Span {
        match self {
            TypeError::Ambiguous { span, .. }
            | TypeError::Conflict { span, .. }
            | TypeError::Undeclared { span, .. }
            | TypeError::Shadowing { span, .. }
            | TypeError::AtPreNotParam { span, .. }
            | TypeError::Arity { span, .. } => *span,
        }
    }
}

/// A program whose unbounded-existential binders carry their types, with the
/// variable types of each procedure.
#[derive(Clone, Debug)]
pub struct TypedProgram {
    pub program: Program,
    pub envs: BTreeMap<String, TypeEnv>,
}

impl TypedProgram {
    pub fn env(&self, proc: &str) -> &TypeEnv {
        &self.envs[proc]
    }
}

type TyVar = usize;

#[derive(Default)]
struct Unifier {
    parent: Vec<TyVar>,
    ground: Vec<Option<(Ty, Span)>>,
}

impl Unifier {
    fn fresh(&mut self) -> TyVar {
        self.parent.push(self.parent.len());
        self.ground.push(None);
        self.parent.len() - 1
    }

    fn known(&mut self, ty: Ty, span: Span) -> TyVar {
        let v = self.fresh();
        self.ground[v] = Some((ty, span));
        v
    }

    fn find(&mut self, v: TyVar) -> TyVar {
        let mut root = v;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = v;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn resolve(&mut self, v: TyVar) -> Option<Ty> {
        let r = self.find(v);
        self.ground[r].map(|(t, _)| t)
    }

    fn unify(&mut self, a: TyVar, b: TyVar, span: Span) -> Result<(), TypeError> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Ok(());
        }
        match (self.ground[ra], self.ground[rb]) {
            (Some((ta, sa)), Some((tb, _))) if ta != tb => Err(TypeError::Conflict {
                expected: ta,
                expected_at: sa,
                found: tb,
                span,
            }),
            (None, g) => {
                self.parent[ra] = rb;
                self.ground[rb] = g;
                Ok(())
            }
            (g, _) => {
                self.parent[rb] = ra;
                self.ground[ra] = g;
                Ok(())
            }
        }
    }

    fn expect(&mut self, v: TyVar, ty: Ty, span: Span) -> Result<(), TypeError> {
        let r = self.find(v);
        match self.ground[r] {
            Some((t, at)) if t != ty => Err(TypeError::Conflict {
                expected: t,
                expected_at: at,
                found: ty,
                span,
            }),
            Some(_) => Ok(()),
            None => {
                self.ground[r] = Some((ty, span));
                Ok(())
            }
        }
    }
}

struct Checker<'a> {
    uf: Unifier,
    /// Variables in scope, innermost last.
    scope: Vec<(String, TyVar)>,
    params: Vec<String>,
    /// Every declared variable of the procedure with its declaration site.
    declared: BTreeMap<String, (TyVar, Span)>,
    /// Binder type variables in pre-order, used to annotate the tree afterwards.
    binders: Vec<TyVar>,
    signatures: &'a BTreeMap<String, Vec<Ty>>,
}

impl<'a> Checker<'a> {
    fn new(signatures: &'a BTreeMap<String, Vec<Ty>>) -> Self {
        Checker {
            uf: Unifier::default(),
            scope: Vec::new(),
            params: Vec::new(),
            declared: BTreeMap::new(),
            binders: Vec::new(),
            signatures,
        }
    }

    fn lookup(&self, name: &str) -> Option<TyVar> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    fn declare(&mut self, name: &str, span: Span) -> Result<TyVar, TypeError> {
        if self.lookup(name).is_some() {
            return Err(TypeError::Shadowing {
                name: name.to_string(),
                span,
            });
        }
        // one type per name within a procedure, even across disjoint scopes
        let v = match self.declared.get(name) {
            Some((v, _)) => *v,
            None => {
                let v = self.uf.fresh();
                self.declared.insert(name.to_string(), (v, span));
                v
            }
        };
        self.scope.push((name.to_string(), v));
        Ok(v)
    }

    fn expr(&mut self, e: &Expr) -> Result<TyVar, TypeError> {
        let sp = e.span;
        Ok(match &e.kind {
            ExprKind::Int(_) => self.uf.known(Ty::Int, sp),
            ExprKind::Bool(_) => self.uf.known(Ty::Bool, sp),
            ExprKind::Var(x) => self.lookup(x).ok_or_else(|| TypeError::Undeclared {
                name: x.clone(),
                span: sp,
            })?,
            ExprKind::VarAtPre(x) => {
                if !self.params.contains(x) {
                    return Err(TypeError::AtPreNotParam {
                        name: x.clone(),
                        span: sp,
                    });
                }
                self.declared[x].0
            }
            ExprKind::Access(a, i) => {
                let ta = self.expr(a)?;
                self.uf.expect(ta, Ty::Arr, a.span)?;
                let ti = self.expr(i)?;
                self.uf.expect(ti, Ty::Int, i.span)?;
                self.uf.known(Ty::Int, sp)
            }
            ExprKind::Size(a) => {
                let ta = self.expr(a)?;
                self.uf.expect(ta, Ty::Arr, a.span)?;
                self.uf.known(Ty::Int, sp)
            }
            ExprKind::Update(a, i, v) => {
                let ta = self.expr(a)?;
                self.uf.expect(ta, Ty::Arr, a.span)?;
                let ti = self.expr(i)?;
                self.uf.expect(ti, Ty::Int, i.span)?;
                let tv = self.expr(v)?;
                self.uf.expect(tv, Ty::Int, v.span)?;
                self.uf.known(Ty::Arr, sp)
            }
            ExprKind::Unary(op, x) => {
                let ty = match op {
                    UnOp::Neg => Ty::Int,
                    UnOp::Not => Ty::Bool,
                };
                let tx = self.expr(x)?;
                self.uf.expect(tx, ty, x.span)?;
                self.uf.known(ty, sp)
            }
            ExprKind::Binary(op, l, r) => {
                let tl = self.expr(l)?;
                let tr = self.expr(r)?;
                if op.is_arithmetic() {
                    self.uf.expect(tl, Ty::Int, l.span)?;
                    self.uf.expect(tr, Ty::Int, r.span)?;
                    self.uf.known(Ty::Int, sp)
                } else if op.is_logical() {
                    self.uf.expect(tl, Ty::Bool, l.span)?;
                    self.uf.expect(tr, Ty::Bool, r.span)?;
                    self.uf.known(Ty::Bool, sp)
                } else if matches!(op, crate::syntax::BinOp::Eq | crate::syntax::BinOp::Ne) {
                    self.uf.unify(tl, tr, sp)?;
                    self.uf.known(Ty::Bool, sp)
                } else {
                    self.uf.expect(tl, Ty::Int, l.span)?;
                    self.uf.expect(tr, Ty::Int, r.span)?;
                    self.uf.known(Ty::Bool, sp)
                }
            }
            ExprKind::Quant {
                var, lo, hi, body, ..
            } => {
                let tl = self.expr(lo)?;
                self.uf.expect(tl, Ty::Int, lo.span)?;
                let th = self.expr(hi)?;
                self.uf.expect(th, Ty::Int, hi.span)?;
                let tk = self.uf.known(Ty::Int, sp);
                self.scope.push((var.clone(), tk));
                let tb = self.expr(body);
                self.scope.pop();
                let tb = tb?;
                self.uf.expect(tb, Ty::Bool, body.span)?;
                self.uf.known(Ty::Bool, sp)
            }
            ExprKind::Exists { vars, body } => {
                let mark = self.scope.len();
                for b in vars {
                    let v = match b.ty {
                        Some(t) => self.uf.known(t, sp),
                        None => self.uf.fresh(),
                    };
                    self.binders.push(v);
                    self.scope.push((b.name.clone(), v));
                }
                let tb = self.expr(body);
                self.scope.truncate(mark);
                let tb = tb?;
                self.uf.expect(tb, Ty::Bool, body.span)?;
                self.uf.known(Ty::Bool, sp)
            }
        })
    }

    fn bool_expr(&mut self, e: &Expr) -> Result<(), TypeError> {
        let t = self.expr(e)?;
        self.uf.expect(t, Ty::Bool, e.span)
    }

    fn sentence(&mut self, s: &Sentence) -> Result<(), TypeError> {
        match &s.kind {
            SentenceKind::Skip => Ok(()),
            SentenceKind::Assign { target, value } => {
                let tv = self.expr(value)?;
                let tt = self.lookup(target).ok_or_else(|| TypeError::Undeclared {
                    name: target.clone(),
                    span: s.span,
                })?;
                self.uf.unify(tt, tv, s.span)
            }
            SentenceKind::Local { name, init } => {
                let ti = self.expr(init)?;
                let tv = self.declare(name, s.span)?;
                self.uf.unify(tv, ti, s.span)
            }
            SentenceKind::If {
                guard,
                then_branch,
                else_branch,
            } => {
                self.bool_expr(guard)?;
                self.scoped(then_branch)?;
                self.scoped(else_branch)
            }
            SentenceKind::While {
                guard,
                invariants,
                variant,
                body,
            } => {
                self.bool_expr(guard)?;
                for c in invariants {
                    self.bool_expr(&c.expr)?;
                }
                let tv = self.expr(variant)?;
                self.uf.expect(tv, Ty::Int, variant.span)?;
                self.scoped(body)
            }
            SentenceKind::Call { callee, args } => {
                let formals = &self.signatures[callee];
                if formals.len() != args.len() {
                    return Err(TypeError::Arity {
                        callee: callee.clone(),
                        expected: formals.len(),
                        found: args.len(),
                        span: s.span,
                    });
                }
                for (a, ty) in args.iter().zip(formals.clone()) {
                    let ta = self.lookup(a).ok_or_else(|| TypeError::Undeclared {
                        name: a.clone(),
                        span: s.span,
                    })?;
                    self.uf.expect(ta, ty, s.span)?;
                }
                Ok(())
            }
            SentenceKind::For {
                index,
                lo,
                hi,
                body,
            } => {
                let tl = self.expr(lo)?;
                self.uf.expect(tl, Ty::Int, lo.span)?;
                let th = self.expr(hi)?;
                self.uf.expect(th, Ty::Int, hi.span)?;
                let ti = self.declare(index, s.span)?;
                self.uf.expect(ti, Ty::Int, s.span)?;
                self.scoped(body)
            }
            SentenceKind::Map { body, array, index } => {
                let ta = self.lookup(array).ok_or_else(|| TypeError::Undeclared {
                    name: array.clone(),
                    span: s.span,
                })?;
                self.uf.expect(ta, Ty::Arr, s.span)?;
                let ti = self.declare(index, s.span)?;
                self.uf.expect(ti, Ty::Int, s.span)?;
                self.scoped(body)
            }
            SentenceKind::Seq(a, b) => {
                self.sentence(a)?;
                self.sentence(b)
            }
        }
    }

    fn scoped(&mut self, s: &Sentence) -> Result<(), TypeError> {
        let mark = self.scope.len();
        let r = self.sentence(s);
        self.scope.truncate(mark);
        r
    }

    fn procedure(&mut self, p: &Procedure) -> Result<(), TypeError> {
        self.params = p.params.clone();
        for x in &p.params {
            self.declare(x, p.span)?;
        }
        for c in p.pre.iter().chain(&p.post) {
            self.bool_expr(&c.expr)?;
        }
        self.sentence(&p.body)
    }

    fn env(&mut self) -> Result<TypeEnv, TypeError> {
        let mut env = TypeEnv::new();
        let declared: Vec<(String, TyVar, Span)> = self
            .declared
            .iter()
            .map(|(n, (v, s))| (n.clone(), *v, *s))
            .collect();
        for (name, v, span) in declared {
            match self.uf.resolve(v) {
                Some(t) => env.insert(name, t),
                None => return Err(TypeError::Ambiguous { name, span }),
            }
        }
        Ok(env)
    }

    fn binder_types(&mut self) -> Vec<Ty> {
        let vs = self.binders.clone();
        vs.into_iter()
            .map(|v| self.uf.resolve(v).unwrap_or(Ty::Int))
            .collect()
    }
}

fn fill_binders_expr(e: &mut Expr, types: &mut impl Iterator<Item = Ty>) {
    match &mut e.kind {
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) | ExprKind::VarAtPre(_) => {}
        ExprKind::Access(a, i) => {
            fill_binders_expr(a, types);
            fill_binders_expr(i, types);
        }
        ExprKind::Size(a) | ExprKind::Unary(_, a) => fill_binders_expr(a, types),
        ExprKind::Update(a, i, v) => {
            fill_binders_expr(a, types);
            fill_binders_expr(i, types);
            fill_binders_expr(v, types);
        }
        ExprKind::Binary(_, l, r) => {
            fill_binders_expr(l, types);
            fill_binders_expr(r, types);
        }
        ExprKind::Quant { lo, hi, body, .. } => {
            fill_binders_expr(lo, types);
            fill_binders_expr(hi, types);
            fill_binders_expr(body, types);
        }
        ExprKind::Exists { vars, body } => {
            for b in vars.iter_mut() {
                b.ty = types.next();
            }
            fill_binders_expr(body, types);
        }
    }
}

fn fill_binders_sentence(s: &mut Sentence, types: &mut impl Iterator<Item = Ty>) {
    match &mut s.kind {
        SentenceKind::Skip | SentenceKind::Call { .. } => {}
        SentenceKind::Assign { value, .. } => fill_binders_expr(value, types),
        SentenceKind::Local { init, .. } => fill_binders_expr(init, types),
        SentenceKind::If {
            guard,
            then_branch,
            else_branch,
        } => {
            fill_binders_expr(guard, types);
            fill_binders_sentence(then_branch, types);
            fill_binders_sentence(else_branch, types);
        }
        SentenceKind::While {
            guard,
            invariants,
            variant,
            body,
        } => {
            fill_binders_expr(guard, types);
            for c in invariants.iter_mut() {
                fill_binders_expr(&mut c.expr, types);
            }
            fill_binders_expr(variant, types);
            fill_binders_sentence(body, types);
        }
        SentenceKind::For { lo, hi, body, .. } => {
            fill_binders_expr(lo, types);
            fill_binders_expr(hi, types);
            fill_binders_sentence(body, types);
        }
        SentenceKind::Map { body, .. } => fill_binders_sentence(body, types),
        SentenceKind::Seq(a, b) => {
            fill_binders_sentence(a, types);
            fill_binders_sentence(b, types);
        }
    }
}

pub fn infer_types(prog: &Program) -> Result<TypedProgram, TypeError> {
    let mut signatures: BTreeMap<String, Vec<Ty>> = BTreeMap::new();
    let mut envs = BTreeMap::new();
    let mut program = prog.clone();
    for p in program.procedures.iter_mut() {
        let mut ck = Checker::new(&signatures);
        ck.procedure(p)?;
        let env = ck.env()?;
        let mut types = ck.binder_types().into_iter();
        // the checker visits contracts before the body, in this same order
        for c in p.pre.iter_mut().chain(p.post.iter_mut()) {
            fill_binders_expr(&mut c.expr, &mut types);
        }
        fill_binders_sentence(&mut p.body, &mut types);
        let sig = p
            .params
            .iter()
            .map(|x| env.get(x).expect("parameter typed"))
            .collect();
        signatures.insert(p.name.clone(), sig);
        envs.insert(p.name.clone(), env);
    }
    Ok(TypedProgram { program, envs })
}

/// Types a standalone expression against `env`, filling in the types of its
/// unbounded-existential binders.
pub fn type_expr(e: &mut Expr, env: &TypeEnv) -> Result<Ty, TypeError> {
    let sigs = BTreeMap::new();
    let mut ck = Checker::new(&sigs);
    for (name, ty) in env.iter() {
        let v = ck.uf.known(*ty, Span::default());
        ck.declared.insert(name.clone(), (v, Span::default()));
        ck.scope.push((name.clone(), v));
        ck.params.push(name.clone());
    }
    let t = ck.expr(e)?;
    let ty = ck.uf.resolve(t).ok_or(TypeError::Ambiguous {
        name: e.to_string(),
        span: e.span,
    })?;
    let mut types = ck.binder_types().into_iter();
    fill_binders_expr(e, &mut types);
    Ok(ty)
}

/// Type of `e` under `env`, assuming binders already carry types.
pub fn type_of(e: &Expr, env: &TypeEnv) -> Option<Ty> {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Size(_) | ExprKind::Access(..) => Some(Ty::Int),
        ExprKind::Bool(_) | ExprKind::Quant { .. } | ExprKind::Exists { .. } => Some(Ty::Bool),
        ExprKind::Var(x) | ExprKind::VarAtPre(x) => env.get(x),
        ExprKind::Update(..) => Some(Ty::Arr),
        ExprKind::Unary(UnOp::Neg, _) => Some(Ty::Int),
        ExprKind::Unary(UnOp::Not, _) => Some(Ty::Bool),
        ExprKind::Binary(op, ..) => Some(if op.is_arithmetic() { Ty::Int } else { Ty::Bool }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_expr, parse_program};

    fn env_of(src: &str, proc: &str) -> TypeEnv {
        let prog = parse_program(src).unwrap();
        infer_types(&prog).unwrap().envs[proc].clone()
    }

    #[test]
    fn max_is_all_integers() {
        let env = env_of(
            "max(a, b, c) :! (a >= b => c = a) && (a < b => c = b) { if a >= b then c <- a else c <- b fi }",
            "max",
        );
        for x in ["a", "b", "c", "a@pre"] {
            assert_eq!(env.get(x), Some(Ty::Int), "{x}");
        }
    }

    #[test]
    fn unconstrained_variable_is_ambiguous() {
        let prog = parse_program("p(x) { x <- x }").unwrap();
        assert!(matches!(
            infer_types(&prog),
            Err(TypeError::Ambiguous { ref name, .. }) if name == "x"
        ));
    }

    #[test]
    fn conflicting_uses_report_both_sites() {
        let prog = parse_program("p(x) { x <- 1 \n x <- true }").unwrap();
        match infer_types(&prog) {
            Err(TypeError::Conflict {
                expected_at, span, ..
            }) => {
                assert_eq!(expected_at.line, 1);
                assert_eq!(span.line, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_propagates_types() {
        let env = env_of("p(A, B) :! A = B { A <- update A on 0 with 1 }", "p");
        assert_eq!(env.get("B"), Some(Ty::Arr));
    }

    #[test]
    fn call_actuals_take_formal_types() {
        let env = env_of(
            "q(A, n) { n <- |A| } p(X, m, k) { k <- m + 1 \n call q(X, m) }",
            "p",
        );
        assert_eq!(env.get("X"), Some(Ty::Arr));
    }

    #[test]
    fn local_shadowing_is_rejected() {
        let prog = parse_program("p(x) { local x <- 1 }").unwrap();
        assert!(matches!(
            infer_types(&prog),
            Err(TypeError::Shadowing { .. })
        ));
    }

    #[test]
    fn quantifier_variable_shadows_outer() {
        let env = env_of("p(A, k) :! forall-k / 0 <= k < |A| : A[k] > 0 { k <- 0 }", "p");
        assert_eq!(env.get("k"), Some(Ty::Int));
        let prog = parse_program("p(A, k) :! forall-k / 0 <= k < |A| : A[k] > 0 { k <- true }")
            .unwrap();
        assert!(infer_types(&prog).is_ok());
    }

    #[test]
    fn at_pre_requires_parameter() {
        let prog = parse_program("p(x) { local y <- 1 \n x <- y@pre }").unwrap();
        assert!(matches!(
            infer_types(&prog),
            Err(TypeError::AtPreNotParam { .. })
        ));
    }

    #[test]
    fn binders_get_types() {
        let env: TypeEnv = [("A".to_string(), Ty::Arr)].into_iter().collect();
        let mut e = parse_expr("exists B, v (B = A && v = B[0])").unwrap();
        assert_eq!(type_expr(&mut e, &env).unwrap(), Ty::Bool);
        match &e.kind {
            ExprKind::Exists { vars, .. } => {
                assert_eq!(vars[0].ty, Some(Ty::Arr));
                assert_eq!(vars[1].ty, Some(Ty::Int));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn deterministic() {
        let src = "f(A, m) :? |A| > 0 { m <- A[0] }";
        assert_eq!(env_of(src, "f"), env_of(src, "f"));
    }
}
