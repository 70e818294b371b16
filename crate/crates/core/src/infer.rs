//! Strongest-postcondition and precondition calculi over annotated
//! sentences, emitting the side conditions of each construct as VCs, and
//! whole-procedure contract inference built on them.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use thiserror::Error;

use crate::logic::{all_names, close, fresh_var, local_vars, mod_vars, safe_expr, simplify, subst_var, subst_vars};
use crate::solver::{dispatch, SolverConfig, SolverError, Vc, Verdict};
use crate::syntax::{
    conj_clauses, Binder, Clause, Expr, Origin, Procedure, Program, Sentence, SentenceKind, Span,
};
use crate::types::{Ty, TypeEnv};

/// What callers may assume about a procedure.
#[derive(Clone, Debug, PartialEq)]
pub struct Contract {
    pub params: Vec<String>,
    pub pre: Expr,
    pub post: Expr,
}

impl Contract {
    pub fn of(p: &Procedure) -> Self {
        Contract {
            params: p.params.clone(),
            pre: p.pre_conj(),
            post: p.post_conj(),
        }
    }
}

pub type Contracts = BTreeMap<String, Contract>;

/// Contracts of every procedure of `prog`, as currently annotated.
pub fn contracts_of(prog: &Program) -> Contracts {
    prog.procedures
        .iter()
        .map(|p| (p.name.clone(), Contract::of(p)))
        .collect()
}

#[derive(Debug, Error)]
pub enum InferError {
    #[error("{span}: `{construct}` must be expanded before analysis")]
    Sugar { construct: &'static str, span: Span },
    #[error("{span}: call to `{callee}` which has no contract")]
    NoContract { callee: String, span: Span },
    #[error("{}: side condition {} ({}) is {}", vc.span, vc.id, vc.rule, verdict.label())]
    SideCondition { vc: Box<Vc>, verdict: Verdict },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

fn rule_slug(rule: &str) -> String {
    rule.to_lowercase().replace('/', "-")
}

/// Every identifier of a procedure, in any annotation or statement.
pub fn procedure_names(p: &Procedure) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = p.params.iter().cloned().collect();
    for c in p.pre.iter().chain(&p.post) {
        out.extend(all_names(&c.expr));
    }
    sentence_names(&p.body, &mut out);
    out
}

fn sentence_names(s: &Sentence, out: &mut BTreeSet<String>) {
    match &s.kind {
        SentenceKind::Skip => {}
        SentenceKind::Assign { target, value } => {
            out.insert(target.clone());
            out.extend(all_names(value));
        }
        SentenceKind::Local { name, init } => {
            out.insert(name.clone());
            out.extend(all_names(init));
        }
        SentenceKind::If {
            guard,
            then_branch,
            else_branch,
        } => {
            out.extend(all_names(guard));
            sentence_names(then_branch, out);
            sentence_names(else_branch, out);
        }
        SentenceKind::While {
            guard,
            invariants,
            variant,
            body,
        } => {
            out.extend(all_names(guard));
            out.extend(all_names(variant));
            for c in invariants {
                out.extend(all_names(&c.expr));
            }
            sentence_names(body, out);
        }
        SentenceKind::Call { args, .. } => out.extend(args.iter().cloned()),
        SentenceKind::For {
            index,
            lo,
            hi,
            body,
        } => {
            out.insert(index.clone());
            out.extend(all_names(lo));
            out.extend(all_names(hi));
            sentence_names(body, out);
        }
        SentenceKind::Map { body, array, index } => {
            out.insert(array.clone());
            out.insert(index.clone());
            sentence_names(body, out);
        }
        SentenceKind::Seq(a, b) => {
            sentence_names(a, out);
            sentence_names(b, out);
        }
    }
}

/// Symbolic execution state for one procedure: callee contracts, the type
/// environment (grown with every fresh variable) and the VCs emitted so far.
pub struct Calculus<'a> {
    contracts: &'a Contracts,
    procedure: String,
    env: TypeEnv,
    avoid: BTreeSet<String>,
    vcs: Vec<Vc>,
}

impl<'a> Calculus<'a> {
    pub fn new(proc: &Procedure, env: &TypeEnv, contracts: &'a Contracts) -> Self {
        let mut avoid = procedure_names(proc);
        for c in contracts.values() {
            avoid.extend(all_names(&c.pre));
            avoid.extend(all_names(&c.post));
        }
        Calculus {
            contracts,
            procedure: proc.name.clone(),
            env: env.clone(),
            avoid,
            vcs: Vec::new(),
        }
    }

    pub fn env(&self) -> &TypeEnv {
        &self.env
    }

    /// Emitted VCs, each carrying the final environment.
    pub fn take_vcs(&mut self) -> Vec<Vc> {
        let mut vcs = std::mem::take(&mut self.vcs);
        for vc in &mut vcs {
            vc.env = self.env.clone();
        }
        vcs
    }

    /// A name unused in the procedure so far, declared with type `ty`.
    pub fn fresh(&mut self, base: &str, ty: Ty) -> String {
        let name = fresh_var(base, &self.avoid);
        self.avoid.insert(name.clone());
        self.env.insert(name.clone(), ty);
        name
    }

    fn ty(&self, var: &str) -> Ty {
        self.env.get(var).unwrap_or(Ty::Int)
    }

    pub fn emit(&mut self, rule: &str, span: Span, hypothesis: Expr, goal: Expr, trusted: bool) {
        let id = format!("{}.{:03}.{}", self.procedure, self.vcs.len(), rule_slug(rule));
        self.vcs.push(Vc {
            id,
            procedure: self.procedure.clone(),
            rule: rule.to_string(),
            span,
            hypothesis,
            goal,
            env: TypeEnv::new(),
            trusted,
        });
    }

    /// `∃v'( p[v→v'] ∧ v = e[v→v'] )`, or `p ∧ v = e` when `v` occurs in
    /// neither.
    fn assign_post(&mut self, p: Expr, v: &str, e: &Expr) -> Expr {
        let fv_p = crate::logic::free_vars(&p);
        let fv_e = crate::logic::free_vars(e);
        if !fv_p.contains(v) && !fv_e.contains(v) {
            return Expr::and(p, Expr::eq(Expr::var(v), e.clone()));
        }
        let ty = self.ty(v);
        let v0 = self.fresh(&format!("{v}'"), ty);
        let old = Expr::var(&v0);
        let body = Expr::and(
            subst_var(&p, v, &old),
            Expr::eq(Expr::var(v), subst_var(e, v, &old)),
        );
        Expr::exists(vec![Binder::new(v0, ty)], body)
    }

    fn close_locals(&self, p: &Expr, s: &Sentence) -> Expr {
        close(p, &local_vars(s), &self.env)
    }

    fn contract(&self, callee: &str, span: Span) -> Result<&'a Contract, InferError> {
        self.contracts.get(callee).ok_or_else(|| InferError::NoContract {
            callee: callee.to_string(),
            span,
        })
    }

    /// Emits the premises of a loop that do not depend on its entry
    /// predicate and returns the body's exit predicate.
    fn loop_premises(
        &mut self,
        guard: &Expr,
        invariants: &[Clause],
        variant: &Expr,
        body: &Sentence,
        span: Span,
    ) -> Result<(), InferError> {
        let inv = conj_clauses(invariants);
        self.emit("S-WHILE/safe-guard", guard.span.to(span), inv.clone(), safe_expr(guard), false);
        self.emit("S-WHILE/safe-variant", variant.span.to(span), inv.clone(), safe_expr(variant), false);
        let entry = Expr::and(inv.clone(), guard.clone());
        self.emit(
            "S-WHILE/variant-positive",
            variant.span.to(span),
            entry.clone(),
            Expr::gt(variant.clone(), Expr::int(0)),
            false,
        );
        let var0 = self.fresh("var0", Ty::Int);
        let entry = Expr::and(entry, Expr::eq(Expr::var(&var0), variant.clone()));
        let after = self.post(body, entry)?;
        for c in invariants {
            self.emit(
                "S-WHILE/inv-preserved",
                c.expr.span.to(span),
                after.clone(),
                c.expr.clone(),
                c.origin == Origin::ByConstruction,
            );
        }
        self.emit(
            "S-WHILE/variant-decreases",
            variant.span.to(span),
            after,
            Expr::lt(variant.clone(), Expr::var(var0)),
            false,
        );
        Ok(())
    }

    /// Strongest postcondition of `s` from `p`.
    pub fn post(&mut self, s: &Sentence, p: Expr) -> Result<Expr, InferError> {
        match &s.kind {
            SentenceKind::Skip => Ok(p),
            SentenceKind::Assign { target, value } | SentenceKind::Local { name: target, init: value } => {
                let rule = if matches!(s.kind, SentenceKind::Assign { .. }) {
                    "S-ASSIGN/safe"
                } else {
                    "S-LOCAL/safe"
                };
                self.emit(rule, s.span, p.clone(), safe_expr(value), false);
                Ok(self.assign_post(p, target, value))
            }
            SentenceKind::If {
                guard,
                then_branch,
                else_branch,
            } => {
                self.emit("S-IF/safe-guard", guard.span.to(s.span), p.clone(), safe_expr(guard), false);
                let q1 = self.post(then_branch, Expr::and(p.clone(), guard.clone()))?;
                let q2 = self.post(else_branch, Expr::and(p, Expr::not(guard.clone())))?;
                Ok(Expr::or(
                    self.close_locals(&q1, then_branch),
                    self.close_locals(&q2, else_branch),
                ))
            }
            SentenceKind::While {
                guard,
                invariants,
                variant,
                body,
            } => {
                for c in invariants {
                    self.emit(
                        "S-WHILE/inv-entry",
                        c.expr.span.to(s.span),
                        p.clone(),
                        c.expr.clone(),
                        c.origin == Origin::ByConstruction,
                    );
                }
                self.loop_premises(guard, invariants, variant, body, s.span)?;
                let exit = Expr::and(conj_clauses(invariants), Expr::not(guard.clone()));
                // Facts about variables the loop leaves alone survive it.
                let frame = close(&p, &mod_vars(body), &self.env);
                Ok(if frame.is_true() { exit } else { Expr::and(exit, frame) })
            }
            SentenceKind::Call { callee, args } => {
                let c = self.contract(callee, s.span)?;
                let actuals: BTreeMap<String, Expr> = c
                    .params
                    .iter()
                    .zip(args)
                    .map(|(f, a)| (f.clone(), Expr::var(a)))
                    .collect();
                self.emit("S-CALL/pre", s.span, p.clone(), subst_vars(&c.pre, &actuals), false);
                let mut olds = BTreeMap::new();
                let mut post_map = actuals;
                let mut binders = Vec::new();
                for (f, a) in c.params.iter().zip(args) {
                    let ty = self.ty(a);
                    let old = self.fresh(&format!("{a}'"), ty);
                    olds.insert(a.clone(), Expr::var(&old));
                    post_map.insert(format!("{f}@pre"), Expr::var(&old));
                    binders.push(Binder::new(old, ty));
                }
                let body = Expr::and(subst_vars(&p, &olds), subst_vars(&c.post, &post_map));
                Ok(Expr::exists(binders, body))
            }
            SentenceKind::Seq(a, b) => {
                let mid = self.post(a, p)?;
                self.post(b, mid)
            }
            SentenceKind::For { .. } => Err(InferError::Sugar {
                construct: "for",
                span: s.span,
            }),
            SentenceKind::Map { .. } => Err(InferError::Sugar {
                construct: "map",
                span: s.span,
            }),
        }
    }

    /// Weakest precondition of `s` for `q`; loops contribute their invariant.
    pub fn pre(&mut self, s: &Sentence, q: Expr) -> Result<Expr, InferError> {
        match &s.kind {
            SentenceKind::Skip => Ok(q),
            SentenceKind::Assign { target, value } | SentenceKind::Local { name: target, init: value } => {
                Ok(Expr::and(safe_expr(value), subst_var(&q, target, value)))
            }
            SentenceKind::If {
                guard,
                then_branch,
                else_branch,
            } => {
                let q1 = self.pre(then_branch, q.clone())?;
                let q2 = self.pre(else_branch, q)?;
                Ok(Expr::and_all([
                    safe_expr(guard),
                    Expr::implies(guard.clone(), q1),
                    Expr::implies(Expr::not(guard.clone()), q2),
                ]))
            }
            SentenceKind::While {
                guard,
                invariants,
                variant,
                body,
            } => {
                let inv = conj_clauses(invariants);
                self.emit(
                    "PRE-WHILE/exit",
                    s.span,
                    Expr::and(inv.clone(), Expr::not(guard.clone())),
                    q,
                    false,
                );
                self.loop_premises(guard, invariants, variant, body, s.span)?;
                Ok(inv)
            }
            SentenceKind::Call { callee, args } => {
                let c = self.contract(callee, s.span)?;
                let mut pre_map = BTreeMap::new();
                let mut post_map = BTreeMap::new();
                let mut results = BTreeMap::new();
                let mut binders = Vec::new();
                for (f, a) in c.params.iter().zip(args) {
                    let ty = self.ty(a);
                    let r = self.fresh(&format!("{a}'"), ty);
                    pre_map.insert(f.clone(), Expr::var(a));
                    post_map.insert(format!("{f}@pre"), Expr::var(a));
                    post_map.insert(f.clone(), Expr::var(&r));
                    results.insert(a.clone(), Expr::var(&r));
                    binders.push(Binder::new(r, ty));
                }
                // every result allowed by the callee's post satisfies q
                let bad = Expr::and(subst_vars(&c.post, &post_map), Expr::not(subst_vars(&q, &results)));
                Ok(Expr::and(
                    subst_vars(&c.pre, &pre_map),
                    Expr::not(Expr::exists(binders, bad)),
                ))
            }
            SentenceKind::Seq(a, b) => {
                let mid = self.pre(b, q)?;
                self.pre(a, mid)
            }
            SentenceKind::For { .. } => Err(InferError::Sugar {
                construct: "for",
                span: s.span,
            }),
            SentenceKind::Map { .. } => Err(InferError::Sugar {
                construct: "map",
                span: s.span,
            }),
        }
    }

    /// Exit predicate of the whole body from `conj(pre) ∧ frozen params`,
    /// with body locals closed.
    pub fn procedure_exit(&mut self, proc: &Procedure) -> Result<Expr, InferError> {
        let p0 = Expr::and(proc.pre_conj(), proc.frozen_params());
        let q = self.post(&proc.body, p0)?;
        Ok(self.close_locals(&q, &proc.body))
    }
}

/// Checks side conditions, failing on the first one that does not pass.
fn discharge(vcs: &[Vc], cfg: &SolverConfig) -> Result<(), InferError> {
    let verdicts = dispatch(vcs, cfg)?;
    for vc in vcs {
        let v = &verdicts[&vc.id];
        if !v.is_pass() {
            return Err(InferError::SideCondition {
                vc: Box::new(vc.clone()),
                verdict: v.clone(),
            });
        }
    }
    Ok(())
}

/// Postcondition of `s` from `p`, with every side condition discharged.
pub fn post(
    proc: &Procedure,
    env: &TypeEnv,
    contracts: &Contracts,
    s: &Sentence,
    p: Expr,
    cfg: &SolverConfig,
) -> Result<Expr, InferError> {
    let mut calc = Calculus::new(proc, env, contracts);
    let q = calc.post(s, p)?;
    discharge(&calc.take_vcs(), cfg)?;
    Ok(q)
}

/// Precondition of `s` for `q`, with every side condition discharged.
pub fn pre(
    proc: &Procedure,
    env: &TypeEnv,
    contracts: &Contracts,
    s: &Sentence,
    q: Expr,
    cfg: &SolverConfig,
) -> Result<Expr, InferError> {
    let mut calc = Calculus::new(proc, env, contracts);
    let p = calc.pre(s, q)?;
    discharge(&calc.take_vcs(), cfg)?;
    Ok(p)
}

/// Replaces `x@pre` by `x` for every parameter: at entry they coincide.
fn at_entry(p: &Expr, params: &[String]) -> Expr {
    let map = params
        .iter()
        .map(|x| (format!("{x}@pre"), Expr::var(x)))
        .collect();
    simplify(&subst_vars(p, &map))
}

/// Infers a contract for `proc` from its body alone: the precondition is
/// `pre(body, true)`, the postcondition the exit predicate from that
/// precondition with locals closed. Environment of the result grows with the
/// fresh variables it mentions.
pub fn infer_contract(
    proc: &Procedure,
    env: &mut TypeEnv,
    contracts: &Contracts,
    cfg: &SolverConfig,
) -> Result<(Expr, Expr), InferError> {
    let mut calc = Calculus::new(proc, env, contracts);
    let p = at_entry(&calc.pre(&proc.body, Expr::tt())?, &proc.params);
    let entry = Expr::and(p.clone(), proc.frozen_params());
    let q = calc.post(&proc.body, entry)?;
    let q = simplify(&close(&q, &local_vars(&proc.body), calc.env()));
    let vcs = calc.take_vcs();
    debug!("{}: {} side conditions for contract inference", proc.name, vcs.len());
    discharge(&vcs, cfg)?;
    *env = calc.env().clone();
    Ok((p, q))
}

/// Fills in whichever of `proc`'s precondition and postcondition is absent
/// with inferred clauses. The side conditions are left to verification,
/// which emits the same ones. Returns whether anything was added.
pub fn complete_contract(
    proc: &mut Procedure,
    env: &mut TypeEnv,
    contracts: &Contracts,
) -> Result<bool, InferError> {
    let need_pre = proc.pre.is_empty();
    let need_post = proc.post.is_empty();
    if need_pre {
        let mut calc = Calculus::new(proc, env, contracts);
        let p = at_entry(&calc.pre(&proc.body, proc.post_conj())?, &proc.params);
        *env = calc.env().clone();
        proc.pre = vec![Clause::new(p, Origin::Inferred)];
    }
    if need_post {
        let mut calc = Calculus::new(proc, env, contracts);
        let q = simplify(&calc.procedure_exit(proc)?);
        *env = calc.env().clone();
        proc.post = vec![Clause::new(q, Origin::Inferred)];
    }
    Ok(need_pre || need_post)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::check_entailment;
    use crate::syntax::{parse_expr, parse_program};
    use crate::types::{infer_types, type_expr};

    const MAX: &str = "
max(a, b, c)
:? true
:! (a >= b => c = a) && (a < b => c = b)
:! a = a@pre && b = b@pre
{
  if a >= b then c <- a else c <- b fi
}";

    fn setup(src: &str, name: &str) -> (Procedure, TypeEnv, Contracts) {
        let typed = infer_types(&parse_program(src).unwrap()).unwrap();
        let proc = typed.program.procedure(name).unwrap().clone();
        (proc, typed.env(name).clone(), contracts_of(&typed.program))
    }

    fn equivalent(a: &Expr, b: &Expr, env: &TypeEnv) -> bool {
        let cfg = SolverConfig::oracle();
        check_entailment(a, b, env, &cfg).unwrap().is_pass()
            && check_entailment(b, a, env, &cfg).unwrap().is_pass()
    }

    #[test]
    fn max_vc_golden() {
        let (proc, env, contracts) = setup(MAX, "max");
        let mut calc = Calculus::new(&proc, &env, &contracts);
        let exit = calc.procedure_exit(&proc).unwrap();
        for c in &proc.post {
            calc.emit("POST", c.expr.span, exit.clone(), c.expr.clone(), false);
        }
        let ids: Vec<String> = calc.take_vcs().into_iter().map(|v| v.id).collect();
        assert_eq!(
            ids,
            [
                "max.000.s-if-safe-guard",
                "max.001.s-assign-safe",
                "max.002.s-assign-safe",
                "max.003.post",
                "max.004.post",
            ]
        );
    }

    #[test]
    fn post_of_assignment() {
        let (proc, env, contracts) = setup(MAX, "max");
        let s = Sentence::assign("c", Expr::var("a"));
        let p = parse_expr("a >= b").unwrap();
        let q = post(&proc, &env, &contracts, &s, p, &SolverConfig::oracle()).unwrap();
        assert!(equivalent(&q, &parse_expr("a >= b && c = a").unwrap(), &env));
    }

    #[test]
    fn pre_examples() {
        let (proc, env, contracts) = setup(MAX, "max");
        let mut calc = Calculus::new(&proc, &env, &contracts);
        let p = calc
            .pre(&Sentence::assign("c", Expr::var("a")), parse_expr("c = a").unwrap())
            .unwrap();
        assert!(equivalent(&p, &Expr::tt(), &env));

        let mut env2 = TypeEnv::new();
        env2.insert("a", Ty::Arr);
        env2.insert("x", Ty::Int);
        env2.insert("i", Ty::Int);
        let s = Sentence::assign("x", parse_expr("a[i]").unwrap());
        let p = calc.pre(&s, Expr::tt()).unwrap();
        assert_eq!(p.to_string(), "0 <= i && i < |a|");
    }

    #[test]
    fn skip_post_is_identity() {
        let (proc, env, contracts) = setup(MAX, "max");
        let p = parse_expr("a > b").unwrap();
        let q = post(&proc, &env, &contracts, &Sentence::skip(), p.clone(), &SolverConfig::oracle()).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn max_contract_inferred() {
        let src = "max(a, b, c) { if a >= b then c <- a else c <- b fi }";
        let (proc, mut env, contracts) = setup(src, "max");
        let (p, q) = infer_contract(&proc, &mut env, &contracts, &SolverConfig::oracle()).unwrap();
        assert!(equivalent(&p, &Expr::tt(), &env));
        let mut declared =
            parse_expr("(a >= b => c = a) && (a < b => c = b) && a = a@pre && b = b@pre").unwrap();
        type_expr(&mut declared, &env).unwrap();
        assert!(equivalent(&q, &declared, &env), "{q}");
    }

    #[test]
    fn local_only_contract_freezes_params() {
        let (proc, mut env, contracts) = setup("id(x, y) { local t <- x + y }", "id");
        let (p, q) = infer_contract(&proc, &mut env, &contracts, &SolverConfig::oracle()).unwrap();
        assert!(equivalent(&p, &Expr::tt(), &env));
        assert!(equivalent(&q, &parse_expr("x = x@pre && y = y@pre").unwrap(), &env));
    }

    #[test]
    fn sugar_is_rejected() {
        let src = "f(A) { for i from 0 to |A| do skip od }";
        let (proc, env, contracts) = setup(src, "f");
        let mut calc = Calculus::new(&proc, &env, &contracts);
        assert!(matches!(
            calc.post(&proc.body, Expr::tt()),
            Err(InferError::Sugar { construct: "for", .. })
        ));
    }
}
