//! Expansion of `for` and `map` into annotated `while` loops.
//!
//! A `for` loop's invariant is guessed from the predicate required after it
//! (computed backwards with the precondition calculus) and is verified like
//! any user annotation. A `map` loop's invariants follow from the shape of
//! its body and are marked correct by construction.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::infer::{Calculus, Contracts, InferError};
use crate::logic::{all_locals, close, fresh_var, local_vars, mod_vars, subst_vars, substitute};
use crate::syntax::{
    conj_clauses, Clause, Expr, ExprKind, Origin, Procedure, Sentence, SentenceKind, Span,
};
use crate::types::{Ty, TypeEnv};

#[derive(Debug, Error)]
pub enum SugarError {
    #[error("{span}: `for` body assigns its index `{index}`")]
    IndexAssigned { index: String, span: Span },
    #[error("{span}: `map` body modifies `{var}`; only `{array}` may be modified")]
    ExtraModified { var: String, array: String, span: Span },
    #[error("{span}: `map` body uses `{array}` other than as `{array}[{index}]`")]
    NonIndexedAccess { array: String, index: String, span: Span },
    #[error(transparent)]
    Infer(#[from] InferError),
}

/// Guessed invariants of a `for` loop: the index range and `Q_f{h→i}`.
fn for_invariants(index: &str, lo: &Expr, hi: &Expr, q_f: &Expr) -> Vec<Clause> {
    let i = Expr::var(index);
    let bounds = Expr::and(Expr::le(lo.clone(), i.clone()), Expr::le(i.clone(), hi.clone()));
    let mut invariants = vec![Clause::new(bounds, Origin::Guessed)];
    let guessed = substitute(q_f, hi, &i);
    if !guessed.is_true() {
        invariants.push(Clause::new(guessed, Origin::Guessed));
    }
    invariants
}

/// `local i <- l; while i < h :?! l <= i && i <= h :?! Q_f{h→i} :# h - i do body; i <- i + 1 od`
pub fn expand_for(
    index: &str,
    lo: &Expr,
    hi: &Expr,
    body: Sentence,
    q_f: &Expr,
    span: Span,
) -> Result<Sentence, SugarError> {
    if mod_vars(&body).contains(index) {
        return Err(SugarError::IndexAssigned {
            index: index.to_string(),
            span,
        });
    }
    let invariants = for_invariants(index, lo, hi, q_f);
    Ok(counting_loop(index, lo.clone(), hi.clone(), invariants, body, span))
}

fn counting_loop(
    index: &str,
    lo: Expr,
    hi: Expr,
    invariants: Vec<Clause>,
    body: Sentence,
    span: Span,
) -> Sentence {
    let i = Expr::var(index);
    let step = Sentence::assign(index, Expr::add(i.clone(), Expr::int(1))).with_span(span);
    let w = Sentence::new(
        SentenceKind::While {
            guard: Expr::lt(i.clone(), hi.clone()),
            invariants,
            variant: Expr::sub(hi, i),
            body: Box::new(Sentence::seq(body, step)),
        },
        span,
    );
    Sentence::seq(Sentence::local(index, lo).with_span(span), w)
}

/// Rewrites a map body over the single cell `array[index]` as a body over
/// the scalar `cell`.
struct CellAbstraction<'a> {
    array: &'a str,
    index: &'a str,
    cell: &'a str,
}

impl CellAbstraction<'_> {
    fn is_cell(&self, a: &Expr, i: &Expr) -> bool {
        matches!(&a.kind, ExprKind::Var(x) if x == self.array)
            && matches!(&i.kind, ExprKind::Var(x) if x == self.index)
    }

    fn error(&self, span: Span) -> SugarError {
        SugarError::NonIndexedAccess {
            array: self.array.to_string(),
            index: self.index.to_string(),
            span,
        }
    }

    fn expr(&self, e: &Expr) -> Result<Expr, SugarError> {
        let b = |x: Expr| Box::new(x);
        let kind = match &e.kind {
            ExprKind::Access(a, i) if self.is_cell(a, i) => return Ok(Expr::var(self.cell).with_span(e.span)),
            ExprKind::Var(x) | ExprKind::VarAtPre(x) if x == self.array => return Err(self.error(e.span)),
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) | ExprKind::VarAtPre(_) => {
                return Ok(e.clone())
            }
            ExprKind::Access(a, i) => ExprKind::Access(b(self.expr(a)?), b(self.expr(i)?)),
            ExprKind::Size(a) => ExprKind::Size(b(self.expr(a)?)),
            ExprKind::Update(a, i, v) => {
                ExprKind::Update(b(self.expr(a)?), b(self.expr(i)?), b(self.expr(v)?))
            }
            ExprKind::Unary(op, x) => ExprKind::Unary(*op, b(self.expr(x)?)),
            ExprKind::Binary(op, l, r) => ExprKind::Binary(*op, b(self.expr(l)?), b(self.expr(r)?)),
            ExprKind::Quant {
                kind,
                var,
                lo,
                hi,
                body,
            } => ExprKind::Quant {
                kind: *kind,
                var: var.clone(),
                lo: b(self.expr(lo)?),
                hi: b(self.expr(hi)?),
                body: b(self.expr(body)?),
            },
            ExprKind::Exists { vars, body } => ExprKind::Exists {
                vars: vars.clone(),
                body: b(self.expr(body)?),
            },
        };
        Ok(Expr::new(kind, e.span))
    }

    fn clauses(&self, cs: &[Clause]) -> Result<Vec<Clause>, SugarError> {
        cs.iter()
            .map(|c| Ok(Clause::new(self.expr(&c.expr)?, c.origin)))
            .collect()
    }

    fn sentence(&self, s: &Sentence) -> Result<Sentence, SugarError> {
        let kind = match &s.kind {
            SentenceKind::Skip => SentenceKind::Skip,
            SentenceKind::Assign { target, value } if target == self.array => match &value.kind {
                ExprKind::Update(a, i, v) if self.is_cell(a, i) => SentenceKind::Assign {
                    target: self.cell.to_string(),
                    value: self.expr(v)?,
                },
                _ => return Err(self.error(value.span.to(s.span))),
            },
            SentenceKind::Assign { target, value } => SentenceKind::Assign {
                target: target.clone(),
                value: self.expr(value)?,
            },
            SentenceKind::Local { name, init } => SentenceKind::Local {
                name: name.clone(),
                init: self.expr(init)?,
            },
            SentenceKind::If {
                guard,
                then_branch,
                else_branch,
            } => SentenceKind::If {
                guard: self.expr(guard)?,
                then_branch: Box::new(self.sentence(then_branch)?),
                else_branch: Box::new(self.sentence(else_branch)?),
            },
            SentenceKind::While {
                guard,
                invariants,
                variant,
                body,
            } => SentenceKind::While {
                guard: self.expr(guard)?,
                invariants: self.clauses(invariants)?,
                variant: self.expr(variant)?,
                body: Box::new(self.sentence(body)?),
            },
            SentenceKind::Call { args, .. } if args.iter().any(|a| a == self.array) => {
                return Err(self.error(s.span))
            }
            SentenceKind::Call { .. } => s.kind.clone(),
            SentenceKind::For {
                index,
                lo,
                hi,
                body,
            } => SentenceKind::For {
                index: index.clone(),
                lo: self.expr(lo)?,
                hi: self.expr(hi)?,
                body: Box::new(self.sentence(body)?),
            },
            SentenceKind::Map { array, .. } if array == self.array => return Err(self.error(s.span)),
            SentenceKind::Map { body, array, index } => SentenceKind::Map {
                body: Box::new(self.sentence(body)?),
                array: array.clone(),
                index: index.clone(),
            },
            SentenceKind::Seq(a, b) => {
                SentenceKind::Seq(Box::new(self.sentence(a)?), Box::new(self.sentence(b)?))
            }
        };
        Ok(Sentence::new(kind, s.span))
    }
}

/// Checks that `body` may be iterated as a map over `array` with `index`.
pub fn check_map(body: &Sentence, array: &str, index: &str, span: Span) -> Result<(), SugarError> {
    let locals = all_locals(body);
    for v in mod_vars(body) {
        if v != array && !locals.contains(&v) {
            return Err(SugarError::ExtraModified {
                var: v,
                array: array.to_string(),
                span,
            });
        }
    }
    CellAbstraction {
        array,
        index,
        cell: "_",
    }
    .sentence(body)
    .map(|_| ())
}

/// Expands `map body in array[..index..]`. `origin` denotes the array's
/// value before the map (`array@pre` or a snapshot local); `cell_post` is
/// the postcondition of the body abstracted to the scalar cell, already
/// expressed over `array[index]` and `origin[index]`.
pub fn expand_map(
    body: Sentence,
    array: &str,
    index: &str,
    origin: &Expr,
    cell_post: &Expr,
    span: Span,
) -> Sentence {
    let a = Expr::var(array);
    let i = Expr::var(index);
    let size = Expr::size(a.clone());
    let mut avoid = crate::logic::all_names(cell_post);
    avoid.extend([array.to_string(), index.to_string()]);
    avoid.extend(crate::logic::free_vars(origin));
    let k = fresh_var("k", &avoid);
    let kv = Expr::var(&k);
    let bounds = Expr::and(Expr::le(Expr::int(0), i.clone()), Expr::le(i.clone(), size.clone()));
    let done = Expr::forall(&k, Expr::int(0), i.clone(), substitute(cell_post, &i, &kv));
    let untouched = Expr::forall(
        &k,
        i.clone(),
        size.clone(),
        Expr::eq(Expr::access(a.clone(), kv.clone()), Expr::access(origin.clone(), kv)),
    );
    let invariants = [bounds, done, untouched]
        .into_iter()
        .map(|e| Clause::new(e, Origin::ByConstruction))
        .collect();
    counting_loop(index, Expr::int(0), size, invariants, body, span)
}

/// Result of desugaring a sentence: the expanded sentence and the predicate
/// it requires beforehand.
struct Desugared {
    sentence: Sentence,
    pre: Expr,
}

struct Desugarer<'a, 'c> {
    calc: Calculus<'c>,
    params: &'a [String],
}

impl Desugarer<'_, '_> {

    fn pre(&mut self, s: Sentence, q: Expr) -> Result<Desugared, SugarError> {
        let pre = self.calc.pre(&s, q)?;
        Ok(Desugared { sentence: s, pre })
    }

    /// `modified_before` is `Some` only for statements on the procedure's
    /// top-level sequence and holds the variables written before them.
    fn sentence(
        &mut self,
        s: &Sentence,
        q: Expr,
        modified_before: Option<&BTreeSet<String>>,
    ) -> Result<Desugared, SugarError> {
        if !s.has_sugar() {
            return self.pre(s.clone(), q);
        }
        match &s.kind {
            SentenceKind::Seq(..) => {
                let items = s.flatten();
                let mut prefix_mods = Vec::with_capacity(items.len());
                let mut acc = modified_before.cloned();
                for item in &items {
                    prefix_mods.push(acc.clone());
                    if let Some(m) = acc.as_mut() {
                        m.extend(mod_vars(item));
                    }
                }
                let mut q = q;
                let mut out = Vec::with_capacity(items.len());
                for (item, mods) in items.iter().zip(prefix_mods).rev() {
                    let d = self.sentence(item, q, mods.as_ref())?;
                    q = d.pre;
                    out.push(d.sentence);
                }
                out.reverse();
                Ok(Desugared {
                    sentence: Sentence::seq_all(out),
                    pre: q,
                })
            }
            SentenceKind::If {
                guard,
                then_branch,
                else_branch,
            } => {
                let t = self.sentence(then_branch, q.clone(), None)?;
                let e = self.sentence(else_branch, q.clone(), None)?;
                let s = Sentence::new(
                    SentenceKind::If {
                        guard: guard.clone(),
                        then_branch: Box::new(t.sentence),
                        else_branch: Box::new(e.sentence),
                    },
                    s.span,
                );
                self.pre(s, q)
            }
            SentenceKind::While {
                guard,
                invariants,
                variant,
                body,
            } => {
                let b = self.sentence(body, conj_clauses(invariants), None)?;
                let s = Sentence::new(
                    SentenceKind::While {
                        guard: guard.clone(),
                        invariants: invariants.clone(),
                        variant: variant.clone(),
                        body: Box::new(b.sentence),
                    },
                    s.span,
                );
                self.pre(s, q)
            }
            SentenceKind::For {
                index,
                lo,
                hi,
                body,
            } => {
                if mod_vars(body).contains(index) {
                    return Err(SugarError::IndexAssigned {
                        index: index.clone(),
                        span: s.span,
                    });
                }
                // the body followed by the increment must re-establish the invariant
                let invariants = for_invariants(index, lo, hi, &q);
                let step = Sentence::assign(index, Expr::add(Expr::var(index), Expr::int(1)));
                let after_body = self.calc.pre(&step, conj_clauses(&invariants))?;
                let b = self.sentence(body, after_body, None)?;
                let expanded = expand_for(index, lo, hi, b.sentence, &q, s.span)?;
                self.pre(expanded, q)
            }
            SentenceKind::Map { body, array, index } => {
                let b = self.sentence(body, Expr::tt(), None)?;
                let expanded = self.map(b.sentence, array, index, modified_before, s.span)?;
                self.pre(expanded, q)
            }
            _ => unreachable!("sugar-free sentence"),
        }
    }

    fn map(
        &mut self,
        body: Sentence,
        array: &str,
        index: &str,
        modified_before: Option<&BTreeSet<String>>,
        span: Span,
    ) -> Result<Sentence, SugarError> {
        check_map(&body, array, index, span)?;
        let pristine = self.params.iter().any(|p| p == array)
            && modified_before.is_some_and(|m| !m.contains(array));
        let (origin, snapshot) = if pristine {
            (Expr::var_at_pre(array), None)
        } else {
            let name = self.calc.fresh(&format!("{array}_init"), Ty::Arr);
            let snap = Sentence::local(&name, Expr::var(array)).with_span(span);
            (Expr::var(name), Some(snap))
        };
        let cell = self.calc.fresh(&format!("{array}_{index}"), Ty::Int);
        let abstracted = CellAbstraction {
            array,
            index,
            cell: &cell,
        }
        .sentence(&body)?;
        let i = Expr::var(index);
        let cell_v = Expr::var(&cell);
        let entry = Expr::and_all([
            Expr::le(Expr::int(0), i.clone()),
            Expr::lt(i.clone(), Expr::size(Expr::var(array))),
            Expr::eq(cell_v.clone(), Expr::access(origin.clone(), i.clone())),
        ]);
        let post = self.calc.post(&abstracted, entry)?;
        let post = close(&post, &local_vars(&abstracted), self.calc.env());
        let cell_post = subst_vars(
            &post,
            &[(cell.clone(), Expr::access(Expr::var(array), i))].into_iter().collect(),
        );
        let expanded = expand_map(body, array, index, &origin, &cell_post, span);
        Ok(match snapshot {
            Some(snap) => Sentence::seq(snap, expanded),
            None => expanded,
        })
    }
}

/// Expands every `for` and `map` in `proc`. New locals are added to `env`.
pub fn desugar_procedure(
    proc: &Procedure,
    env: &mut TypeEnv,
    contracts: &Contracts,
) -> Result<Procedure, SugarError> {
    if !proc.body.has_sugar() {
        return Ok(proc.clone());
    }
    let mut d = Desugarer {
        calc: Calculus::new(proc, env, contracts),
        params: &proc.params,
    };
    let top = BTreeSet::new();
    let out = d.sentence(&proc.body, proc.post_conj(), Some(&top))?;
    *env = d.calc.env().clone();
    let mut p = proc.clone();
    p.body = out.sentence;
    Ok(p)
}
