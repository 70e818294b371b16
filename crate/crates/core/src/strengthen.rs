//! Annotation strengthening: facts that hold before a loop about variables
//! the loop does not modify are added to its invariant, and the exit
//! predicate of the body is added to the postcondition.

use log::debug;

use crate::infer::{Calculus, Contracts, InferError};
use crate::logic::{close, mod_vars};
use crate::syntax::{conj_clauses, Clause, Expr, Origin, Procedure, Sentence, SentenceKind};
use crate::types::TypeEnv;

/// Rewrites `s`, which runs from a state satisfying `p`.
pub fn strengthen_sentence(calc: &mut Calculus, s: &Sentence, p: Expr) -> Result<Sentence, InferError> {
    let kind = match &s.kind {
        SentenceKind::Seq(a, b) => {
            let a2 = strengthen_sentence(calc, a, p.clone())?;
            let mid = calc.post(&a2, p)?;
            let b2 = strengthen_sentence(calc, b, mid)?;
            return Ok(Sentence::new(SentenceKind::Seq(Box::new(a2), Box::new(b2)), s.span));
        }
        SentenceKind::If {
            guard,
            then_branch,
            else_branch,
        } => SentenceKind::If {
            guard: guard.clone(),
            then_branch: Box::new(strengthen_sentence(
                calc,
                then_branch,
                Expr::and(p.clone(), guard.clone()),
            )?),
            else_branch: Box::new(strengthen_sentence(
                calc,
                else_branch,
                Expr::and(p, Expr::not(guard.clone())),
            )?),
        },
        SentenceKind::While {
            guard,
            invariants,
            variant,
            body,
        } => {
            let frame = close(&p, &mod_vars(body), calc.env());
            let mut invariants = invariants.clone();
            if !frame.is_true() {
                invariants.push(Clause::new(frame, Origin::Inferred));
            }
            let entry = Expr::and(conj_clauses(&invariants), guard.clone());
            SentenceKind::While {
                guard: guard.clone(),
                body: Box::new(strengthen_sentence(calc, body, entry)?),
                invariants,
                variant: variant.clone(),
            }
        }
        _ => return Ok(s.clone()),
    };
    Ok(Sentence::new(kind, s.span))
}

/// Strengthens every loop of `proc` starting from its frozen precondition and
/// appends the body's exit predicate as an inferred postcondition clause.
/// Side conditions are not checked here; verification emits them.
pub fn strengthen_procedure(
    proc: &Procedure,
    env: &mut TypeEnv,
    contracts: &Contracts,
) -> Result<Procedure, InferError> {
    let mut calc = Calculus::new(proc, env, contracts);
    let p0 = Expr::and(proc.pre_conj(), proc.frozen_params());
    let body = strengthen_sentence(&mut calc, &proc.body, p0)?;
    let mut out = proc.clone();
    out.body = body;
    let exit = calc.procedure_exit(&out)?;
    debug!("{}: exit predicate {exit}", proc.name);
    out.post.push(Clause::new(exit, Origin::Inferred));
    *env = calc.env().clone();
    Ok(out)
}
