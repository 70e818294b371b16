//! Static verification: every procedure is turned into VCs by the
//! postcondition calculus and the VCs are discharged by the solver.

use std::collections::BTreeMap;

use log::info;
use serde::Serialize;

use crate::infer::{contracts_of, Calculus, Contracts, InferError};
use crate::solver::{dispatch, SolverConfig, SolverError, Vc, Verdict};
use crate::syntax::{Expr, Origin, Procedure, Program};
use crate::types::TypeEnv;

/// VCs of `proc` and its exit predicate (locals closed). The last VCs are
/// one `POST` obligation per postcondition clause.
pub fn vcs_for_procedure(
    proc: &Procedure,
    env: &TypeEnv,
    contracts: &Contracts,
) -> Result<(Vec<Vc>, Expr), InferError> {
    let mut calc = Calculus::new(proc, env, contracts);
    let exit = calc.procedure_exit(proc)?;
    for c in &proc.post {
        let span = if c.expr.span.is_dummy() { proc.span } else { c.expr.span };
        calc.emit("POST", span, exit.clone(), c.expr.clone(), c.origin == Origin::Inferred);
    }
    Ok((calc.take_vcs(), exit))
}

#[derive(Clone, Debug)]
pub struct VcOutcome {
    pub vc: Vc,
    /// `None` when the VC was trusted and not checked.
    pub verdict: Option<Verdict>,
}

impl VcOutcome {
    pub fn passed(&self) -> bool {
        self.verdict.as_ref().is_none_or(Verdict::is_pass)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug)]
pub struct ProcedureReport {
    pub procedure: String,
    pub status: Status,
    pub vcs: Vec<VcOutcome>,
    /// Runtime checks of this procedure's annotations may be removed.
    pub erasable: bool,
    /// Some verdict holds only within the oracle's bounds.
    pub bounded: bool,
}

impl ProcedureReport {
    pub fn failing(&self) -> impl Iterator<Item = &VcOutcome> {
        self.vcs.iter().filter(|o| !o.passed())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub procedures: Vec<ProcedureReport>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.procedures.iter().all(|p| p.status == Status::Pass)
    }

    pub fn procedure(&self, name: &str) -> Option<&ProcedureReport> {
        self.procedures.iter().find(|p| p.procedure == name)
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &VcOutcome> {
        self.procedures.iter().flat_map(|p| p.vcs.iter())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Skip VCs of correct-by-construction annotations.
    pub skip_trusted: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { skip_trusted: true }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Infer(#[from] InferError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// All VCs of a sugar-free, fully annotated program, in definition order.
pub fn program_vcs(prog: &Program, envs: &BTreeMap<String, TypeEnv>) -> Result<Vec<Vc>, InferError> {
    let contracts = contracts_of(prog);
    let mut all = Vec::new();
    for p in &prog.procedures {
        let (vcs, _) = vcs_for_procedure(p, &envs[&p.name], &contracts)?;
        all.extend(vcs);
    }
    Ok(all)
}

/// Verifies each procedure of a sugar-free, fully annotated program,
/// assuming the contracts of the procedures it calls.
pub fn verify_program(
    prog: &Program,
    envs: &BTreeMap<String, TypeEnv>,
    cfg: &SolverConfig,
    opts: VerifyOptions,
) -> Result<Report, VerifyError> {
    let vcs = program_vcs(prog, envs)?;
    let to_check: Vec<Vc> = vcs
        .iter()
        .filter(|vc| !(opts.skip_trusted && vc.trusted))
        .cloned()
        .collect();
    let mut verdicts = dispatch(&to_check, cfg)?;
    let mut report = Report::default();
    for p in &prog.procedures {
        let outcomes: Vec<VcOutcome> = vcs
            .iter()
            .filter(|vc| vc.procedure == p.name)
            .map(|vc| VcOutcome {
                vc: vc.clone(),
                verdict: verdicts.remove(&vc.id),
            })
            .collect();
        let pass = outcomes.iter().all(VcOutcome::passed);
        let bounded = outcomes
            .iter()
            .any(|o| matches!(o.verdict, Some(Verdict::BoundedValid { .. })));
        info!(
            "{}: {} ({} VCs)",
            p.name,
            if pass { "pass" } else { "fail" },
            outcomes.len()
        );
        report.procedures.push(ProcedureReport {
            procedure: p.name.clone(),
            status: if pass { Status::Pass } else { Status::Fail },
            vcs: outcomes,
            erasable: pass,
            bounded,
        });
    }
    Ok(report)
}
