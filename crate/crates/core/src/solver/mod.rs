//! Entailment checking: verification conditions, verdicts and the two
//! backends (bounded enumeration and an external SMT solver).

pub mod oracle;
pub mod smt;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::{debug, warn};
use serde::Serialize;
use thiserror::Error;

use crate::interp::{Bounds, State};
use crate::syntax::{Expr, Span};
use crate::types::TypeEnv;

/// One entailment `hypothesis ⊢ goal` discharging a premise of a rule.
#[derive(Clone, Debug)]
pub struct Vc {
    pub id: String,
    pub procedure: String,
    pub rule: String,
    pub span: Span,
    pub hypothesis: Expr,
    pub goal: Expr,
    /// Types of every free variable of hypothesis and goal.
    pub env: TypeEnv,
    /// Obligation of a correct-by-construction annotation; may be skipped.
    pub trusted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Valid,
    Invalid { counterexample: State },
    Unknown { reason: String },
    BoundedValid { int_bound: u32, len_bound: u32 },
}

impl Verdict {
    /// Valid or bounded-valid.
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Valid | Verdict::BoundedValid { .. })
    }

    pub fn is_invalid(&self) -> bool {
        matches!(self, Verdict::Invalid { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Valid => "valid",
            Verdict::Invalid { .. } => "invalid",
            Verdict::Unknown { .. } => "unknown",
            Verdict::BoundedValid { .. } => "bounded-valid",
        }
    }

    pub fn counterexample(&self) -> Option<&State> {
        match self {
            Verdict::Invalid { counterexample } => Some(counterexample),
            _ => None,
        }
    }

    fn skipped() -> Self {
        Verdict::Unknown {
            reason: "skipped".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Oracle,
    Smt,
    Both,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(Backend::Oracle),
            "smt" => Ok(Backend::Smt),
            "both" => Ok(Backend::Both),
            _ => Err(format!("unknown backend `{s}` (expected oracle, smt or both)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub backend: Backend,
    pub bounds: Bounds,
    pub smt_command: String,
    pub timeout_ms: u64,
    pub parallel_workers: usize,
    pub fail_fast: bool,
    /// Oracle search steps before answering unknown.
    pub oracle_budget: u64,
}

pub const DEFAULT_SMT_COMMAND: &str = "z3 -in";

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            backend: Backend::Oracle,
            bounds: Bounds::default(),
            smt_command: std::env::var("PEST_SMT_CMD").unwrap_or_else(|_| DEFAULT_SMT_COMMAND.into()),
            timeout_ms: 10_000,
            parallel_workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            fail_fast: false,
            oracle_budget: oracle::DEFAULT_BUDGET,
        }
    }
}

impl SolverConfig {
    pub fn oracle() -> Self {
        SolverConfig::default()
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("solver unavailable: cannot run `{command}`: {reason}")]
    Unavailable { command: String, reason: String },
}

/// Combines the answers of both backends; the first definitive answer wins,
/// except that a proof contradicting a counterexample yields unknown.
fn combine(oracle: Verdict, smt: Verdict) -> Verdict {
    match (oracle, smt) {
        (Verdict::Invalid { counterexample }, Verdict::Valid) => {
            warn!("backends disagree: oracle found counterexample {counterexample:?}, smt proved valid");
            Verdict::Unknown {
                reason: "backends disagree".into(),
            }
        }
        (o @ Verdict::Invalid { .. }, _) => o,
        (_, s @ Verdict::Invalid { .. }) => s,
        (_, Verdict::Valid) => Verdict::Valid,
        (o, Verdict::Unknown { .. }) => o,
        (o, Verdict::BoundedValid { .. }) => o,
    }
}

pub fn check_entailment(
    h: &Expr,
    g: &Expr,
    env: &TypeEnv,
    cfg: &SolverConfig,
) -> Result<Verdict, SolverError> {
    let verdict = match cfg.backend {
        Backend::Oracle => oracle::check(h, g, env, cfg.bounds, cfg.oracle_budget),
        Backend::Smt => smt::check(h, g, env, cfg)?,
        Backend::Both => {
            let o = oracle::check(h, g, env, cfg.bounds, cfg.oracle_budget);
            let s = smt::check(h, g, env, cfg)?;
            combine(o, s)
        }
    };
    Ok(verdict)
}

pub fn check_vc(vc: &Vc, cfg: &SolverConfig) -> Result<Verdict, SolverError> {
    let v = check_entailment(&vc.hypothesis, &vc.goal, &vc.env, cfg)?;
    debug!("{} [{}]: {}", vc.id, vc.rule, v.label());
    Ok(v)
}

/// Checks every VC, with up to `parallel_workers` in flight. With
/// `fail_fast`, VCs of a procedure following its first invalid one are
/// reported as skipped; which ones is independent of scheduling.
pub fn dispatch(vcs: &[Vc], cfg: &SolverConfig) -> Result<BTreeMap<String, Verdict>, SolverError> {
    let results: Vec<Mutex<Option<Verdict>>> = vcs.iter().map(|_| Mutex::new(None)).collect();
    let error: Mutex<Option<SolverError>> = Mutex::new(None);
    let next = AtomicUsize::new(0);
    let failed_at: Mutex<BTreeMap<&str, usize>> = Mutex::new(BTreeMap::new());
    let workers = cfg.parallel_workers.clamp(1, vcs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= vcs.len() || error.lock().unwrap().is_some() {
                    break;
                }
                let vc = &vcs[i];
                if cfg.fail_fast {
                    let failed = failed_at.lock().unwrap();
                    if failed.get(vc.procedure.as_str()).is_some_and(|&f| f < i) {
                        *results[i].lock().unwrap() = Some(Verdict::skipped());
                        continue;
                    }
                }
                match check_vc(vc, cfg) {
                    Ok(v) => {
                        if v.is_invalid() {
                            let mut failed = failed_at.lock().unwrap();
                            let e = failed.entry(vc.procedure.as_str()).or_insert(i);
                            *e = (*e).min(i);
                        }
                        *results[i].lock().unwrap() = Some(v);
                    }
                    Err(e) => {
                        error.lock().unwrap().get_or_insert(e);
                        break;
                    }
                }
            });
        }
    });

    if let Some(e) = error.into_inner().unwrap() {
        return Err(e);
    }
    let mut out = BTreeMap::new();
    let mut first_invalid: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, (vc, r)) in vcs.iter().zip(results).enumerate() {
        let mut v = r.into_inner().unwrap().unwrap_or_else(Verdict::skipped);
        if cfg.fail_fast {
            if first_invalid.contains_key(vc.procedure.as_str()) {
                v = Verdict::skipped();
            } else if v.is_invalid() {
                first_invalid.insert(&vc.procedure, i);
            }
        }
        out.insert(vc.id.clone(), v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_expr;
    use crate::types::Ty;

    fn vc(id: &str, procedure: &str, h: &str, g: &str) -> Vc {
        Vc {
            id: id.into(),
            procedure: procedure.into(),
            rule: "TEST".into(),
            span: Span::default(),
            hypothesis: parse_expr(h).unwrap(),
            goal: parse_expr(g).unwrap(),
            env: [("x".to_string(), Ty::Int)].into_iter().collect(),
            trusted: false,
        }
    }

    #[test]
    fn dispatch_keys_by_id() {
        let vcs = vec![vc("p.000", "p", "true", "x = x"), vc("p.001", "p", "x > 0", "x >= 1")];
        let out = dispatch(&vcs, &SolverConfig::oracle()).unwrap();
        assert!(out.values().all(Verdict::is_pass));
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn fail_fast_skips_rest_of_procedure() {
        let vcs = vec![
            vc("p.000", "p", "true", "x > 0"),
            vc("p.001", "p", "true", "x = x"),
            vc("q.000", "q", "true", "x = x"),
        ];
        let cfg = SolverConfig {
            fail_fast: true,
            ..SolverConfig::oracle()
        };
        let out = dispatch(&vcs, &cfg).unwrap();
        assert!(out["p.000"].is_invalid());
        assert_eq!(out["p.001"], Verdict::skipped());
        assert!(out["q.000"].is_pass());
    }

    #[test]
    fn disagreement_is_unknown() {
        let cex = Verdict::Invalid {
            counterexample: State::new(),
        };
        assert!(matches!(combine(cex.clone(), Verdict::Valid), Verdict::Unknown { .. }));
        assert_eq!(combine(Verdict::Valid, Verdict::Unknown { reason: "t".into() }), Verdict::Valid);
        assert!(combine(Verdict::Valid, cex).is_invalid());
    }
}
