//! SMT backend against the interpreter. Skipped when no solver is installed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pest_core::interp::{div_trunc, eval_expr, rem_trunc, Value};
use pest_core::solver::{check_entailment, Backend, SolverConfig, SolverError, Verdict};
use pest_core::syntax::parse_expr;
use pest_core::types::{Ty, TypeEnv};

fn smt() -> Option<SolverConfig> {
    let cfg = SolverConfig::default().with_backend(Backend::Smt);
    let t = parse_expr("true").unwrap();
    match check_entailment(&t, &t, &TypeEnv::new(), &cfg) {
        Err(SolverError::Unavailable { .. }) => {
            eprintln!("no SMT solver; skipping");
            None
        }
        _ => Some(cfg),
    }
}

fn env(pairs: &[(&str, Ty)]) -> TypeEnv {
    pairs.iter().map(|(n, t)| (n.to_string(), *t)).collect()
}

#[test]
fn division_matches_interpreter() {
    let Some(cfg) = smt() else { return };
    let e = env(&[("a", Ty::Int), ("b", Ty::Int)]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..16 {
        let a: i64 = rng.gen_range(-20..=20);
        let b: i64 = loop {
            let b = rng.gen_range(-6..=6);
            if b != 0 {
                break b;
            }
        };
        let q = div_trunc(&a.into(), &b.into()).unwrap();
        let r = rem_trunc(&a.into(), &b.into()).unwrap();
        let h = parse_expr(&format!("a = {a} && b = {b}")).unwrap();
        let g = parse_expr(&format!("a / b = {q} && a % b = {r}")).unwrap();
        assert_eq!(check_entailment(&h, &g, &e, &cfg).unwrap(), Verdict::Valid, "{a} / {b}");
    }
}

#[test]
fn counterexamples_replay() {
    let Some(cfg) = smt() else { return };
    let e = env(&[("A", Ty::Arr), ("i", Ty::Int), ("y", Ty::Int)]);
    for (h, g) in [
        ("0 <= i && i < |A|", "A[i] / y >= 0"),
        ("|A| = 2", "forall-k / 0 <= k < |A| : A[k] > y"),
        ("i > 3", "i % 2 = 0"),
    ] {
        let (h, g) = (parse_expr(h).unwrap(), parse_expr(g).unwrap());
        let v = check_entailment(&h, &g, &e, &cfg).unwrap();
        let cex = v.counterexample().unwrap_or_else(|| panic!("{g}: {v:?}"));
        assert_eq!(eval_expr(cex, &h), Ok(Value::Bool(true)));
        assert_ne!(eval_expr(cex, &g), Ok(Value::Bool(true)));
    }
}

#[test]
fn unbounded_facts_are_valid() {
    let Some(cfg) = smt() else { return };
    let e = env(&[("A", Ty::Arr), ("m", Ty::Int), ("x", Ty::Int)]);
    // valid for every length, not just the oracle's bound
    let h = parse_expr("(forall-k / 0 <= k < |A| : m >= A[k]) && 0 <= x && x < |A|").unwrap();
    let g = parse_expr("m >= A[x]").unwrap();
    assert_eq!(check_entailment(&h, &g, &e, &cfg).unwrap(), Verdict::Valid);
}

#[test]
fn both_backends_take_the_first_definite_answer() {
    let Some(mut cfg) = smt() else { return };
    cfg.backend = Backend::Both;
    let e = env(&[("x", Ty::Int)]);
    let v = check_entailment(&parse_expr("x > 100").unwrap(), &parse_expr("x > 99").unwrap(), &e, &cfg).unwrap();
    assert!(v.is_pass(), "{v:?}");
    let v = check_entailment(&parse_expr("x > 0").unwrap(), &parse_expr("x > 1").unwrap(), &e, &cfg).unwrap();
    assert!(v.is_invalid(), "{v:?}");
}

#[test]
fn missing_solver_is_reported() {
    let mut cfg = SolverConfig::default().with_backend(Backend::Smt);
    cfg.smt_command = "/nonexistent/solver -in".into();
    let t = parse_expr("true").unwrap();
    assert!(matches!(
        check_entailment(&t, &t, &TypeEnv::new(), &cfg),
        Err(SolverError::Unavailable { .. })
    ));
}
