//! Property tests over randomly generated expressions and sentences.

use std::collections::BTreeMap;

use proptest::prelude::*;

use pest_core::interp::{eval_bounded, eval_expr, exec_sentence, Bounds, RunOptions, State, Value};
use pest_core::logic::{mod_vars, safe_expr, simplify, subst_var};
use pest_core::solver::{check_entailment, SolverConfig, Verdict};
use pest_core::syntax::{parse_expr, BinOp, Expr, Program, QuantKind, Sentence, SentenceKind, Span, UnOp};
use pest_core::types::{Ty, TypeEnv};

const INTS: [&str; 4] = ["x", "y", "i", "k"];
const ARRAYS: [&str; 2] = ["A", "B"];

fn env() -> TypeEnv {
    let mut env = TypeEnv::new();
    for v in INTS {
        env.insert(v, Ty::Int);
    }
    for a in ARRAYS {
        env.insert(a, Ty::Arr);
    }
    env
}

fn arr_expr() -> impl Strategy<Value = Expr> {
    prop::sample::select(ARRAYS.to_vec()).prop_map(Expr::var)
}

fn int_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0i64..4).prop_map(Expr::int),
        prop::sample::select(INTS.to_vec()).prop_map(Expr::var),
        arr_expr().prop_map(Expr::size),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        let ops = prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Mod]);
        prop_oneof![
            (ops, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            inner.clone().prop_map(|e| Expr::unary(UnOp::Neg, e)),
            (arr_expr(), inner.clone()).prop_map(|(a, i)| Expr::access(a, i)),
            (arr_expr(), inner.clone(), inner.clone(), inner)
                .prop_map(|(a, i, v, j)| Expr::access(Expr::update(a, i, v), j)),
        ]
    })
}

fn bool_expr() -> impl Strategy<Value = Expr> {
    let cmp = prop::sample::select(vec![BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne]);
    let leaf = prop_oneof![
        any::<bool>().prop_map(Expr::bool),
        (cmp, int_expr(), int_expr()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        let logic = prop::sample::select(vec![BinOp::And, BinOp::Or, BinOp::Implies]);
        let quant = prop::sample::select(vec![QuantKind::Forall, QuantKind::Exists]);
        prop_oneof![
            (logic, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            inner.clone().prop_map(Expr::not),
            (quant, int_expr(), int_expr(), inner).prop_map(|(q, lo, hi, b)| Expr::quant(q, "k", lo, hi, b)),
        ]
    })
}

fn state() -> impl Strategy<Value = State> {
    let ints = prop::collection::vec(-3i64..4, INTS.len());
    let arrays = prop::collection::vec(prop::collection::vec(-3i64..4, 0..4), ARRAYS.len());
    (ints, arrays).prop_map(|(ints, arrays)| {
        let mut st = State::new();
        for (n, v) in INTS.iter().zip(ints) {
            st.insert(n.to_string(), Value::int(v));
        }
        for (n, v) in ARRAYS.iter().zip(arrays) {
            st.insert(n.to_string(), Value::arr(&v));
        }
        st
    })
}

fn sentence() -> impl Strategy<Value = Sentence> {
    let assign = (prop::sample::select(vec!["x", "y", "i"]), int_expr()).prop_map(|(x, e)| Sentence::assign(x, e));
    let store = (prop::sample::select(ARRAYS.to_vec()), int_expr(), int_expr())
        .prop_map(|(a, i, v)| Sentence::assign(a, Expr::update(Expr::var(a), i, v)));
    let leaf = prop_oneof![Just(Sentence::skip()), assign, store];
    leaf.prop_recursive(3, 10, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Sentence::seq(a, b)),
            (bool_expr(), inner.clone(), inner).prop_map(|(g, t, e)| Sentence::new(
                SentenceKind::If {
                    guard: g,
                    then_branch: Box::new(t),
                    else_branch: Box::new(e),
                },
                Span::default()
            )),
        ]
    })
}

fn small_states(bounds: Bounds) -> Vec<State> {
    let mut out = vec![State::new()];
    let vars: Vec<(&str, Ty)> = INTS
        .iter()
        .map(|v| (*v, Ty::Int))
        .chain(ARRAYS.iter().map(|a| (*a, Ty::Arr)))
        .collect();
    for (name, ty) in vars {
        let mut next = Vec::new();
        for st in &out {
            for v in bounds.values(ty) {
                let mut s = st.clone();
                s.insert(name.to_string(), v);
                next.push(s);
            }
        }
        out = next;
    }
    out
}

fn truth(st: &State, e: &Expr) -> bool {
    matches!(eval_expr(st, e), Ok(Value::Bool(true)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn printed_expressions_parse_back(e in bool_expr()) {
        let text = e.to_string();
        let back = parse_expr(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e, "{}", text);
    }

    #[test]
    fn substitution_matches_state_update(e in bool_expr(), t in int_expr(), st in state()) {
        if let Ok(v) = eval_expr(&st, &t) {
            let mut updated = st.clone();
            updated.insert("x".into(), v);
            prop_assert_eq!(eval_expr(&st, &subst_var(&e, "x", &t)), eval_expr(&updated, &e));
        }
    }

    #[test]
    fn safe_states_evaluate(e in bool_expr(), st in state()) {
        if truth(&st, &safe_expr(&e)) {
            prop_assert!(eval_expr(&st, &e).is_ok(), "{} undefined in {:?}", e, st);
        }
    }

    #[test]
    fn simplify_keeps_values(e in bool_expr(), st in state()) {
        prop_assert_eq!(eval_expr(&st, &simplify(&e)), eval_expr(&st, &e));
    }

    #[test]
    fn unmodified_variables_keep_their_values(s in sentence(), st in state()) {
        let modified = mod_vars(&s);
        let prog = Program { procedures: Vec::new() };
        let mut after = st.clone();
        let end = match exec_sentence(&prog, &s, &mut after, RunOptions::default()) {
            Ok(()) => after,
            Err(stuck) => stuck.state,
        };
        for (name, v) in &st {
            if !modified.contains(name) {
                prop_assert_eq!(end.get(name), Some(v), "{} changed", name);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn oracle_verdicts_match_enumeration(h in bool_expr(), g in bool_expr()) {
        let bounds = Bounds { int: 1, len: 2 };
        let mut cfg = SolverConfig::oracle();
        cfg.bounds = bounds;
        let verdict = check_entailment(&h, &g, &env(), &cfg).unwrap();
        match &verdict {
            Verdict::Invalid { counterexample } => {
                let wide = Bounds { int: 4, len: 3 };
                prop_assert!(matches!(eval_bounded(counterexample, &h, wide), Ok(Value::Bool(true))));
                prop_assert!(!matches!(eval_bounded(counterexample, &g, wide), Ok(Value::Bool(true))));
            }
            v if v.is_pass() => {
                for st in small_states(bounds) {
                    prop_assert!(!(truth(&st, &h) && !truth(&st, &g)), "missed counterexample {:?}", st);
                }
            }
            Verdict::Unknown { .. } => {}
            _ => unreachable!(),
        }
    }
}

#[test]
fn counterexamples_fill_every_free_variable() {
    let h = parse_expr("x > 0 && |A| > 1").unwrap();
    let g = parse_expr("A[x] = y").unwrap();
    let v = check_entailment(&h, &g, &env(), &SolverConfig::oracle()).unwrap();
    let cex = v.counterexample().expect("not valid");
    let names: BTreeMap<_, _> = cex.iter().map(|(k, v)| (k.as_str(), v.ty())).collect();
    assert_eq!(names.get("A"), Some(&Ty::Arr));
    assert_eq!(names.get("x"), Some(&Ty::Int));
    assert_eq!(names.get("y"), Some(&Ty::Int));
}
