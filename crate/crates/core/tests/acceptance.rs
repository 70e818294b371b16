//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any failed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pest_core::infer::{contracts_of, infer_contract};
use pest_core::interp::{eval_bounded, eval_expr, run_procedure, Bounds, Mode, RunOptions, State, StuckKind, Value};
use pest_core::logic::{free_vars, safe_expr, subst_vars};
use pest_core::pipeline::{check_source, prepare_source, PipelineError, PipelineOptions, Prepared};
use pest_core::solver::{check_entailment, check_vc, Backend, SolverConfig, SolverError, Verdict};
use pest_core::sugar::SugarError;
use pest_core::syntax::{parse_expr, Clause, Expr, Origin, ParseErrorKind, Procedure, Program};
use pest_core::types::{type_expr, Ty, TypeEnv};
use pest_core::verify::{program_vcs, verify_program, Report, VerifyOptions};

const BOUNDS: Bounds = Bounds { int: 3, len: 3 };

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn source(name: &str) -> String {
    let path = corpus().join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn corpus_files() -> Vec<String> {
    let mut out: Vec<String> = fs::read_dir(corpus())
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.ends_with(".pest").then_some(name)
        })
        .collect();
    out.sort();
    out
}

fn oracle() -> SolverConfig {
    let mut cfg = SolverConfig::oracle();
    cfg.bounds = BOUNDS;
    cfg
}

fn prepared(name: &str) -> Result<Prepared, String> {
    prepare_source(&source(name), PipelineOptions::default()).map_err(|e| format!("{name}: {e}"))
}

fn verify(p: &Prepared, cfg: &SolverConfig, opts: VerifyOptions) -> Result<Report, String> {
    verify_program(&p.program, &p.envs, cfg, opts).map_err(|e| e.to_string())
}

fn entails(h: &Expr, g: &Expr, env: &TypeEnv) -> bool {
    check_entailment(h, g, env, &oracle()).unwrap().is_pass()
}

/// `pre` rewritten to talk about entry values.
fn at_entry_values(pre: &Expr, params: &[String]) -> Expr {
    let map = params.iter().map(|x| (x.clone(), Expr::var_at_pre(x))).collect();
    subst_vars(pre, &map)
}

/// Two contracts of procedures with the same parameters agree: the
/// preconditions are equivalent, and so are the postconditions for every
/// entry state the precondition admits.
fn same_contract(a: (&Expr, &Expr), b: (&Expr, &Expr), params: &[String], env: &TypeEnv) -> Result<(), String> {
    let (pre_a, post_a) = a;
    let (pre_b, post_b) = b;
    if !entails(pre_a, pre_b, env) || !entails(pre_b, pre_a, env) {
        return Err(format!("preconditions differ: `{pre_a}` vs `{pre_b}`"));
    }
    let entry = at_entry_values(pre_a, params);
    let ha = Expr::and(entry.clone(), post_a.clone());
    let hb = Expr::and(entry, post_b.clone());
    if !entails(&ha, post_b, env) {
        return Err(format!("`{post_a}` does not entail `{post_b}`"));
    }
    if !entails(&hb, post_a, env) {
        return Err(format!("`{post_b}` does not entail `{post_a}`"));
    }
    Ok(())
}

fn merged_env(a: &TypeEnv, b: &TypeEnv) -> TypeEnv {
    let mut env = a.clone();
    env.extend(b);
    env
}

fn failures(r: &Report) -> Vec<String> {
    r.procedures
        .iter()
        .flat_map(|p| p.failing())
        .map(|o| format!("{} ({})", o.vc.id, o.verdict.as_ref().map_or("trusted", Verdict::label)))
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for name in corpus_files() {
        let p = prepared(&name)?;
        let r = verify(&p, &oracle(), VerifyOptions::default())?;
        let bad = failures(&r);
        if !bad.is_empty() {
            return Err(format!("{name}: {}", bad.join(", ")));
        }
        checked += r.outcomes().filter(|o| o.verdict.is_some()).count();
    }
    let took = start.elapsed();
    if took > Duration::from_secs(60) {
        return Err(format!("took {took:?}"));
    }
    Ok(format!("{} files, {checked} VCs checked in {:.2}s", corpus_files().len(), took.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let easy = prepared("easyArrayMax.pest")?;
    let r = verify(&easy, &oracle(), VerifyOptions::default())?;
    if !r.passed() {
        return Err(format!("easyArrayMax fails: {}", failures(&r).join(", ")));
    }
    let reference = check_source(&source("arrayMax.pest")).map_err(|e| e.to_string())?;
    let declared = reference.program.procedure("arrayMax").unwrap();
    let ours = easy.program.procedure("easyArrayMax").unwrap();
    let env = merged_env(&easy.envs["easyArrayMax"], reference.env("arrayMax"));
    same_contract(
        (&ours.pre_conj(), &ours.post_conj()),
        (&declared.pre_conj(), &declared.post_conj()),
        &ours.params,
        &env,
    )?;
    Ok("verified; contract agrees with arrayMax's declared contract".into())
}

fn strip_contract(p: &Procedure) -> Procedure {
    let mut bare = p.clone();
    bare.pre.clear();
    bare.post.clear();
    bare
}

fn criterion_3() -> Outcome {
    let mut compared = 0;
    for file in ["max.pest", "arrayMax.pest"] {
        let typed = check_source(&source(file)).map_err(|e| e.to_string())?;
        let mut done: Vec<Procedure> = Vec::new();
        for proc in &typed.program.procedures {
            let contracts = contracts_of(&Program {
                procedures: done.clone(),
            });
            let mut env = typed.env(&proc.name).clone();
            let mut bare = strip_contract(proc);
            let (pre, post) = infer_contract(&bare, &mut env, &contracts, &oracle())
                .map_err(|e| format!("{}: {e}", proc.name))?;
            same_contract((&pre, &post), (&proc.pre_conj(), &proc.post_conj()), &proc.params, &env)
                .map_err(|e| format!("{file}/{}: {e}", proc.name))?;
            bare.pre = vec![Clause::new(pre, Origin::Inferred)];
            bare.post = vec![Clause::new(post, Origin::Inferred)];
            done.push(bare);
            compared += 1;
        }
    }
    Ok(format!("{compared} inferred contracts agree with the declared ones"))
}

fn criterion_4() -> Outcome {
    let map = prepared("arrayIncMap.pest")?;
    let plain = prepared("arrayInc.pest")?;
    for (name, p) in [("map", &map), ("while", &plain)] {
        let r = verify(p, &oracle(), VerifyOptions::default())?;
        if !r.passed() {
            return Err(format!("{name} version fails: {}", failures(&r).join(", ")));
        }
    }
    let a = map.program.procedure("arrayInc").unwrap();
    let b = plain.program.procedure("arrayInc").unwrap();
    let env = merged_env(&map.envs["arrayInc"], &plain.envs["arrayInc"]);
    same_contract((&a.pre_conj(), &a.post_conj()), (&b.pre_conj(), &b.post_conj()), &a.params, &env)?;

    let audit = verify(&map, &oracle(), VerifyOptions { skip_trusted: false })?;
    let generated: Vec<_> = audit
        .outcomes()
        .filter(|o| o.vc.trusted && o.vc.rule.starts_with("S-WHILE/inv"))
        .collect();
    if generated.is_empty() {
        return Err("no correct-by-construction VCs were generated".into());
    }
    if let Some(o) = generated.iter().find(|o| !o.passed()) {
        return Err(format!("{} is {}", o.vc.id, o.verdict.as_ref().unwrap().label()));
    }
    let mut detail = format!("{} by-construction VCs hold at B=3, L=3", generated.len());
    if let Some(smt) = smt_config() {
        for o in &generated {
            let v = check_vc(&o.vc, &smt).map_err(|e| e.to_string())?;
            if v != Verdict::Valid {
                return Err(format!("{} is {} under SMT", o.vc.id, v.label()));
            }
        }
        detail.push_str(" and are valid under SMT");
    }
    Ok(format!("both versions verify, contracts agree, {detail}"))
}

fn random_value(rng: &mut ChaCha8Rng, ty: Ty, len: Option<usize>) -> Value {
    match ty {
        Ty::Int => Value::int(rng.gen_range(-6..=6)),
        Ty::Bool => Value::Bool(rng.gen()),
        Ty::Arr => {
            let n = len.unwrap_or_else(|| rng.gen_range(0..=5));
            let xs: Vec<i64> = (0..n).map(|_| rng.gen_range(-6..=6)).collect();
            Value::arr(&xs)
        }
    }
}

/// Random parameter values satisfying the precondition, by rejection.
fn random_inputs(
    rng: &mut ChaCha8Rng,
    proc: &Procedure,
    env: &TypeEnv,
    pre: &Expr,
) -> Option<BTreeMap<String, Value>> {
    let witness_bounds = Bounds { int: 6, len: 5 };
    for _ in 0..100_000 {
        // Arrays share a length half of the time so that length-relating
        // preconditions are reachable.
        let shared = rng.gen_bool(0.5).then(|| rng.gen_range(0..=5));
        let args: BTreeMap<String, Value> = proc
            .params
            .iter()
            .map(|p| (p.clone(), random_value(rng, env.get(p).unwrap(), shared)))
            .collect();
        let mut st: State = args.clone();
        for (k, v) in &args {
            st.insert(format!("{k}@pre"), v.clone());
        }
        if matches!(eval_bounded(&st, pre, witness_bounds), Ok(Value::Bool(true))) {
            return Some(args);
        }
    }
    None
}

fn criterion_5() -> Outcome {
    const TRIALS: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut procedures = 0;
    for name in corpus_files() {
        let p = prepared(&name)?;
        let report = verify(&p, &oracle(), VerifyOptions::default())?;
        for proc in &p.program.procedures {
            if !report.procedure(&proc.name).is_some_and(|r| r.erasable) {
                continue;
            }
            procedures += 1;
            let env = &p.envs[&proc.name];
            let pre = proc.pre_conj();
            for trial in 0..TRIALS {
                let args = random_inputs(&mut rng, proc, env, &pre)
                    .ok_or_else(|| format!("{}: no input satisfies the precondition", proc.name))?;
                let checked = RunOptions::default();
                let erased = RunOptions {
                    mode: Mode::Erased,
                    ..checked
                };
                let a = run_procedure(&p.program, &proc.name, &args, checked)
                    .map_err(|e| format!("{} trial {trial}: {e}", proc.name))?;
                let b = run_procedure(&p.program, &proc.name, &args, erased)
                    .map_err(|e| format!("{} trial {trial} (erased): {e}", proc.name))?;
                if a != b {
                    return Err(format!("{} trial {trial}: checked and erased runs differ", proc.name));
                }
            }
        }
    }
    Ok(format!("{procedures} procedures x {TRIALS} runs, no failures, erased runs identical"))
}

enum Expect {
    Invalid(&'static str),
    Parse(ParseErrorKind),
    Sugar(fn(&SugarError) -> bool),
}

/// Replays the counterexample of a failing VC: the interpreter's own
/// evaluator must agree that the hypothesis holds and the goal does not.
fn replay_state(hyp: &Expr, goal: &Expr, cex: &State) -> Result<(), String> {
    let bounds = Bounds { int: 4, len: 3 };
    match eval_bounded(cex, hyp, bounds) {
        Ok(Value::Bool(true)) => {}
        other => return Err(format!("hypothesis does not hold at the counterexample ({other:?})")),
    }
    if matches!(eval_bounded(cex, goal, bounds), Ok(Value::Bool(true))) {
        return Err("goal holds at the counterexample".into());
    }
    Ok(())
}

/// Runs the procedure from the counterexample's entry values and expects
/// it to get stuck with `kind`.
fn replay_run(p: &Prepared, procedure: &str, cex: &State, kind: StuckKind) -> Result<(), String> {
    let proc = p.program.procedure(procedure).unwrap();
    let env = &p.envs[procedure];
    let args: BTreeMap<String, Value> = proc
        .params
        .iter()
        .map(|x| {
            let v = cex
                .get(&format!("{x}@pre"))
                .or_else(|| cex.get(x))
                .cloned()
                .unwrap_or_else(|| match env.get(x).unwrap() {
                    Ty::Arr => Value::arr(&[]),
                    Ty::Bool => Value::Bool(false),
                    Ty::Int => Value::int(0),
                });
            (x.clone(), v)
        })
        .collect();
    match run_procedure(&p.program, procedure, &args, RunOptions::default()) {
        Err(stuck) if stuck.kind == kind => Ok(()),
        Err(stuck) => Err(format!("run got stuck with {} instead of {kind}", stuck.kind)),
        Ok(_) => Err("run from the counterexample succeeded".into()),
    }
}

fn criterion_6() -> Outcome {
    let cases: [(&str, Expect, Option<StuckKind>); 10] = [
        ("01_weakened_invariant.pest", Expect::Invalid("POST"), None),
        (
            "02_constant_variant.pest",
            Expect::Invalid("S-WHILE/variant-decreases"),
            Some(StuckKind::VariantNotDecreased),
        ),
        (
            "03_missing_guard.pest",
            Expect::Invalid("S-ASSIGN/safe"),
            Some(StuckKind::UndefinedExpression),
        ),
        (
            "04_out_of_bounds.pest",
            Expect::Invalid("S-ASSIGN/safe"),
            Some(StuckKind::UndefinedExpression),
        ),
        ("05_aliased_call.pest", Expect::Parse(ParseErrorKind::AliasedCall), None),
        ("06_recursive_call.pest", Expect::Parse(ParseErrorKind::RecursiveCall), None),
        (
            "07_map_neighbour.pest",
            Expect::Sugar(|e| matches!(e, SugarError::NonIndexedAccess { .. })),
            None,
        ),
        (
            "08_for_writes_index.pest",
            Expect::Sugar(|e| matches!(e, SugarError::IndexAssigned { .. })),
            None,
        ),
        ("09_wrong_post.pest", Expect::Invalid("POST"), None),
        ("10_unguarded_division.pest", Expect::Invalid("S-ASSIGN/safe"), None),
    ];
    let mut replayed = 0;
    for (n, (file, expect, stuck)) in cases.iter().enumerate() {
        let src = source(&format!("mutants/{file}"));
        let result = prepare_source(&src, PipelineOptions::default());
        match (expect, result) {
            (Expect::Parse(kind), Err(PipelineError::Parse(e))) if e.kind == *kind => {}
            (Expect::Sugar(pred), Err(PipelineError::Sugar(e))) if pred(&e) => {}
            (Expect::Invalid(rule), Ok(p)) => {
                let r = verify(&p, &oracle(), VerifyOptions::default())?;
                let bad = r
                    .outcomes()
                    .find(|o| o.verdict.as_ref().is_some_and(Verdict::is_invalid))
                    .ok_or_else(|| format!("{file}: accepted"))?;
                if bad.vc.rule != *rule {
                    return Err(format!("{file}: first invalid VC is {}, expected {rule}", bad.vc.id));
                }
                if n < 4 {
                    let cex = bad.verdict.as_ref().unwrap().counterexample().unwrap();
                    replay_state(&bad.vc.hypothesis, &bad.vc.goal, cex).map_err(|e| format!("{file}: {e}"))?;
                    if let Some(kind) = stuck {
                        replay_run(&p, &bad.vc.procedure, cex, *kind).map_err(|e| format!("{file}: {e}"))?;
                    }
                    replayed += 1;
                }
            }
            (_, Err(e)) => return Err(format!("{file}: rejected with the wrong diagnostic: {e}")),
            (_, Ok(_)) => return Err(format!("{file}: expansion succeeded")),
        }
    }
    Ok(format!("10 mutants rejected at the expected stage, {replayed} counterexamples replayed"))
}

fn smt_config() -> Option<SolverConfig> {
    let mut cfg = SolverConfig::default().with_backend(Backend::Smt);
    cfg.bounds = BOUNDS;
    match check_entailment(&Expr::tt(), &Expr::tt(), &TypeEnv::new(), &cfg) {
        Err(SolverError::Unavailable { .. }) => None,
        _ => Some(cfg),
    }
}

fn criterion_7() -> Outcome {
    let Some(smt) = smt_config() else {
        return Ok("no SMT solver installed; skipped".into());
    };
    let mut files: Vec<String> = corpus_files();
    files.extend(
        fs::read_dir(corpus().join("mutants"))
            .unwrap()
            .map(|e| format!("mutants/{}", e.unwrap().file_name().into_string().unwrap())),
    );
    files.sort();
    let (mut total, mut invalid) = (0, 0);
    let mut unknown = Vec::new();
    for name in &files {
        let Ok(p) = prepare_source(&source(name), PipelineOptions::default()) else {
            continue;
        };
        for vc in program_vcs(&p.program, &p.envs).map_err(|e| e.to_string())? {
            let o = check_vc(&vc, &oracle()).map_err(|e| e.to_string())?;
            let s = check_vc(&vc, &smt).map_err(|e| e.to_string())?;
            total += 1;
            match (&o, &s) {
                (o, Verdict::Invalid { .. }) if o.is_pass() => {
                    return Err(format!("{}: oracle {} but SMT invalid", vc.id, o.label()));
                }
                (Verdict::Invalid { .. }, Verdict::Valid) => {
                    return Err(format!("{}: oracle invalid but SMT valid", vc.id));
                }
                (_, Verdict::Unknown { reason }) => unknown.push(format!("{}: {reason}", vc.id)),
                (Verdict::Invalid { .. }, _) => invalid += 1,
                _ => {}
            }
        }
    }
    Ok(format!(
        "{total} VCs over {} files, no disagreement ({invalid} invalid on both, {} SMT unknown: [{}])",
        files.len(),
        unknown.len(),
        unknown.join(", ")
    ))
}

const SAFETY_CATALOG: [&str; 20] = [
    "A[i] / y",
    "x / y",
    "x % y",
    "A[i]",
    "A[i + 1] - A[i - 1]",
    "A[A[i]]",
    "(update A on i with x)[j]",
    "|update A on i with x|",
    "forall-k / 0 <= k < |A| : A[k] > 0",
    "forall-k / i <= k < j : A[k] / y = 0",
    "exists-k / 0 <= k < x : A[k] = y",
    "x / (y - i)",
    "x > 0 && A[x] = 0",
    "x >= |A| || A[x] > 0",
    "i < |A| => A[i] % y = 0",
    "!(A[i] = 0)",
    "x / y * (A[j] % x)",
    "A[i] = B[j]",
    "forall-k / 0 <= k < |A| : exists-l / 0 <= l < |B| : A[k] = B[l] / y",
    "update A on A[i] with x / y",
];

/// Calls `f` on every state over `vars` within `bounds`; stops at the first
/// error.
fn for_each_state(
    vars: &[(String, Ty)],
    bounds: Bounds,
    st: &mut State,
    f: &mut impl FnMut(&State) -> Result<(), String>,
) -> Result<(), String> {
    let Some(((name, ty), rest)) = vars.split_first() else {
        return f(st);
    };
    for v in bounds.values(*ty) {
        st.insert(name.clone(), v);
        for_each_state(rest, bounds, st, f)?;
    }
    st.remove(name);
    Ok(())
}

fn criterion_8() -> Outcome {
    let mut total = 0usize;
    let mut safe_states = 0usize;
    for text in SAFETY_CATALOG {
        let mut e = parse_expr(text).map_err(|err| format!("`{text}`: {err}"))?;
        let mut env = TypeEnv::new();
        for v in free_vars(&e) {
            let ty = if v.starts_with(char::is_uppercase) { Ty::Arr } else { Ty::Int };
            env.insert(v, ty);
        }
        type_expr(&mut e, &env).map_err(|err| format!("`{text}`: {err}"))?;
        let safe = safe_expr(&e);
        let vars: Vec<(String, Ty)> = env.iter().map(|(k, t)| (k.clone(), *t)).collect();
        for_each_state(&vars, BOUNDS, &mut State::new(), &mut |st| {
            total += 1;
            if matches!(eval_expr(st, &safe), Ok(Value::Bool(true))) {
                safe_states += 1;
                if let Err(err) = eval_expr(st, &e) {
                    return Err(format!("`{text}` undefined in a safe state {st:?}: {err}"));
                }
            }
            Ok(())
        })?;
    }
    Ok(format!(
        "{} expressions, {total} states, {safe_states} safe states all defined",
        SAFETY_CATALOG.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("corpus verification", criterion_1),
        ("easyArrayMax pipeline", criterion_2),
        ("contract inference", criterion_3),
        ("map construct", criterion_4),
        ("checked vs erased runs", criterion_5),
        ("negative suite", criterion_6),
        ("backend agreement", criterion_7),
        ("safety condition", criterion_8),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.2}s): {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.2}s): {detail}", n + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
