//! SMT-LIB 2 encoding of entailments and a one-shot subprocess driver.
//!
//! Every boolean expression is translated twice: into a formula stating that
//! it evaluates to true and one stating that it evaluates to false. Neither
//! holds when evaluation is undefined. Integer and array expressions carry a
//! definedness condition next to their value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use log::debug;
use num_bigint::BigInt;

use crate::interp::{State, Value};
use crate::logic::{free_vars, trivially_safe};
use crate::syntax::{BinOp, Expr, ExprKind, QuantKind, UnOp};
use crate::types::{Ty, TypeEnv};

use super::{SolverConfig, SolverError, Verdict};

/// Array cells requested from the model for each array variable.
const MODEL_CELLS: usize = 32;

const PRELUDE: &str = "\
(define-fun pest_div ((a Int) (b Int)) Int
  (ite (>= a 0)
       (ite (> b 0) (div a b) (- (div a (- b))))
       (ite (> b 0) (- (div (- a) b)) (div (- a) (- b)))))
(define-fun pest_mod ((a Int) (b Int)) Int (- a (* b (pest_div a b))))
";

fn quote(name: &str) -> String {
    format!("|{name}|")
}

fn len_symbol(name: &str) -> String {
    format!("|{name}#len|")
}

#[derive(Clone)]
enum Sym {
    Int(String),
    Bool(String),
    Arr { arr: String, len: String },
}

/// A translated integer or array value with its definedness condition.
struct Term {
    value: String,
    len: Option<String>,
    defined: String,
}

fn conj(parts: impl IntoIterator<Item = String>) -> String {
    let parts: Vec<String> = parts.into_iter().filter(|p| p != "true").collect();
    match parts.len() {
        0 => "true".into(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(and {})", parts.join(" ")),
    }
}

fn disj(parts: impl IntoIterator<Item = String>) -> String {
    let parts: Vec<String> = parts.into_iter().filter(|p| p != "false").collect();
    match parts.len() {
        0 => "false".into(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(or {})", parts.join(" ")),
    }
}

fn not(p: &str) -> String {
    match p {
        "true" => "false".into(),
        "false" => "true".into(),
        _ => format!("(not {p})"),
    }
}

fn int_lit(n: &BigInt) -> String {
    if n.sign() == num_bigint::Sign::Minus {
        format!("(- {})", -n)
    } else {
        n.to_string()
    }
}

struct Translator {
    scope: Vec<(String, Sym)>,
    fresh: usize,
}

impl Translator {
    fn lookup(&self, key: &str) -> Sym {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == key)
            .map(|(_, s)| s.clone())
            .unwrap_or_else(|| panic!("untyped variable `{key}` in SMT translation"))
    }

    fn fresh(&mut self, base: &str) -> String {
        self.fresh += 1;
        quote(&format!("{base}!{}", self.fresh))
    }

    fn ty(&self, e: &Expr) -> Ty {
        match &e.kind {
            ExprKind::Int(_) | ExprKind::Access(..) | ExprKind::Size(_) => Ty::Int,
            ExprKind::Unary(UnOp::Neg, _) => Ty::Int,
            ExprKind::Update(..) => Ty::Arr,
            ExprKind::Var(x) => self.sym_ty(x),
            ExprKind::VarAtPre(x) => self.sym_ty(&format!("{x}@pre")),
            ExprKind::Binary(op, ..) if op.is_arithmetic() => Ty::Int,
            _ => Ty::Bool,
        }
    }

    fn sym_ty(&self, key: &str) -> Ty {
        match self.lookup(key) {
            Sym::Int(_) => Ty::Int,
            Sym::Bool(_) => Ty::Bool,
            Sym::Arr { .. } => Ty::Arr,
        }
    }

    fn var_term(&self, key: &str) -> Term {
        match self.lookup(key) {
            Sym::Int(s) | Sym::Bool(s) => Term {
                value: s,
                len: None,
                defined: "true".into(),
            },
            Sym::Arr { arr, len } => Term {
                value: arr,
                len: Some(len),
                defined: "true".into(),
            },
        }
    }

    fn in_bounds(idx: &str, len: &str) -> String {
        format!("(<= 0 {idx}) (< {idx} {len})")
    }

    /// Value of an integer or array expression.
    fn term(&mut self, e: &Expr) -> Term {
        let simple = |value: String, defined: String| Term {
            value,
            len: None,
            defined,
        };
        match &e.kind {
            ExprKind::Int(n) => simple(int_lit(n), "true".into()),
            ExprKind::Var(x) => self.var_term(x),
            ExprKind::VarAtPre(x) => self.var_term(&format!("{x}@pre")),
            ExprKind::Access(a, i) => {
                let a = self.term(a);
                let i = self.term(i);
                let len = a.len.expect("array term");
                let defined = conj([
                    a.defined,
                    i.defined,
                    format!("(and {})", Self::in_bounds(&i.value, &len)),
                ]);
                simple(format!("(select {} {})", a.value, i.value), defined)
            }
            ExprKind::Size(a) => {
                let a = self.term(a);
                simple(a.len.expect("array term"), a.defined)
            }
            ExprKind::Update(a, i, v) => {
                let a = self.term(a);
                let i = self.term(i);
                let v = self.term(v);
                let len = a.len.expect("array term");
                let defined = conj([
                    a.defined,
                    i.defined,
                    v.defined,
                    format!("(and {})", Self::in_bounds(&i.value, &len)),
                ]);
                Term {
                    value: format!("(store {} {} {})", a.value, i.value, v.value),
                    len: Some(len),
                    defined,
                }
            }
            ExprKind::Unary(UnOp::Neg, x) => {
                let x = self.term(x);
                simple(format!("(- {})", x.value), x.defined)
            }
            ExprKind::Binary(op, l, r) if op.is_arithmetic() => {
                let l = self.term(l);
                let r = self.term(r);
                let (f, guard) = match op {
                    BinOp::Add => ("+", None),
                    BinOp::Sub => ("-", None),
                    BinOp::Mul => ("*", None),
                    BinOp::Div => ("pest_div", Some(format!("(not (= {} 0))", r.value))),
                    BinOp::Mod => ("pest_mod", Some(format!("(not (= {} 0))", r.value))),
                    _ => unreachable!(),
                };
                let defined = conj([l.defined, r.defined].into_iter().chain(guard));
                simple(format!("({f} {} {})", l.value, r.value), defined)
            }
            _ => panic!("expression `{e}` is not integer- or array-valued"),
        }
    }

    /// Formulas for "e evaluates to true" and "e evaluates to false".
    fn truth(&mut self, e: &Expr) -> (String, String) {
        match &e.kind {
            ExprKind::Bool(b) => (b.to_string(), (!b).to_string()),
            ExprKind::Var(_) | ExprKind::VarAtPre(_) => {
                let t = self.term(e).value;
                let f = not(&t);
                (t, f)
            }
            ExprKind::Unary(UnOp::Not, x) => {
                let (t, f) = self.truth(x);
                (f, t)
            }
            ExprKind::Binary(BinOp::And, l, r) => {
                let (lt, lf) = self.truth(l);
                let (rt, rf) = self.truth(r);
                (conj([lt.clone(), rt]), disj([lf, conj([lt, rf])]))
            }
            ExprKind::Binary(BinOp::Or, l, r) => {
                let (lt, lf) = self.truth(l);
                let (rt, rf) = self.truth(r);
                (disj([lt, conj([lf.clone(), rt])]), conj([lf, rf]))
            }
            ExprKind::Binary(BinOp::Implies, l, r) => {
                let (lt, lf) = self.truth(l);
                let (rt, rf) = self.truth(r);
                (disj([lf, conj([lt.clone(), rt])]), conj([lt, rf]))
            }
            ExprKind::Binary(op @ (BinOp::Eq | BinOp::Ne), l, r) => {
                let (t, f) = match self.ty(l) {
                    Ty::Bool => {
                        let (lt, lf) = self.truth(l);
                        let (rt, rf) = self.truth(r);
                        (
                            disj([conj([lt.clone(), rt.clone()]), conj([lf.clone(), rf.clone()])]),
                            disj([conj([lt, rf]), conj([lf, rt])]),
                        )
                    }
                    Ty::Int => {
                        let l = self.term(l);
                        let r = self.term(r);
                        let d = conj([l.defined, r.defined]);
                        let eq = format!("(= {} {})", l.value, r.value);
                        (conj([d.clone(), eq.clone()]), conj([d, not(&eq)]))
                    }
                    Ty::Arr => {
                        let l = self.term(l);
                        let r = self.term(r);
                        let d = conj([l.defined, r.defined]);
                        let (ll, rl) = (l.len.unwrap(), r.len.unwrap());
                        let j = self.fresh("j");
                        let eq = format!(
                            "(and (= {ll} {rl}) (forall (({j} Int)) (=> (and {}) (= (select {} {j}) (select {} {j})))))",
                            Self::in_bounds(&j, &ll),
                            l.value,
                            r.value
                        );
                        (conj([d.clone(), eq.clone()]), conj([d, not(&eq)]))
                    }
                };
                if *op == BinOp::Eq {
                    (t, f)
                } else {
                    (f, t)
                }
            }
            ExprKind::Binary(op, l, r) => {
                let sym = match op {
                    BinOp::Lt => "<",
                    BinOp::Le => "<=",
                    BinOp::Gt => ">",
                    BinOp::Ge => ">=",
                    _ => unreachable!("operator {op:?} is not a comparison"),
                };
                let l = self.term(l);
                let r = self.term(r);
                let d = conj([l.defined, r.defined]);
                let c = format!("({sym} {} {})", l.value, r.value);
                (conj([d.clone(), c.clone()]), conj([d, not(&c)]))
            }
            ExprKind::Quant {
                kind,
                var,
                lo,
                hi,
                body,
            } => self.quant(*kind, var, lo, hi, body),
            ExprKind::Exists { vars, body } => {
                let mark = self.scope.len();
                let mut binders = Vec::new();
                let mut side = Vec::new();
                for v in vars {
                    let sym = match v.ty.unwrap_or(Ty::Int) {
                        Ty::Int => {
                            let s = self.fresh(&v.name);
                            binders.push(format!("({s} Int)"));
                            Sym::Int(s)
                        }
                        Ty::Bool => {
                            let s = self.fresh(&v.name);
                            binders.push(format!("({s} Bool)"));
                            Sym::Bool(s)
                        }
                        Ty::Arr => {
                            let arr = self.fresh(&v.name);
                            let len = self.fresh(&format!("{}#len", v.name));
                            binders.push(format!("({arr} (Array Int Int)) ({len} Int)"));
                            side.push(format!("(>= {len} 0)"));
                            Sym::Arr { arr, len }
                        }
                    };
                    self.scope.push((v.name.clone(), sym));
                }
                let (t, _) = self.truth(body);
                self.scope.truncate(mark);
                let t = format!("(exists ({}) {})", binders.join(" "), conj(side.into_iter().chain([t])));
                let f = not(&t);
                (t, f)
            }
            _ => panic!("expression `{e}` is not boolean"),
        }
    }

    fn with_var<T>(&mut self, var: &str, sym: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        self.scope.push((var.to_string(), Sym::Int(sym.to_string())));
        let r = f(self);
        self.scope.pop();
        r
    }

    /// Bounded quantifiers evaluate left to right and stop at the first
    /// deciding instance, so "false" for `forall` (and "true" for `exists`)
    /// requires every earlier instance to be defined and non-deciding.
    fn quant(&mut self, kind: QuantKind, var: &str, lo: &Expr, hi: &Expr, body: &Expr) -> (String, String) {
        let lo = self.term(lo);
        let hi = self.term(hi);
        let d = conj([lo.defined, hi.defined]);
        let k = self.fresh(var);
        let j = self.fresh(var);
        let range = |x: &str| format!("(and (<= {} {x}) (< {x} {}))", lo.value, hi.value);
        let (bt, bf) = self.with_var(var, &k, |t| t.truth(body));
        let (prior_t, prior_f) = self.with_var(var, &j, |t| t.truth(body));
        let (all, found, prior) = match kind {
            QuantKind::Forall => (bt, bf, prior_t),
            QuantKind::Exists => (bf, bt, prior_f),
        };
        let every = format!("(forall (({k} Int)) (=> {} {all}))", range(&k));
        let earlier = if trivially_safe(body) {
            "true".to_string()
        } else {
            format!(
                "(forall (({j} Int)) (=> (and (<= {} {j}) (< {j} {k})) {prior}))",
                lo.value
            )
        };
        let some = format!("(exists (({k} Int)) {})", conj([range(&k), found, earlier]));
        let (every, some) = (conj([d.clone(), every]), conj([d, some]));
        match kind {
            QuantKind::Forall => (every, some),
            QuantKind::Exists => (some, every),
        }
    }
}

fn declare(env: &TypeEnv, names: &[String], out: &mut String) -> Vec<(String, Sym)> {
    let mut scope = Vec::new();
    for n in names {
        let sym = match env.get(n).unwrap_or(Ty::Int) {
            Ty::Int => {
                let _ = writeln!(out, "(declare-const {} Int)", quote(n));
                Sym::Int(quote(n))
            }
            Ty::Bool => {
                let _ = writeln!(out, "(declare-const {} Bool)", quote(n));
                Sym::Bool(quote(n))
            }
            Ty::Arr => {
                let _ = writeln!(out, "(declare-const {} (Array Int Int))", quote(n));
                let _ = writeln!(out, "(declare-const {} Int)", len_symbol(n));
                let _ = writeln!(out, "(assert (>= {} 0))", len_symbol(n));
                Sym::Arr {
                    arr: quote(n),
                    len: len_symbol(n),
                }
            }
        };
        scope.push((n.clone(), sym));
    }
    scope
}

fn free_names(h: &Expr, g: &Expr) -> Vec<String> {
    let mut names = free_vars(h);
    names.extend(free_vars(g));
    names.into_iter().collect()
}

/// SMT-LIB script asserting `h` true and `g` not true; `unsat` means the
/// entailment is valid.
pub fn emit_smtlib(h: &Expr, g: &Expr, env: &TypeEnv) -> String {
    let names = free_names(h, g);
    let mut out = String::from("(set-logic AUFNIRA)\n(set-option :produce-models true)\n");
    out.push_str(PRELUDE);
    let scope = declare(env, &names, &mut out);
    let mut t = Translator { scope, fresh: 0 };
    let (ht, _) = t.truth(h);
    let (gt, _) = t.truth(g);
    let _ = writeln!(out, "(assert {ht})");
    let _ = writeln!(out, "(assert {})", not(&gt));
    out.push_str("(check-sat)\n");
    let mut wanted = Vec::new();
    for n in &names {
        match env.get(n).unwrap_or(Ty::Int) {
            Ty::Arr => {
                wanted.push(len_symbol(n));
                for i in 0..MODEL_CELLS {
                    wanted.push(format!("(select {} {i})", quote(n)));
                }
            }
            _ => wanted.push(quote(n)),
        }
    }
    if !wanted.is_empty() {
        let _ = writeln!(out, "(get-value ({}))", wanted.join(" "));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> Vec<Sexp> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                if stack.len() > 1 {
                    let done = stack.pop().unwrap();
                    stack.last_mut().unwrap().push(Sexp::List(done));
                }
            }
            '|' => {
                let mut s = String::from("|");
                for d in chars.by_ref() {
                    s.push(d);
                    if d == '|' {
                        break;
                    }
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            '"' => {
                let mut s = String::from("\"");
                for d in chars.by_ref() {
                    s.push(d);
                    if d == '"' {
                        break;
                    }
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            c if c.is_whitespace() => {}
            c => {
                let mut s = String::from(c);
                while let Some(&d) = chars.peek() {
                    if d.is_whitespace() || d == '(' || d == ')' {
                        break;
                    }
                    s.push(d);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
        }
    }
    while stack.len() > 1 {
        let done = stack.pop().unwrap();
        stack.last_mut().unwrap().push(Sexp::List(done));
    }
    stack.pop().unwrap()
}

fn sexp_text(s: &Sexp) -> String {
    match s {
        Sexp::Atom(a) => a.clone(),
        Sexp::List(items) => format!("({})", items.iter().map(sexp_text).collect::<Vec<_>>().join(" ")),
    }
}

fn sexp_int(s: &Sexp) -> Option<BigInt> {
    match s {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(m), x] if m == "-" => sexp_int(x).map(|n| -n),
            _ => None,
        },
    }
}

/// Builds a state from a `get-value` response.
fn model_state(values: &Sexp, names: &[String], env: &TypeEnv) -> Option<State> {
    let Sexp::List(pairs) = values else {
        return None;
    };
    let mut got = BTreeMap::new();
    for p in pairs {
        if let Sexp::List(kv) = p {
            if let [k, v] = kv.as_slice() {
                got.insert(sexp_text(k), v.clone());
            }
        }
    }
    let mut st = State::new();
    for n in names {
        let v = match env.get(n).unwrap_or(Ty::Int) {
            Ty::Int => Value::Int(sexp_int(got.get(&quote(n))?)?),
            Ty::Bool => Value::Bool(sexp_text(got.get(&quote(n))?) == "true"),
            Ty::Arr => {
                let len = sexp_int(got.get(&len_symbol(n))?)?;
                let len: usize = len.try_into().ok()?;
                if len > MODEL_CELLS {
                    return None;
                }
                let cells = (0..len)
                    .map(|i| got.get(&format!("(select {} {i})", quote(n))).and_then(sexp_int))
                    .collect::<Option<Vec<_>>>()?;
                Value::Arr(cells)
            }
        };
        st.insert(n.clone(), v);
    }
    Some(st)
}

/// Runs `command` with `input` on stdin; `None` on timeout.
fn run_solver(command: &str, input: &str, timeout: Duration) -> Result<Option<String>, SolverError> {
    let mut parts = command.split_whitespace();
    let unavailable = |reason: String| SolverError::Unavailable {
        command: command.to_string(),
        reason,
    };
    let prog = parts.next().ok_or_else(|| unavailable("empty command".into()))?;
    let mut child = Command::new(prog)
        .args(parts)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| unavailable(e.to_string()))?;
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    {
        let mut stdin = child.stdin.take().expect("piped stdin");
        // a solver that exits early closes the pipe; its answer still counts
        let _ = stdin.write_all(input.as_bytes());
    }
    let start = Instant::now();
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                let _ = reader.join();
                return Ok(None);
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(2)),
            Err(e) => return Err(unavailable(e.to_string())),
        }
    }
    Ok(Some(reader.join().unwrap_or_default()))
}

enum Answer {
    Timeout,
    Unsat,
    /// Satisfiable; the state is `None` when the model could not be read.
    Sat(Option<State>),
    /// Satisfiable, but only with arrays longer than the model reads.
    OnlyLongArrays,
    Other(String),
}

fn solve(script: &str, names: &[String], env: &TypeEnv, cfg: &SolverConfig) -> Result<Answer, SolverError> {
    let Some(output) = run_solver(&cfg.smt_command, script, Duration::from_millis(cfg.timeout_ms))? else {
        return Ok(Answer::Timeout);
    };
    let sexps = parse_sexps(&output);
    let answer = sexps.first().map(sexp_text).unwrap_or_default();
    debug!("smt answered {answer}");
    Ok(match answer.as_str() {
        "unsat" => Answer::Unsat,
        "sat" if names.is_empty() => Answer::Sat(Some(State::new())),
        "sat" => Answer::Sat(sexps.get(1).and_then(|v| model_state(v, names, env))),
        other => Answer::Other(other.to_string()),
    })
}

/// Decides `h ⊢ g` with the external solver. A model whose arrays are too
/// long to read is replaced by one found under a length cap.
pub fn check(h: &Expr, g: &Expr, env: &TypeEnv, cfg: &SolverConfig) -> Result<Verdict, SolverError> {
    let names = free_names(h, g);
    let script = emit_smtlib(h, g, env);
    let mut answer = solve(&script, &names, env, cfg)?;
    let arrays: Vec<&String> = names.iter().filter(|n| env.get(n) == Some(Ty::Arr)).collect();
    if matches!(answer, Answer::Sat(None)) && !arrays.is_empty() {
        let caps: String = arrays
            .iter()
            .map(|n| format!("(assert (<= {} {MODEL_CELLS}))\n", len_symbol(n)))
            .collect();
        let capped = script.replacen("(check-sat)", &format!("{caps}(check-sat)"), 1);
        answer = match solve(&capped, &names, env, cfg)? {
            Answer::Unsat => Answer::OnlyLongArrays,
            a @ Answer::Sat(Some(_)) => a,
            _ => Answer::Sat(None),
        };
    }
    Ok(match answer {
        Answer::Unsat => Verdict::Valid,
        Answer::Sat(Some(counterexample)) => Verdict::Invalid { counterexample },
        Answer::Sat(None) => Verdict::Unknown {
            reason: "unreadable model".into(),
        },
        Answer::Timeout => Verdict::Unknown {
            reason: "timeout".into(),
        },
        Answer::Other(a) if a == "unknown" => Verdict::Unknown {
            reason: "solver answered unknown".into(),
        },
        Answer::OnlyLongArrays => Verdict::Unknown {
            reason: format!("counterexamples need arrays longer than {MODEL_CELLS}"),
        },
        Answer::Other(a) => Verdict::Unknown {
            reason: format!("unexpected solver output `{a}`"),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_expr;

    fn env(pairs: &[(&str, Ty)]) -> TypeEnv {
        pairs.iter().map(|(n, t)| (n.to_string(), *t)).collect()
    }

    #[test]
    fn script_shape() {
        let e = env(&[("x", Ty::Int)]);
        let s = emit_smtlib(&parse_expr("true").unwrap(), &parse_expr("x = x").unwrap(), &e);
        assert!(s.contains("(declare-const |x| Int)"));
        assert!(s.contains("(assert (not (= |x| |x|)))"));
        assert!(s.contains("(check-sat)"));
    }

    #[test]
    fn arrays_get_length_symbols() {
        let e = env(&[("A", Ty::Arr), ("i", Ty::Int)]);
        let s = emit_smtlib(&parse_expr("true").unwrap(), &parse_expr("A[i] >= 0").unwrap(), &e);
        assert!(s.contains("(declare-const |A#len| Int)"));
        assert!(s.contains("(assert (>= |A#len| 0))"));
        assert!(s.contains("(select |A| |i|)"));
    }

    #[test]
    fn sexp_parsing() {
        let v = parse_sexps("sat\n((|x| (- 3)) ((select |A| 0) 5))");
        assert_eq!(v[0], Sexp::Atom("sat".into()));
        let Sexp::List(pairs) = &v[1] else { panic!() };
        assert_eq!(pairs.len(), 2);
        let Sexp::List(kv) = &pairs[0] else { panic!() };
        assert_eq!(sexp_int(&kv[1]), Some(BigInt::from(-3)));
        let Sexp::List(kv) = &pairs[1] else { panic!() };
        assert_eq!(sexp_text(&kv[0]), "(select |A| 0)");
    }

    #[test]
    fn model_to_state() {
        let e = env(&[("A", Ty::Arr), ("b", Ty::Bool)]);
        let names = vec!["A".to_string(), "b".to_string()];
        let v = parse_sexps("((|A#len| 2) ((select |A| 0) 1) ((select |A| 1) (- 2)) (|b| true))");
        let st = model_state(&v[0], &names, &e).unwrap();
        assert_eq!(st["A"], Value::arr(&[1, -2]));
        assert_eq!(st["b"], Value::Bool(true));
    }

    #[test]
    fn missing_solver_is_unavailable() {
        let cfg = SolverConfig {
            smt_command: "definitely-not-a-solver-binary".into(),
            ..SolverConfig::default()
        };
        let x = parse_expr("true").unwrap();
        assert!(matches!(check(&x, &x, &TypeEnv::new(), &cfg), Err(SolverError::Unavailable { .. })));
    }
}
