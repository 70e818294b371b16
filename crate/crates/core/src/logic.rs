//! Predicate utilities shared by the analyses: free variables, substitution,
//! safe-evaluation conditions, existential closure, modified and local
//! variables, fresh names and a small structural simplifier.

use std::collections::{BTreeMap, BTreeSet};

use crate::syntax::{BinOp, Binder, Expr, ExprKind, QuantKind, Sentence, SentenceKind, UnOp};
use crate::types::{Ty, TypeEnv};

/// Free variable keys of `e` (`x@pre` occurrences are reported as `x@pre`).
pub fn free_vars(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(e, &mut Vec::new(), &mut out);
    out
}

fn collect_free(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Bool(_) => {}
        ExprKind::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        ExprKind::VarAtPre(x) => {
            out.insert(format!("{x}@pre"));
        }
        ExprKind::Access(a, i) => {
            collect_free(a, bound, out);
            collect_free(i, bound, out);
        }
        ExprKind::Size(a) | ExprKind::Unary(_, a) => collect_free(a, bound, out),
        ExprKind::Update(a, i, v) => {
            collect_free(a, bound, out);
            collect_free(i, bound, out);
            collect_free(v, bound, out);
        }
        ExprKind::Binary(_, l, r) => {
            collect_free(l, bound, out);
            collect_free(r, bound, out);
        }
        ExprKind::Quant {
            var, lo, hi, body, ..
        } => {
            collect_free(lo, bound, out);
            collect_free(hi, bound, out);
            bound.push(var.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        ExprKind::Exists { vars, body } => {
            let mark = bound.len();
            bound.extend(vars.iter().map(|b| b.name.clone()));
            collect_free(body, bound, out);
            bound.truncate(mark);
        }
    }
}

/// Every identifier occurring in `e`, free or bound, without `@pre` tags.
pub fn all_names(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    e.visit(&mut |x| match &x.kind {
        ExprKind::Var(v) | ExprKind::VarAtPre(v) => {
            out.insert(v.clone());
        }
        ExprKind::Quant { var, .. } => {
            out.insert(var.clone());
        }
        ExprKind::Exists { vars, .. } => {
            out.extend(vars.iter().map(|b| b.name.clone()));
        }
        _ => {}
    });
    out
}

/// `base` if unused, otherwise the first of `base_0`, `base_1`, ... not in `avoid`.
pub fn fresh_var(base: &str, avoid: &BTreeSet<String>) -> String {
    if !avoid.contains(base) {
        return base.to_string();
    }
    (0..)
        .map(|n| format!("{base}_{n}"))
        .find(|c| !avoid.contains(c))
        .expect("unbounded supply of names")
}

/// Simultaneous capture-avoiding substitution of variable keys (`x` or
/// `x@pre`) by expressions.
pub fn subst_vars(e: &Expr, map: &BTreeMap<String, Expr>) -> Expr {
    if map.is_empty() {
        return e.clone();
    }
    subst_rec(e, map)
}

fn subst_rec(e: &Expr, map: &BTreeMap<String, Expr>) -> Expr {
    let span = e.span;
    let kind = match &e.kind {
        ExprKind::Int(_) | ExprKind::Bool(_) => return e.clone(),
        ExprKind::Var(_) | ExprKind::VarAtPre(_) => {
            let key = e.var_key().expect("variable");
            return match map.get(&key) {
                Some(t) => t.clone(),
                None => e.clone(),
            };
        }
        ExprKind::Access(a, i) => ExprKind::Access(
            Box::new(subst_rec(a, map)),
            Box::new(subst_rec(i, map)),
        ),
        ExprKind::Size(a) => ExprKind::Size(Box::new(subst_rec(a, map))),
        ExprKind::Update(a, i, v) => ExprKind::Update(
            Box::new(subst_rec(a, map)),
            Box::new(subst_rec(i, map)),
            Box::new(subst_rec(v, map)),
        ),
        ExprKind::Unary(op, a) => ExprKind::Unary(*op, Box::new(subst_rec(a, map))),
        ExprKind::Binary(op, l, r) => ExprKind::Binary(
            *op,
            Box::new(subst_rec(l, map)),
            Box::new(subst_rec(r, map)),
        ),
        ExprKind::Quant {
            kind,
            var,
            lo,
            hi,
            body,
        } => {
            let lo = subst_rec(lo, map);
            let hi = subst_rec(hi, map);
            let (var, body) = under_binder(var, body, map);
            ExprKind::Quant {
                kind: *kind,
                var,
                lo: Box::new(lo),
                hi: Box::new(hi),
                body: Box::new(body),
            }
        }
        ExprKind::Exists { vars, body } => {
            let mut inner = map.clone();
            for b in vars {
                inner.remove(&b.name);
            }
            let body_fv = free_vars(body);
            inner.retain(|k, _| body_fv.contains(k));
            let mut captured = BTreeSet::new();
            for t in inner.values() {
                captured.extend(free_vars(t));
            }
            let mut avoid = all_names(body);
            avoid.extend(inner.keys().cloned());
            avoid.extend(captured.iter().cloned());
            let mut new_vars = Vec::new();
            let mut renames = BTreeMap::new();
            for b in vars {
                if captured.contains(&b.name) {
                    let fresh = fresh_var(&b.name, &avoid);
                    avoid.insert(fresh.clone());
                    renames.insert(b.name.clone(), Expr::var(fresh.clone()));
                    new_vars.push(Binder {
                        name: fresh,
                        ty: b.ty,
                    });
                } else {
                    avoid.insert(b.name.clone());
                    new_vars.push(b.clone());
                }
            }
            let body = subst_vars(body, &renames);
            ExprKind::Exists {
                vars: new_vars,
                body: Box::new(subst_vars(&body, &inner)),
            }
        }
    };
    Expr::new(kind, span)
}

/// Substitutes `map` in `body` under a binder for `var`, renaming the binder
/// when a replacement would otherwise be captured.
fn under_binder(var: &str, body: &Expr, map: &BTreeMap<String, Expr>) -> (String, Expr) {
    let mut inner = map.clone();
    inner.remove(var);
    let body_fv = free_vars(body);
    inner.retain(|k, _| body_fv.contains(k));
    if inner.is_empty() {
        return (var.to_string(), body.clone());
    }
    let captures = inner.values().any(|t| free_vars(t).contains(var));
    if !captures {
        return (var.to_string(), subst_vars(body, &inner));
    }
    let mut avoid = all_names(body);
    for (k, t) in &inner {
        avoid.insert(k.clone());
        avoid.extend(all_names(t));
    }
    let fresh = fresh_var(var, &avoid);
    let renamed = subst_vars(body, &BTreeMap::from([(var.to_string(), Expr::var(&fresh))]));
    (fresh, subst_vars(&renamed, &inner))
}

pub fn subst_var(e: &Expr, key: &str, to: &Expr) -> Expr {
    subst_vars(e, &BTreeMap::from([(key.to_string(), to.clone())]))
}

/// Replaces every occurrence of the subexpression `from` by `to`, avoiding
/// capture: occurrences mentioning a bound variable are left alone, and
/// binders that would capture a free variable of `to` are renamed.
pub fn substitute(e: &Expr, from: &Expr, to: &Expr) -> Expr {
    if let Some(key) = from.var_key() {
        return subst_var(e, &key, to);
    }
    let from_fv = free_vars(from);
    let to_fv = free_vars(to);
    replace_rec(e, from, to, &from_fv, &to_fv)
}

fn replace_rec(
    e: &Expr,
    from: &Expr,
    to: &Expr,
    from_fv: &BTreeSet<String>,
    to_fv: &BTreeSet<String>,
) -> Expr {
    if e == from {
        return to.clone();
    }
    let r = |x: &Expr| Box::new(replace_rec(x, from, to, from_fv, to_fv));
    let kind = match &e.kind {
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) | ExprKind::VarAtPre(_) => {
            return e.clone()
        }
        ExprKind::Access(a, i) => ExprKind::Access(r(a), r(i)),
        ExprKind::Size(a) => ExprKind::Size(r(a)),
        ExprKind::Update(a, i, v) => ExprKind::Update(r(a), r(i), r(v)),
        ExprKind::Unary(op, a) => ExprKind::Unary(*op, r(a)),
        ExprKind::Binary(op, a, b) => ExprKind::Binary(*op, r(a), r(b)),
        ExprKind::Quant {
            kind,
            var,
            lo,
            hi,
            body,
        } => {
            let (var, body) = if from_fv.contains(var) {
                (var.clone(), (**body).clone())
            } else if to_fv.contains(var) {
                let mut avoid = all_names(body);
                avoid.extend(all_names(to));
                avoid.extend(all_names(from));
                let fresh = fresh_var(var, &avoid);
                let body = subst_var(body, var, &Expr::var(&fresh));
                let body = replace_rec(&body, from, to, from_fv, to_fv);
                (fresh, body)
            } else {
                (var.clone(), replace_rec(body, from, to, from_fv, to_fv))
            };
            ExprKind::Quant {
                kind: *kind,
                var,
                lo: r(lo),
                hi: r(hi),
                body: Box::new(body),
            }
        }
        ExprKind::Exists { vars, body } => {
            if vars.iter().any(|b| from_fv.contains(&b.name)) {
                return e.clone();
            }
            let mut avoid = all_names(body);
            avoid.extend(all_names(to));
            avoid.extend(all_names(from));
            let mut renames = BTreeMap::new();
            let mut new_vars = Vec::new();
            for b in vars {
                if to_fv.contains(&b.name) {
                    let fresh = fresh_var(&b.name, &avoid);
                    avoid.insert(fresh.clone());
                    renames.insert(b.name.clone(), Expr::var(&fresh));
                    new_vars.push(Binder {
                        name: fresh,
                        ty: b.ty,
                    });
                } else {
                    new_vars.push(b.clone());
                }
            }
            let body = subst_vars(body, &renames);
            ExprKind::Exists {
                vars: new_vars,
                body: Box::new(replace_rec(&body, from, to, from_fv, to_fv)),
            }
        }
    };
    Expr::new(kind, e.span)
}

/// Condition under which evaluating `e` is defined: array indices in range
/// and divisors nonzero, with short-circuit operators guarding their right
/// operand by the left one.
pub fn safe_expr(e: &Expr) -> Expr {
    match &e.kind {
        ExprKind::Int(_)
        | ExprKind::Bool(_)
        | ExprKind::Var(_)
        | ExprKind::VarAtPre(_)
        | ExprKind::Exists { .. } => Expr::tt(),
        ExprKind::Access(a, i) | ExprKind::Update(a, i, _) => {
            let mut s = Expr::and(safe_expr(a), safe_expr(i));
            if let ExprKind::Update(_, _, v) = &e.kind {
                s = Expr::and(s, safe_expr(v));
            }
            let lower = Expr::le(Expr::int(0), (**i).clone());
            let upper = Expr::lt((**i).clone(), Expr::size((**a).clone()));
            Expr::and(Expr::and(s, lower), upper)
        }
        ExprKind::Size(a) | ExprKind::Unary(_, a) => safe_expr(a),
        ExprKind::Binary(op, l, r) => {
            let sl = safe_expr(l);
            let sr = safe_expr(r);
            match op {
                BinOp::And | BinOp::Implies => {
                    if sr.is_true() {
                        sl
                    } else {
                        Expr::and(sl, Expr::implies((**l).clone(), sr))
                    }
                }
                BinOp::Or => {
                    if sr.is_true() {
                        sl
                    } else {
                        Expr::and(sl, Expr::or((**l).clone(), sr))
                    }
                }
                BinOp::Div | BinOp::Mod => {
                    Expr::and(Expr::and(sl, sr), Expr::ne((**r).clone(), Expr::int(0)))
                }
                _ => Expr::and(sl, sr),
            }
        }
        ExprKind::Quant {
            var, lo, hi, body, ..
        } => {
            let bounds = Expr::and(safe_expr(lo), safe_expr(hi));
            let sb = safe_expr(body);
            if sb.is_true() {
                bounds
            } else {
                Expr::and(
                    bounds,
                    Expr::forall(var.clone(), (**lo).clone(), (**hi).clone(), sb),
                )
            }
        }
    }
}

/// True when `e` can never be undefined, judged syntactically.
pub fn trivially_safe(e: &Expr) -> bool {
    safe_expr(e).is_true()
}

/// Existentially closes `p` over those of `vars` that occur free in it.
/// Binder types come from `env`.
pub fn close(p: &Expr, vars: &BTreeSet<String>, env: &TypeEnv) -> Expr {
    let fv = free_vars(p);
    let bind: Vec<Binder> = vars
        .iter()
        .filter(|v| fv.contains(*v))
        .map(|v| Binder::new(v.clone(), env.get(v).unwrap_or(Ty::Int)))
        .collect();
    if bind.is_empty() {
        return p.clone();
    }
    let (all, body) = match &p.kind {
        ExprKind::Exists { vars: inner, body } => {
            let mut all = bind;
            all.extend(inner.iter().cloned());
            (all, (**body).clone())
        }
        _ => (bind, p.clone()),
    };
    eliminate_definitions(all, body)
}

/// One-point rule: `exists x (x = e && P)` becomes `exists (P[x->e])` when
/// `e` is always defined and does not mention `x`. The last binder is only
/// dropped if what remains is always defined, since an unbounded `exists`
/// is never undefined.
fn eliminate_definitions(mut vars: Vec<Binder>, body: Expr) -> Expr {
    let mut parts: Vec<Expr> = body.conjuncts().into_iter().cloned().collect();
    loop {
        let found = parts.iter().enumerate().find_map(|(n, c)| {
            let ExprKind::Binary(BinOp::Eq, l, r) = &c.kind else {
                return None;
            };
            [(l, r), (r, l)].into_iter().find_map(|(x, e)| {
                let ExprKind::Var(name) = &x.kind else {
                    return None;
                };
                let pos = vars.iter().position(|b| &b.name == name)?;
                (trivially_safe(e) && !free_vars(e).contains(name)).then(|| (n, pos, (**e).clone()))
            })
        });
        let Some((n, pos, def)) = found else { break };
        let rest: Vec<Expr> = parts
            .iter()
            .enumerate()
            .filter(|(m, _)| *m != n)
            .map(|(_, c)| subst_var(c, &vars[pos].name, &def))
            .collect();
        if vars.len() == 1 && !trivially_safe(&Expr::and_all(rest.clone())) {
            break;
        }
        vars.remove(pos);
        parts = rest;
    }
    let body = simplify(&Expr::and_all(parts));
    if vars.is_empty() {
        return body;
    }
    Expr::exists(vars, body)
}

/// Variables that some execution of `s` may write.
pub fn mod_vars(s: &Sentence) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_mod(s, &mut out);
    out
}

fn collect_mod(s: &Sentence, out: &mut BTreeSet<String>) {
    match &s.kind {
        SentenceKind::Skip => {}
        SentenceKind::Assign { target, .. } => {
            out.insert(target.clone());
        }
        SentenceKind::Local { name, .. } => {
            out.insert(name.clone());
        }
        SentenceKind::Call { args, .. } => out.extend(args.iter().cloned()),
        SentenceKind::If {
            then_branch,
            else_branch,
            ..
        } => {
            collect_mod(then_branch, out);
            collect_mod(else_branch, out);
        }
        SentenceKind::While { body, .. } => collect_mod(body, out),
        SentenceKind::For { index, body, .. } => {
            out.insert(index.clone());
            collect_mod(body, out);
        }
        SentenceKind::Map { body, array, index } => {
            out.insert(array.clone());
            out.insert(index.clone());
            collect_mod(body, out);
        }
        SentenceKind::Seq(a, b) => {
            collect_mod(a, out);
            collect_mod(b, out);
        }
    }
}

/// Locals introduced in the top scope chain of `s`. Locals of branch and loop
/// bodies belong to those bodies; a `for`/`map` index lives in the enclosing
/// scope.
pub fn local_vars(s: &Sentence) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_locals(s, &mut out);
    out
}

fn collect_locals(s: &Sentence, out: &mut BTreeSet<String>) {
    match &s.kind {
        SentenceKind::Local { name, .. } => {
            out.insert(name.clone());
        }
        SentenceKind::For { index, .. } | SentenceKind::Map { index, .. } => {
            out.insert(index.clone());
        }
        SentenceKind::Seq(a, b) => {
            collect_locals(a, out);
            collect_locals(b, out);
        }
        _ => {}
    }
}

/// Every local declared anywhere inside `s`, at any depth.
pub fn all_locals(s: &Sentence) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    fn walk(s: &Sentence, out: &mut BTreeSet<String>) {
        match &s.kind {
            SentenceKind::Local { name, .. } => {
                out.insert(name.clone());
            }
            SentenceKind::For { index, body, .. } | SentenceKind::Map { index, body, .. } => {
                out.insert(index.clone());
                walk(body, out);
            }
            SentenceKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                walk(then_branch, out);
                walk(else_branch, out);
            }
            SentenceKind::While { body, .. } => walk(body, out),
            SentenceKind::Seq(a, b) => {
                walk(a, out);
                walk(b, out);
            }
            _ => {}
        }
    }
    walk(s, &mut out);
    out
}

/// Structural simplification that preserves the value of `e` in every state,
/// undefinedness included: `true`/`false` absorption, double negation and
/// `x = x`. Absorptions that would discard an operand only fire when that
/// operand is always defined.
pub fn simplify(e: &Expr) -> Expr {
    let span = e.span;
    match &e.kind {
        ExprKind::Unary(UnOp::Not, x) => {
            let x = simplify(x);
            match &x.kind {
                ExprKind::Bool(b) => Expr::bool(!b),
                ExprKind::Unary(UnOp::Not, inner) => (**inner).clone(),
                _ => Expr::not(x),
            }
        }
        ExprKind::Binary(op, l, r) if op.is_comparison() => {
            let l = simplify(l);
            let r = simplify(r);
            match (&l.kind, &r.kind) {
                (ExprKind::Int(a), ExprKind::Int(b)) => Expr::bool(match op {
                    BinOp::Lt => a < b,
                    BinOp::Le => a <= b,
                    BinOp::Gt => a > b,
                    BinOp::Ge => a >= b,
                    BinOp::Eq => a == b,
                    _ => a != b,
                }),
                _ => simplify_binary(*op, l, r),
            }
        }
        ExprKind::Binary(op, l, r) if op.is_logical() => {
            let l = simplify(l);
            let r = simplify(r);
            simplify_binary(*op, l, r)
        }
        ExprKind::Binary(op, l, r) => Expr::binary(*op, simplify(l), simplify(r)),
        ExprKind::Quant {
            kind,
            var,
            lo,
            hi,
            body,
        } => {
            let body = simplify(body);
            let bounds_safe = trivially_safe(lo) && trivially_safe(hi);
            match (kind, &body.kind) {
                (QuantKind::Forall, ExprKind::Bool(true)) if bounds_safe => Expr::tt(),
                (QuantKind::Exists, ExprKind::Bool(false)) if bounds_safe => Expr::bool(false),
                _ => Expr::quant(*kind, var.clone(), (**lo).clone(), (**hi).clone(), body),
            }
        }
        ExprKind::Exists { vars, body } => {
            let body = simplify(body);
            if body.is_true() || body.is_false() {
                return body;
            }
            let fv = free_vars(&body);
            let vars: Vec<Binder> = vars.iter().filter(|b| fv.contains(&b.name)).cloned().collect();
            if vars.is_empty() && trivially_safe(&body) {
                return body;
            }
            Expr::exists(vars, body)
        }
        _ => e.clone(),
    }
    .with_span(span)
}

fn simplify_binary(op: BinOp, l: Expr, r: Expr) -> Expr {
    match op {
        BinOp::And => {
            if l.is_true() {
                r
            } else if r.is_true() || l.is_false() {
                l
            } else if r.is_false() && trivially_safe(&l) {
                r
            } else {
                Expr::and(l, r)
            }
        }
        BinOp::Or => {
            if l.is_false() {
                r
            } else if r.is_false() || l.is_true() {
                l
            } else if r.is_true() && trivially_safe(&l) {
                r
            } else {
                Expr::or(l, r)
            }
        }
        BinOp::Implies => {
            if l.is_true() {
                r
            } else if l.is_false() {
                Expr::tt()
            } else if r.is_true() && trivially_safe(&l) {
                r
            } else if r.is_false() {
                simplify(&Expr::not(l))
            } else {
                Expr::implies(l, r)
            }
        }
        BinOp::Eq if l == r && trivially_safe(&l) => Expr::tt(),
        _ => Expr::binary(op, l, r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_expr;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn safe_of_division_by_array_element() {
        assert_eq!(safe_expr(&p("a[i] / y")).to_string(), "0 <= i && i < |a| && y /= 0");
    }

    #[test]
    fn safe_of_plain_arithmetic_is_true() {
        assert!(safe_expr(&p("x + 1")).is_true());
    }

    #[test]
    fn safe_of_quantifier_guards_body() {
        assert_eq!(
            safe_expr(&p("forall-k / 0 <= k < |A| : A[k] > A[k + 1]")),
            p("forall-k / 0 <= k < |A| : 0 <= k && k < |A| && 0 <= k + 1 && k + 1 < |A|")
        );
    }

    #[test]
    fn safe_of_conjunction_is_short_circuit() {
        assert_eq!(
            safe_expr(&p("i < |A| && A[i] > 0")),
            p("i < |A| => 0 <= i && i < |A|")
        );
    }

    #[test]
    fn substitution_of_upper_bound() {
        let q = p("forall-k / 0 <= k < h : m >= A[k]");
        assert_eq!(
            subst_var(&q, "h", &Expr::var("i")),
            p("forall-k / 0 <= k < i : m >= A[k]")
        );
        let q = p("forall-k / 0 <= k < |A| : m >= A[k]");
        assert_eq!(
            substitute(&q, &p("|A|"), &Expr::var("i")),
            p("forall-k / 0 <= k < i : m >= A[k]")
        );
    }

    #[test]
    fn substitution_without_occurrence_is_identity() {
        assert_eq!(subst_var(&p("x + 1"), "y", &Expr::int(0)), p("x + 1"));
    }

    #[test]
    fn substitution_avoids_capture() {
        let e = p("exists-k' / 0 <= k' < 5 : k' = k");
        let out = subst_var(&e, "k", &Expr::var("k'"));
        assert_eq!(out, p("exists-k'_0 / 0 <= k'_0 < 5 : k'_0 = k'"));
        let e = p("exists v (v = x)");
        let out = subst_var(&e, "x", &Expr::var("v"));
        assert_eq!(out, p("exists v_0 (v_0 = v)"));
    }

    #[test]
    fn substitution_stops_at_shadowing_binder() {
        let e = p("k > 0 && (forall-k / 0 <= k < n : A[k] > 0)");
        assert_eq!(
            subst_var(&e, "k", &Expr::int(7)),
            p("7 > 0 && (forall-k / 0 <= k < n : A[k] > 0)")
        );
    }

    #[test]
    fn closure() {
        let env: TypeEnv = [("i".to_string(), Ty::Int), ("m".to_string(), Ty::Int)]
            .into_iter()
            .collect();
        let q = p("i = 5 && m >= 0");
        let closed = close(&q, &BTreeSet::from(["i".to_string()]), &env);
        assert_eq!(closed, p("m >= 0"));
        let q = p("i = m + 1 && A[i] > 0");
        let closed = close(&q, &BTreeSet::from(["i".to_string()]), &env);
        assert_eq!(closed, p("exists i (i = m + 1 && A[i] > 0)"));
        let q = p("i = j && j > 0 && m = i");
        let closed = close(&q, &BTreeSet::from(["i".to_string(), "j".to_string()]), &env);
        assert_eq!(closed, p("m > 0"));
        assert_eq!(close(&q, &BTreeSet::new(), &env), q);
        let q = p("A = A@pre");
        assert_eq!(
            close(&q, &BTreeSet::from(["t".to_string(), "e".to_string()]), &env),
            q
        );
    }

    #[test]
    fn fresh_names() {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(fresh_var("var0", &set(&["var0"])), "var0_0");
        assert_eq!(fresh_var("v'", &set(&[])), "v'");
        assert_eq!(fresh_var("i", &set(&["i", "i_0"])), "i_1");
    }

    #[test]
    fn modified_and_local_variables() {
        let prog = crate::syntax::parse_program(
            "max(a, b, c) { c <- a }
             f(A, m) { local i <- 1
               while i < |A| :?! true :# |A| - i do
                 local t <- 0  local e <- A[i]  call max(e, m, t)  m <- t  i <- i + 1
               od }",
        )
        .unwrap();
        let body = &prog.procedures[1].body;
        let SentenceKind::Seq(_, w) = &body.kind else {
            panic!()
        };
        let SentenceKind::While { body: lb, .. } = &w.kind else {
            panic!()
        };
        let names = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(mod_vars(lb), names(&["e", "i", "m", "t"]));
        assert_eq!(local_vars(lb), names(&["e", "t"]));
        assert_eq!(local_vars(body), names(&["i"]));
        assert!(mod_vars(&Sentence::skip()).is_empty());
    }

    #[test]
    fn simplifier_is_conservative() {
        assert_eq!(simplify(&p("true && x > 0")), p("x > 0"));
        assert_eq!(simplify(&p("!!b")), p("b"));
        assert_eq!(simplify(&p("x = x")), p("true"));
        // A[i] may be undefined, so it is kept
        assert_eq!(simplify(&p("A[i] = A[i]")), p("A[i] = A[i]"));
        assert_eq!(simplify(&p("x / y > 0 && false")), p("x / y > 0 && false"));
        assert_eq!(simplify(&p("x > 0 && false")), p("false"));
    }
}
