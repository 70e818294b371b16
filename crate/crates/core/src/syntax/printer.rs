//! Pretty-printer producing concrete syntax that parses back to the same tree.

use std::fmt::{self, Write};

use super::ast::*;

// Binding strength of each construct; an operand is parenthesized when its
// own level is below the level its position requires.
const OPEN: u8 = 0; // quantifiers and `update`, which extend as far right as possible
const IMPLIES: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const NOT: u8 = 4;
const CMP: u8 = 5;
const ADD: u8 = 6;
const MUL: u8 = 7;
const NEG: u8 = 8;
const POSTFIX: u8 = 9;
const ATOM: u8 = 10;

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Int(n) if n.sign() == num_bigint::Sign::Minus => NEG,
        ExprKind::Int(_)
        | ExprKind::Bool(_)
        | ExprKind::Var(_)
        | ExprKind::VarAtPre(_)
        | ExprKind::Size(_)
        | ExprKind::Exists { .. } => ATOM,
        ExprKind::Access(..) => POSTFIX,
        ExprKind::Update(..) | ExprKind::Quant { .. } => OPEN,
        ExprKind::Unary(UnOp::Neg, _) => NEG,
        ExprKind::Unary(UnOp::Not, _) => NOT,
        ExprKind::Binary(op, ..) => match op {
            BinOp::Implies => IMPLIES,
            BinOp::Or => OR,
            BinOp::And => AND,
            BinOp::Add | BinOp::Sub => ADD,
            BinOp::Mul | BinOp::Div | BinOp::Mod => MUL,
            _ => CMP,
        },
    }
}

fn write_at(f: &mut impl Write, e: &Expr, min: u8) -> fmt::Result {
    if level(e) < min {
        f.write_char('(')?;
        write_expr(f, e)?;
        f.write_char(')')
    } else {
        write_expr(f, e)
    }
}

fn write_expr(f: &mut impl Write, e: &Expr) -> fmt::Result {
    match &e.kind {
        ExprKind::Int(n) => write!(f, "{n}"),
        ExprKind::Bool(b) => write!(f, "{b}"),
        ExprKind::Var(x) => f.write_str(x),
        ExprKind::VarAtPre(x) => write!(f, "{x}@pre"),
        ExprKind::Access(a, i) => {
            write_at(f, a, POSTFIX)?;
            f.write_char('[')?;
            write_expr(f, i)?;
            f.write_char(']')
        }
        ExprKind::Size(a) => {
            f.write_char('|')?;
            write_at(f, a, ADD)?;
            f.write_char('|')
        }
        ExprKind::Update(a, i, v) => {
            f.write_str("update ")?;
            write_at(f, a, ADD)?;
            f.write_str(" on ")?;
            write_at(f, i, ADD)?;
            f.write_str(" with ")?;
            write_at(f, v, ADD)
        }
        ExprKind::Unary(UnOp::Neg, x) => {
            f.write_char('-')?;
            // `-3` would read back as a literal, and `--x` as two tokens
            let needs_parens = matches!(x.kind, ExprKind::Int(_))
                || matches!(x.kind, ExprKind::Unary(UnOp::Neg, _));
            if needs_parens {
                f.write_char('(')?;
                write_expr(f, x)?;
                f.write_char(')')
            } else {
                write_at(f, x, NEG)
            }
        }
        ExprKind::Unary(UnOp::Not, x) => {
            f.write_char('!')?;
            write_at(f, x, NOT)
        }
        ExprKind::Binary(op, l, r) => {
            let lv = level(e);
            let (lmin, rmin) = match op {
                BinOp::Implies => (IMPLIES + 1, IMPLIES),
                _ if op.is_comparison() => (CMP + 1, CMP + 1),
                _ => (lv, lv + 1),
            };
            write_at(f, l, lmin)?;
            write!(f, " {} ", op.symbol())?;
            // a right operand extending to the end may stay unparenthesized
            if level(r) == OPEN && rmin <= IMPLIES {
                write_expr(f, r)
            } else {
                write_at(f, r, rmin)
            }
        }
        ExprKind::Quant {
            kind,
            var,
            lo,
            hi,
            body,
        } => {
            let kw = match kind {
                QuantKind::Forall => "forall-",
                QuantKind::Exists => "exists-",
            };
            write!(f, "{kw}{var} / ")?;
            write_at(f, lo, ADD)?;
            write!(f, " <= {var} < ")?;
            write_at(f, hi, ADD)?;
            f.write_str(" : ")?;
            write_expr(f, body)
        }
        ExprKind::Exists { vars, body } => {
            f.write_str("exists ")?;
            for (n, b) in vars.iter().enumerate() {
                if n > 0 {
                    f.write_str(", ")?;
                }
                f.write_str(&b.name)?;
            }
            f.write_str(" (")?;
            write_expr(f, body)?;
            f.write_char(')')
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

fn origin_note(o: Origin) -> &'static str {
    match o {
        Origin::Declared => "",
        Origin::Inferred => "  // inferred",
        Origin::Guessed => "  // guessed",
        Origin::ByConstruction => "  // by construction",
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_clause(out: &mut String, depth: usize, marker: &str, c: &Clause) {
    indent(out, depth);
    let _ = writeln!(out, "{marker} {}{}", c.expr, origin_note(c.origin));
}

fn write_sentence(out: &mut String, s: &Sentence, depth: usize) {
    match &s.kind {
        SentenceKind::Seq(..) => {
            for item in s.flatten() {
                write_sentence(out, item, depth);
            }
        }
        SentenceKind::Skip => {
            indent(out, depth);
            out.push_str("skip\n");
        }
        SentenceKind::Assign { target, value } => {
            indent(out, depth);
            let _ = writeln!(out, "{target} <- {value}");
        }
        SentenceKind::Local { name, init } => {
            indent(out, depth);
            let _ = writeln!(out, "local {name} <- {init}");
        }
        SentenceKind::If {
            guard,
            then_branch,
            else_branch,
        } => {
            indent(out, depth);
            let _ = writeln!(out, "if {guard} then");
            write_sentence(out, then_branch, depth + 1);
            indent(out, depth);
            out.push_str("else\n");
            write_sentence(out, else_branch, depth + 1);
            indent(out, depth);
            out.push_str("fi\n");
        }
        SentenceKind::While {
            guard,
            invariants,
            variant,
            body,
        } => {
            indent(out, depth);
            let _ = writeln!(out, "while {guard}");
            for c in invariants {
                write_clause(out, depth + 2, ":?!", c);
            }
            indent(out, depth + 2);
            let _ = writeln!(out, ":# {variant}");
            indent(out, depth);
            out.push_str("do\n");
            write_sentence(out, body, depth + 1);
            indent(out, depth);
            out.push_str("od\n");
        }
        SentenceKind::Call { callee, args } => {
            indent(out, depth);
            let _ = writeln!(out, "call {callee}({})", args.join(", "));
        }
        SentenceKind::For {
            index,
            lo,
            hi,
            body,
        } => {
            indent(out, depth);
            let _ = writeln!(out, "for {index} from {lo} to {hi} do");
            write_sentence(out, body, depth + 1);
            indent(out, depth);
            out.push_str("od\n");
        }
        SentenceKind::Map { body, array, index } => {
            indent(out, depth);
            out.push_str("map\n");
            write_sentence(out, body, depth + 1);
            indent(out, depth);
            let _ = writeln!(out, "in {array}[..{index}..]");
        }
    }
}

pub fn print_sentence(s: &Sentence) -> String {
    let mut out = String::new();
    write_sentence(&mut out, s, 0);
    out
}

pub fn print_procedure(p: &Procedure) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}({})", p.name, p.params.join(", "));
    for c in &p.pre {
        write_clause(&mut out, 0, ":?", c);
    }
    for c in &p.post {
        write_clause(&mut out, 0, ":!", c);
    }
    out.push_str("{\n");
    write_sentence(&mut out, &p.body, 1);
    out.push_str("}\n");
    out
}

pub fn pretty_print(prog: &Program) -> String {
    prog.procedures
        .iter()
        .map(print_procedure)
        .collect::<Vec<_>>()
        .join("\n")
}
