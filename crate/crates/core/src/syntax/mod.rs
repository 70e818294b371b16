//! Concrete syntax: AST, lexer, parser and pretty-printer.

pub mod ast;
mod lexer;
mod parser;
mod printer;

use std::fmt;

use thiserror::Error;

pub use ast::*;
pub use lexer::is_keyword;
pub use printer::{pretty_print, print_procedure, print_sentence};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    MissingElse,
    MissingInvariant,
    MissingVariant,
    DuplicateProcedure,
    DuplicateParameter,
    AliasedCall,
    RecursiveCall,
    UndefinedProcedure,
    /// Internal-only syntax (unbounded `exists`) used in a source program.
    InternalSyntax,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParseErrorKind::Lexical => "lexical error",
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::MissingElse => "missing else",
            ParseErrorKind::MissingInvariant => "missing invariant",
            ParseErrorKind::MissingVariant => "bad variant",
            ParseErrorKind::DuplicateProcedure => "duplicate procedure",
            ParseErrorKind::DuplicateParameter => "duplicate parameter",
            ParseErrorKind::AliasedCall => "aliased call",
            ParseErrorKind::RecursiveCall => "recursive call",
            ParseErrorKind::UndefinedProcedure => "undefined procedure",
            ParseErrorKind::InternalSyntax => "internal syntax",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Error)]
#[error("{span}: {kind}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: Span,
    pub message: String,
    /// Token descriptions the parser would have accepted, when known.
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, span: Span, message: String) -> Self {
        ParseError {
            kind,
            span,
            message,
            expected: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Accept the unbounded `exists v1, v2 (body)` form produced by the calculi.
    pub internal: bool,
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    parse_program_with(src, ParseOptions::default())
}

pub fn parse_program_with(src: &str, opts: ParseOptions) -> Result<Program, ParseError> {
    parser::Parser::new(src, opts)?.program()
}

/// Parses a single expression, accepting internal syntax.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = parser::Parser::new(src, ParseOptions { internal: true })?;
    let e = p.expr()?;
    if !p.at_eof() {
        return Err(p.trailing_error());
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAX: &str = "
max(a, b, c)
:? true
:! (a >= b => c = a) && (a < b => c = b)
:! a = a@pre && b = b@pre
{
  if a >= b then c <- a else c <- b fi
}";

    #[test]
    fn parses_max_contract() {
        let prog = parse_program(MAX).unwrap();
        let p = &prog.procedures[0];
        assert_eq!(p.name, "max");
        assert_eq!(p.params, vec!["a", "b", "c"]);
        assert_eq!(p.pre.len(), 1);
        assert!(p.pre[0].expr.is_true());
        assert_eq!(p.post.len(), 2);
        assert_eq!(
            p.post[1].expr,
            parse_expr("a = a@pre && b = b@pre").unwrap()
        );
        assert!(matches!(p.body.kind, SentenceKind::If { .. }));
    }

    #[test]
    fn empty_contract_and_skip() {
        let prog = parse_program("p(x) { skip }").unwrap();
        let p = &prog.procedures[0];
        assert!(p.pre.is_empty() && p.post.is_empty());
        assert_eq!(p.body.kind, SentenceKind::Skip);
    }

    #[test]
    fn chained_comparison_is_a_conjunction() {
        assert_eq!(
            parse_expr("1 <= i <= |A|").unwrap(),
            parse_expr("1 <= i && i <= |A|").unwrap()
        );
    }

    #[test]
    fn implication_is_right_associative() {
        assert_eq!(
            parse_expr("a => b => c").unwrap(),
            parse_expr("a => (b => c)").unwrap()
        );
    }

    #[test]
    fn precedence_levels() {
        assert_eq!(
            parse_expr("!a && b || c").unwrap(),
            parse_expr("((!a) && b) || c").unwrap()
        );
        assert_eq!(
            parse_expr("x + y * z < w").unwrap(),
            parse_expr("(x + (y * z)) < w").unwrap()
        );
    }

    #[test]
    fn array_assignment_sugar() {
        let prog = parse_program("p(A, i) { A[i] <- A[i] + 1 }").unwrap();
        let expected = parse_program("p(A, i) { A <- update A on i with A[i] + 1 }").unwrap();
        assert_eq!(prog, expected);
    }

    #[test]
    fn rejects_missing_else() {
        let err = parse_program("p(x) { if x > 0 then x <- 1 fi }").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MissingElse);
    }

    #[test]
    fn rejects_aliased_and_recursive_calls() {
        let src = "q(a, b) { a <- b + 1 } p(x) { call q(x, x) }";
        assert_eq!(
            parse_program(src).unwrap_err().kind,
            ParseErrorKind::AliasedCall
        );
        let src = "p(x) { call p(x) }";
        assert_eq!(
            parse_program(src).unwrap_err().kind,
            ParseErrorKind::RecursiveCall
        );
        let src = "p(x) { call q(x) } q(y) { y <- 1 }";
        assert_eq!(
            parse_program(src).unwrap_err().kind,
            ParseErrorKind::UndefinedProcedure
        );
    }

    #[test]
    fn rejects_duplicate_procedure() {
        let err = parse_program("p(x) { x <- 1 } p(y) { y <- 2 }").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateProcedure);
    }

    #[test]
    fn while_needs_invariant_and_one_variant() {
        let err = parse_program("p(x) { while x > 0 :# x do x <- x - 1 od }").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MissingInvariant);
        let err =
            parse_program("p(x) { while x > 0 :?! true do x <- x - 1 od }").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MissingVariant);
        let err = parse_program("p(x) { while x > 0 :?! true :# x :# x do x <- x - 1 od }")
            .unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MissingVariant);
    }

    #[test]
    fn syntax_error_reports_position_and_expected() {
        let err = parse_program("p(x) {\n  x <- \n}").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert_eq!((err.span.line, err.span.col), (3, 1));
        assert!(err.expected.contains(&"expression".to_string()));
    }

    #[test]
    fn unbounded_exists_is_internal_only() {
        let err = parse_program("p(x) :! exists y (y = x) { x <- 1 }").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::InternalSyntax);
        let prog = parse_program_with(
            "p(x) :! exists y (y = x) { x <- 1 }",
            ParseOptions { internal: true },
        )
        .unwrap();
        assert!(prog.procedures[0].post[0].expr.has_unbounded_exists());
    }

    #[test]
    fn negative_literals_fold() {
        assert_eq!(
            parse_expr("-3").unwrap().kind,
            ExprKind::Int((-3).into())
        );
        assert!(matches!(
            parse_expr("-x").unwrap().kind,
            ExprKind::Unary(UnOp::Neg, _)
        ));
    }
}
