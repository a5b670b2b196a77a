//! The POWL construction language (PCL).
//!
//! LLM output is never executed as general-purpose code. It is parsed as a
//! small closed language whose only operations are the model constructors:
//!
//! ```text
//! login  = xor(activity("create account"), activity("log in"))
//! select = loop(activity("select item"), silent())
//! order  = partial_order([login, select], [(0, 1)])
//! final(order)
//! ```
//!
//! [`run_pcl`] chains [`parse`], [`check`] and [`interpret`]. Every failure is
//! a [`PclError`] whose message is written to be sent back to the model as
//! repair feedback.

mod check;
mod interp;
pub mod lexer;
mod parser;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use check::check;
pub use interp::interpret;
pub use parser::{parse, EdgeLit, Expr, PclProgram, Statement};

use crate::powl::PowlNode;

pub const MAX_SOURCE_CHARS: usize = 20_000;
pub const MAX_STATEMENTS: usize = 500;
/// Maximum bracket/call nesting inside one expression.
pub const MAX_NESTING: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Lex,
    Parse,
    UnknownFunction,
    Arity,
    UndefinedIdent,
    Reassignment,
    ReuseOfSubmodel,
    UnusedSubmodel,
    BadEdge,
    CyclicOrder,
    InvalidLabel,
    NoFinal,
    LimitExceeded,
    ForbiddenConstruct,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Lex => "lex",
            ErrorKind::Parse => "parse",
            ErrorKind::UnknownFunction => "unknown-function",
            ErrorKind::Arity => "arity",
            ErrorKind::UndefinedIdent => "undefined-ident",
            ErrorKind::Reassignment => "reassignment",
            ErrorKind::ReuseOfSubmodel => "reuse-of-submodel",
            ErrorKind::UnusedSubmodel => "unused-submodel",
            ErrorKind::BadEdge => "bad-edge",
            ErrorKind::CyclicOrder => "cyclic-order",
            ErrorKind::InvalidLabel => "invalid-label",
            ErrorKind::NoFinal => "no-final",
            ErrorKind::LimitExceeded => "limit-exceeded",
            ErrorKind::ForbiddenConstruct => "forbidden-construct",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{kind} error at {location}: {message}")]
pub struct PclError {
    pub kind: ErrorKind,
    pub location: Location,
    pub message: String,
}

impl PclError {
    pub fn new(kind: ErrorKind, location: Location, message: String) -> Self {
        debug_assert!(!message.is_empty());
        PclError {
            kind,
            location,
            message,
        }
    }
}

/// Parses, checks and interprets `source`, returning the first error found.
pub fn run_pcl(source: &str) -> Result<PowlNode, PclError> {
    let program = parse(source)?;
    check(&program)?;
    interpret(&program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powl::{make_activity, make_loop, make_silent};

    #[test]
    fn run_minimal() {
        assert_eq!(
            run_pcl("a = activity(\"pay\") final(a)").unwrap(),
            make_activity("pay").unwrap()
        );
        assert_eq!(run_pcl("").unwrap_err().kind, ErrorKind::Parse);
    }

    #[test]
    fn item_selection_loop() {
        let m = run_pcl("a = activity(\"select item\") l = loop(a, silent()) final(l)").unwrap();
        assert_eq!(
            m,
            make_loop(make_activity("select item").unwrap(), make_silent()).unwrap()
        );
    }

    #[test]
    fn semicolons_and_inline_calls() {
        let m = run_pcl("x = xor(activity(\"a\"), silent()); final(x);").unwrap();
        assert!(matches!(m, PowlNode::Xor { .. }));
    }

    #[test]
    fn error_display_is_self_contained() {
        let e = run_pcl("a = activity(\"x\")\nb = xor(a, a)\nfinal(b)").unwrap_err();
        let text = e.to_string();
        assert!(text.starts_with("reuse-of-submodel error at line 2, column 12"), "{text}");
        assert!(text.contains("`a`"));
    }
}
