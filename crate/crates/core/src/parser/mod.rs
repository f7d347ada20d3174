//! Concrete syntax: `.bossl` specification files and emitted programs.

pub mod lexer;
pub mod program;
pub mod spec;

use thiserror::Error;

use crate::logic::wf::Violation;
use lexer::Pos;

pub use program::{ast_size, parse_program, print_program};
pub use spec::{parse_spec, print_spec, SpecFile};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("no goal: the file declares no function specification")]
    NoGoal,
    #[error("ill-formed specification:\n{}", fmt_violations(.0))]
    WellFormed(Vec<Violation>),
}

impl ParseError {
    pub fn at(pos: Pos, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: pos.line,
            col: pos.col,
            msg: msg.into(),
        }
    }
}

fn fmt_violations(vs: &[Violation]) -> String {
    vs.iter()
        .map(|v| format!("  {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}
