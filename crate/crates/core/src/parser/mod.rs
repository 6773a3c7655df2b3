//! Text to AST and back for the supported Alloy fragment.

mod lexer;
mod normalize;
mod parse;
mod render;

pub use normalize::normalize;
pub use parse::{parse_candidate, parse_formula_body};
pub use render::{render, render_expr};

use thiserror::Error;

/// A syntax, name or arity error with a 1-based position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message} (near `{snippet}`)")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub snippet: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>, snippet: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into(), snippet: snippet.into() }
    }
}
