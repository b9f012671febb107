//! MiniLang front end: lexing, parsing, statement numbering and extraction
//! of abstract statements.

pub mod ast;
mod extract;
mod lexer;
mod parser;
mod printer;

use std::fmt;

use thiserror::Error;

pub use ast::{Ast, StmtNo};
pub use extract::{
    expr_term, extract_concepts, list_variables, AbstractProgram, AbstractStatement, DeclaredVar, ExecKind, VarClass,
};
pub use lexer::{lex, TokKind, Token};
pub use parser::parse;
pub use printer::{expr as print_expr, print_ast};

/// Parse errors are collected up to this many before giving up.
pub const MAX_ERRORS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceProgram {
    pub name: String,
    pub text: String,
}

impl SourceProgram {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        Self { name: name.into(), text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: u32, col: u32, message: impl Into<String>) -> Self {
        Self { line, col, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

fn join(d: &[Diagnostic]) -> String {
    d.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("lex error: {}", join(.0))]
    Lex(Vec<Diagnostic>),
    #[error("parse error: {}", join(.0))]
    Parse(Vec<Diagnostic>),
    #[error("empty program")]
    EmptyProgram,
    #[error("unsupported construct `{construct}` at statement {stmt_no}")]
    UnsupportedConstruct { construct: String, stmt_no: StmtNo },
    #[error("variable `{name}` declared twice in one scope (statement {stmt_no})")]
    DuplicateDeclaration { name: String, stmt_no: StmtNo },
}

impl FrontendError {
    pub fn diagnostics(&self) -> Vec<String> {
        match self {
            FrontendError::Lex(d) | FrontendError::Parse(d) => d.iter().map(ToString::to_string).collect(),
            other => vec![other.to_string()],
        }
    }
}

/// Parse and extract in one step.
pub fn abstract_program(source: &SourceProgram) -> Result<(Ast, AbstractProgram), FrontendError> {
    let ast = parse(source)?;
    let ap = extract_concepts(&ast)?;
    Ok((ast, ap))
}
