//! SQL subset: lexer, parser, printer and name resolution.

pub mod ast;
mod lexer;
mod parser;
mod printer;
pub mod resolve;
pub mod schema;

use thiserror::Error;

pub use ast::*;
pub use lexer::split_statements;
pub use parser::{parse_query, parse_sql};
pub use resolve::{infer_schema, resolve_query, ResolvedQuery};
pub use schema::{Catalog, Column, Schema, SqlType};

use crate::value::ValueKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SqlError {
    #[error("syntax error at line {line}, column {col}: expected {expected}")]
    Syntax { line: usize, col: usize, expected: String },
    #[error("unsupported feature at line {line}, column {col}: {feature}")]
    Unsupported { feature: String, line: usize, col: usize },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("ambiguous column `{0}`")]
    AmbiguousColumn(String),
    #[error("arity mismatch for `{relation}`: expected {expected}, found {found}")]
    ArityMismatch { relation: String, expected: usize, found: usize },
    #[error("type mismatch in {context}: {left} vs {right}")]
    TypeMismatch { context: String, left: ValueKind, right: ValueKind },
    #[error("relation `{0}` is already defined")]
    DuplicateRelation(String),
    #[error("duplicate alias `{0}` in FROM clause")]
    DuplicateAlias(String),
    #[error("unsupported: {0}")]
    UnsupportedSemantics(String),
}
