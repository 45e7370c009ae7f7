use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("invalid type `{input}`: {message}")]
pub struct TypeParseError {
    pub input: String,
    pub message: String,
}

/// Malformed query text. `position` is the zero-based token index.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("syntax error at token {position} (found {found}): expected one of {}", expected.join(", "))]
pub struct SyntaxError {
    pub position: usize,
    pub found: String,
    pub expected: Vec<String>,
}

/// Static type violation. `path` names the offending node from the root,
/// e.g. `$.inner.filter.lhs`.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("type error at {path}: {message}")]
pub struct TypeError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RuntimeError {
    #[error("no {table} named \"{name}\"")]
    LookupNotFound { name: String, table: String },
    #[error("{count} rows of {table} are named \"{name}\"")]
    LookupAmbiguous { name: String, table: String, count: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("query uses `{0}` but no value was supplied in the execution context")]
    MissingContext(&'static str),
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("query contains unfilled placeholder VALUE_{0}")]
    Placeholder(u32),
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("table {table}, field {field}: {message}")]
    Field {
        table: String,
        field: String,
        message: String,
    },
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("{0}")]
    Invalid(String),
}

/// One row of a knowledge-base table that failed validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub table: String,
    pub row: usize,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}[{}]: {}", self.table, self.row, self.message)
    }
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{} invalid rows, first: {}", .0.len(), .0[0])]
    Rows(Vec<RowError>),
    #[error("table {0} is not in the schema")]
    UnknownTable(String),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown nonterminal `{nonterminal}` in template {template}")]
    UnknownNonterminal { template: String, nonterminal: String },
    #[error("no template produces the root nonterminal `{0}`")]
    MissingRoot(String),
    #[error("invalid expansion config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("template DSL line {line}: {message}")]
pub struct DslError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}
