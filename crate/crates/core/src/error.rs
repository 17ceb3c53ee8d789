//! Crate-wide error type.

use thiserror::Error;

use crate::ids::Id;

pub type Result<T> = std::result::Result<T, Error>;

/// Position of a token in a source document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{location}: syntax error: {message}")]
    Syntax {
        file: String,
        location: Location,
        message: String,
    },

    #[error("{file}:{location}: undefined prefix '{prefix}'")]
    UndefinedPrefix {
        file: String,
        location: Location,
        prefix: String,
    },

    #[error("{file}:{location}: malformed literal: {message}")]
    MalformedLiteral {
        file: String,
        location: Location,
        message: String,
    },

    #[error("{file}: manifest error: {message}")]
    Manifest { file: String, message: String },

    #[error("unknown framework kind '{kind}' (expected internal, core, privacy, or custom)")]
    UnknownKind { kind: String },

    #[error("framework dependency cycle: {}", cycle.join(" -> "))]
    DependencyCycle { cycle: Vec<String> },

    #[error("framework '{framework}' depends on '{missing}', which was not found")]
    MissingDependency { framework: String, missing: String },

    #[error("cycle among anonymous nodes during skolemization: {}", handles.join(", "))]
    SkolemCycle { handles: Vec<String> },

    #[error("unknown container '{0}'")]
    UnknownContainer(Id),

    #[error("unknown label '{id}'{}", context.as_ref().map(|c| format!(" ({c})")).unwrap_or_default())]
    UnknownLabel { id: Id, context: Option<String> },

    #[error("unknown facet '{0}'")]
    UnknownFacet(Id),

    #[error("unknown framework '{0}'")]
    UnknownFramework(Id),

    #[error("unknown scope '{0}'")]
    UnknownScope(Id),

    #[error("container '{container}' is not visible in scope '{scope}'")]
    ScopeVisibility { container: Id, scope: Id },

    #[error("malformed condition at node '{node}': {message}")]
    MalformedCondition { node: Id, message: String },

    #[error("malformed rule declaration at node '{node}': {message}")]
    MalformedRule { node: Id, message: String },

    #[error("environment error: {0}")]
    Environment(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("parameter '{parameter}' of label '{label}' could not be resolved and no default is declared")]
    ParameterUnresolved { label: Id, parameter: String },

    #[error("values {left} and {right} cannot be compared with {operator}")]
    IncomparableValues {
        left: String,
        right: String,
        operator: String,
    },

    #[error("k-anonymity is undefined for an empty record table")]
    EmptyRecordTable,

    #[error("record table error: {0}")]
    RecordTable(String),

    #[error("assertion ({container}, {label}, {scope}, {framework}) not found")]
    AssertionNotFound {
        container: Id,
        label: Id,
        scope: Id,
        framework: Id,
    },

    #[error("cache format version {found} unsupported (expected {expected})")]
    CacheVersion { found: u32, expected: u32 },

    #[error("cache is stale: input documents changed since it was written")]
    CacheStale,

    #[error("cache file corrupt: {0}")]
    CacheCorrupt(String),

    #[error("validation failed with {0} error(s)")]
    ValidationFailed(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn syntax(file: &str, line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            file: file.to_string(),
            location: Location { line, column },
            message: message.into(),
        }
    }
}
