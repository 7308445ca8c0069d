use thiserror::Error;

use crate::model::StateLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("failed to parse {what} at `{path}`: {message}")]
    Parse {
        what: &'static str,
        path: String,
        message: String,
    },

    #[error("unsupported document format `{found}` (expected `{expected}`)")]
    Format { expected: &'static str, found: String },

    #[error("unknown component `{0}`")]
    UnknownComponent(String),

    #[error("unknown state `{state}` for component `{component}`")]
    UnknownState { component: String, state: String },

    #[error("invalid directive #{index}: {reason}")]
    InvalidDirective { index: usize, reason: String },

    #[error("directive #{index}: prefix event {event} not found in tree")]
    PrefixNotFound { index: usize, event: StateLabel },

    #[error("directives #{first} and #{second} overlap: {reason}")]
    DirectiveConflict {
        first: usize,
        second: usize,
        reason: String,
    },

    #[error("path index {index} out of range (path count {count})")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("no probability entry for {0}")]
    MissingProbability(StateLabel),

    #[error("component `{component}` has {states} states; parallel redundancy needs exactly 2")]
    UnsupportedRedundancy { component: String, states: usize },

    #[error("component id `{0}` already exists in the model")]
    IdCollision(String),

    #[error("complete tree has {paths} paths, exceeding the enumeration cap of {cap}")]
    TooLarge { paths: u128, cap: u64 },

    #[error("model hash mismatch: tree references {expected}, embedded model hashes to {found}")]
    ModelHash { expected: String, found: String },

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("csv: {0}")]
    Csv(String),
}
