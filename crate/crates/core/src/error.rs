use thiserror::Error;

use crate::report::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },

    #[error("unknown atomic proposition `{0}`")]
    UnknownProposition(String),

    #[error("letter {letter:#b} is outside the alphabet over {ap_count} propositions")]
    LetterOutOfRange { letter: u32, ap_count: usize },

    #[error("automaton has no transition from state {state} on letter {letter}")]
    MissingTransition { state: usize, letter: String },

    #[error("automaton has more than one transition from state {state} on letter {letter}")]
    DuplicateTransition { state: usize, letter: String },

    #[error("state index {index} out of range ({count} states) in {context}")]
    DanglingState {
        index: usize,
        count: usize,
        context: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation failed:\n{0}")]
    Validation(ValidationReport),

    #[error("atomic proposition sets differ: model {model:?}, automaton {automaton:?}")]
    ApMismatch { model: Vec<String>, automaton: Vec<String> },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{agent} controller has no allowed (next node, action) for node {node}, observation {observation}")]
    NonViable {
        agent: crate::controller::Agent,
        node: usize,
        observation: usize,
    },

    #[error("absorption system is singular (pivot {pivot:e} below tolerance)")]
    Singular { pivot: f64 },

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("episode did not reach a recurrent class within {0} steps")]
    StepCap(usize),

    #[error("enumeration too large: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
