use thiserror::Error;

pub type Result<T, E = SwanError> = std::result::Result<T, E>;

/// Errors raised while scoring a (validated) corpus.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwanError {
    #[error("offset positions requested but nugget {nugget_id} in session {session_id} has no start offset")]
    MissingOffset {
        session_id: String,
        nugget_id: String,
    },

    #[error("criterion {criterion}: no score for session {session_id}, turn {turn_index}{}", nugget_suffix(.nugget_id))]
    MissingScore {
        criterion: String,
        session_id: String,
        turn_index: u32,
        nugget_id: Option<String>,
    },

    #[error("criterion {criterion}: score table mixes nugget-level and turn-level entries")]
    MixedLevels { criterion: String },

    #[error(
        "criterion {criterion}: score table level does not match the criterion level ({expected})"
    )]
    LevelMismatch { criterion: String, expected: String },

    #[error("criterion {criterion}: turn {turn_index} of session {session_id} has no nugget to carry its turn-level score")]
    UnattachableTurnScore {
        criterion: String,
        session_id: String,
        turn_index: u32,
    },

    #[error("length mismatch: {nuggets} nuggets, {weights} weights, {scores} scores")]
    LengthMismatch {
        nuggets: usize,
        weights: usize,
        scores: usize,
    },

    #[error("criterion {criterion}: WAN is undefined ({reason})")]
    UndefinedWan { criterion: String, reason: String },

    #[error("schema has no criteria")]
    EmptySchema,

    #[error("no result supplied for schema criterion {0}")]
    MissingCriterionResult(String),

    #[error("unknown criterion {0}")]
    UnknownCriterion(String),

    #[error("unknown attribute set {0}")]
    UnknownAttributeSet(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {left} vs {right} groups")]
    DimensionMismatch { left: usize, right: usize },

    #[error("distribution is not normalized (sums to {sum})")]
    NotNormalized { sum: f64 },

    #[error("turn {turn_index} of session {session_id} has empty text")]
    EmptyTurnText { session_id: String, turn_index: u32 },

    #[error("tree {tree_id}: more than {cap} root-to-leaf paths; raise the path cap explicitly")]
    PathCapExceeded { tree_id: String, cap: usize },

    #[error("invalid conversation tree {tree_id}: {message}")]
    InvalidTree { tree_id: String, message: String },

    #[error("comparison needs at least two systems, found {0}")]
    TooFewSystems(usize),

    #[error("no seed is shared by two or more systems")]
    NoSharedSeeds,
}

fn nugget_suffix(nugget_id: &Option<String>) -> String {
    match nugget_id {
        Some(id) => format!(", nugget {id}"),
        None => String::new(),
    }
}
