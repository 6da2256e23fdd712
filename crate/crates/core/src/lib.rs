//! Nugget-based auditing scores for textual conversational systems.
//!
//! A corpus of sampled, nugget-annotated conversation sessions is scored per
//! criterion with a position-aware weighted average over nuggets (WAN), and
//! the criteria are combined into one schema-weighted score (SWAN).
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: sessions, turns, nuggets, schemas and score tables, their
//!   validation, and per-criterion nugget sequences with positions.
//! * [`weighting`]: nugget weights (uniform, linear decay, recency, exponential).
//! * [`engine`]: WAN, SWAN, macro aggregation and worst-first contribution ranking.
//! * [`scorers`]: criteria computed here rather than judged externally
//!   (fair exposure, conciseness, recoverability).
//! * [`stochastic`]: conversation trees and expectation over root-to-leaf paths.
//! * [`audit`]: the pipeline from a corpus to criterion results.
//! * [`io`]: file formats, corpus loading, reports and system comparison.

pub mod audit;
pub mod engine;
pub mod error;
pub mod io;
pub mod model;
pub mod scorers;
pub mod stochastic;
pub mod weighting;

pub use audit::{Annotations, AuditOptions};
pub use engine::{Aggregation, AuditResult, Contribution, CriterionResult, UndefinedPolicy};
pub use error::{Result, SwanError};
pub use model::{
    CriterionConfig, Nugget, NuggetKind, PositionedNugget, Schema, ScoreTable, Session, Speaker,
    Turn, ValidationReport,
};
pub use weighting::{WeightVector, WeightingConfig};
