//! Sessions, turns, nuggets, criterion schemas and score tables.

mod scores;
mod sequence;
pub(crate) mod validate;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::scorers::fairness::AttributeSetConfig;
use crate::weighting::WeightingConfig;

pub use scores::{resolve_scores, Coverage, ResolvedScores, ScoreIndex};
pub use sequence::{flatten_corpus, nugget_sequence, turn_offsets};
pub use validate::{
    validate_corpus, validate_dissatisfaction, validate_mentions, ValidationReport, Violation,
};

/// Nugget type: a factual claim (`F`) or a dialogue act (`O`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NuggetKind {
    F,
    O,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    System,
}

/// An atomic unit extracted from one turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nugget {
    pub nugget_id: String,
    pub kind: NuggetKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dialogue_act: Option<String>,
    /// Character offset (Unicode scalar values) of the nugget within its turn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    /// 1-based, consecutive within a session. Ignored inside conversation
    /// trees, where paths are re-indexed when materialized.
    #[serde(default)]
    pub index: u32,
    pub speaker: Speaker,
    pub text: String,
    #[serde(default)]
    pub nuggets: Vec<Nugget>,
}

impl Turn {
    /// Length of the turn text in Unicode scalar values.
    pub fn char_len(&self) -> u64 {
        self.text.chars().count() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub system_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_id: Option<String>,
    pub turns: Vec<Turn>,
}

impl Session {
    pub fn turn(&self, index: u32) -> Option<&Turn> {
        self.turns.iter().find(|t| t.index == index)
    }

    pub fn last_turn_index(&self) -> Option<u32> {
        self.turns.last().map(|t| t.index)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    #[default]
    Nugget,
    Turn,
}

/// How a turn-level score enters the nugget framework.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnLevelMode {
    /// One synthetic nugget per turn, at the position of the turn's first nugget.
    #[default]
    Synthetic,
    /// The first nugget of the turn carries the score, later nuggets score 0.
    PaperLiteral,
}

/// Criteria whose scores are computed from annotations instead of being
/// read from a score table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scorer", rename_all = "snake_case")]
pub enum DerivedScorer {
    FairExposure {
        attribute_sets: Vec<AttributeSetConfig>,
    },
    Recoverability {
        #[serde(default = "default_recoverability_threshold")]
        threshold: f64,
    },
    Conciseness {
        #[serde(default = "default_conciseness_slack")]
        slack: f64,
        #[serde(default = "default_correctness_criterion")]
        correctness_criterion: String,
    },
}

pub const DEFAULT_RECOVERABILITY_THRESHOLD: f64 = 0.6;
pub const DEFAULT_CONCISENESS_SLACK: f64 = 2.0;

fn default_recoverability_threshold() -> f64 {
    DEFAULT_RECOVERABILITY_THRESHOLD
}

fn default_conciseness_slack() -> f64 {
    DEFAULT_CONCISENESS_SLACK
}

fn default_correctness_criterion() -> String {
    "correctness".to_string()
}

fn default_kinds() -> BTreeSet<NuggetKind> {
    [NuggetKind::F, NuggetKind::O].into_iter().collect()
}

fn default_weight() -> f64 {
    1.0
}

/// One auditing dimension of the schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionConfig {
    pub name: String,
    /// Criterion weight, must be positive.
    #[serde(default = "default_weight")]
    pub weight: f64,
    #[serde(default)]
    pub level: Level,
    /// Nugget kinds that belong to this criterion's nugget set.
    #[serde(default = "default_kinds")]
    pub kinds: BTreeSet<NuggetKind>,
    /// Whether user-turn nuggets occupy positions.
    #[serde(default)]
    pub include_user_nuggets: bool,
    #[serde(default)]
    pub weighting: WeightingConfig,
    #[serde(default)]
    pub turn_level_mode: TurnLevelMode,
    /// Set for names outside the built-in criterion vocabulary.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub custom: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived: Option<DerivedScorer>,
}

impl CriterionConfig {
    /// A nugget-level criterion over both nugget kinds with uniform weights.
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            weight: 1.0,
            level: Level::Nugget,
            kinds: default_kinds(),
            include_user_nuggets: false,
            weighting: WeightingConfig::default(),
            turn_level_mode: TurnLevelMode::Synthetic,
            custom: false,
            derived: None,
        }
    }

    pub fn key(&self) -> String {
        criterion_key(&self.name)
    }
}

/// The full set of criteria with their weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub criteria: Vec<CriterionConfig>,
}

impl Schema {
    pub fn criterion(&self, name: &str) -> Option<&CriterionConfig> {
        let key = criterion_key(name);
        self.criteria.iter().find(|c| c.key() == key)
    }
}

/// Built-in criterion vocabulary, criterion 0 first.
pub const CRITERIA: [&str; 21] = [
    "fluency",
    "coherence",
    "sensibleness",
    "correctness",
    "groundedness",
    "explainability",
    "sincerity",
    "sufficiency",
    "conciseness",
    "modesty",
    "engagingness",
    "recoverability",
    "originality",
    "fair_exposure",
    "fair_treatment",
    "harmlessness",
    "consistency",
    "retentiveness",
    "robustness",
    "customisability",
    "adaptability",
];

/// Normalized lookup key: lowercase, runs of spaces and hyphens become `_`.
pub fn criterion_key(name: &str) -> String {
    let mut key = String::with_capacity(name.len());
    for part in name
        .trim()
        .split(|c: char| c.is_whitespace() || c == '-' || c == '_')
        .filter(|p| !p.is_empty())
    {
        if !key.is_empty() {
            key.push('_');
        }
        key.push_str(&part.to_lowercase());
    }
    match key.as_str() {
        "robustness_to_input_variations" => "robustness".to_string(),
        "customizability" => "customisability".to_string(),
        _ => key,
    }
}

pub fn is_known_criterion(name: &str) -> bool {
    CRITERIA.contains(&criterion_key(name).as_str())
}

/// One score record as stored in score-table files.
///
/// Session entries are keyed by `turn_index`; entries on conversation trees
/// use `session_id` = tree id and either `node_id` (turn-level) or
/// `nugget_id` (nugget-level).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub criterion: String,
    pub session_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_index: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nugget_id: Option<String>,
    pub score: f64,
    /// `file:line` the record was read from, for diagnostics.
    #[serde(skip)]
    pub origin: Option<String>,
}

/// Externally supplied or derived scores for one criterion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub criterion: String,
    pub entries: Vec<ScoreRecord>,
}

impl ScoreTable {
    pub fn new(criterion: impl Into<String>) -> Self {
        Self {
            criterion: criterion.into(),
            entries: Vec::new(),
        }
    }

    /// Appends a session-keyed entry.
    pub fn push(&mut self, session_id: &str, turn_index: u32, nugget_id: Option<&str>, score: f64) {
        self.entries.push(ScoreRecord {
            criterion: self.criterion.clone(),
            session_id: session_id.to_string(),
            turn_index: Some(turn_index),
            node_id: None,
            nugget_id: nugget_id.map(str::to_string),
            score,
            origin: None,
        });
    }
}

/// A nugget (or a synthetic per-turn item) placed in a criterion's sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionedNugget {
    pub session_id: String,
    pub turn_index: u32,
    /// `None` for synthetic turn-level items.
    pub nugget_id: Option<String>,
    /// 1-based rank within the session's sequence for the criterion.
    pub index_position: u32,
    /// Character offset within the session's concatenated text (offset mode only).
    pub offset_position: Option<u64>,
    pub in_final_turn: bool,
    pub speaker: Speaker,
}
