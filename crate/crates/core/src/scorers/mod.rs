//! Criteria scored from annotations: fair exposure, conciseness and
//! recoverability. Every other criterion is passed through from score tables.

pub mod conciseness;
pub mod fairness;
pub mod recoverability;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SwanError};
use crate::model::{criterion_key, CriterionConfig, ScoreIndex, ScoreTable};

pub use conciseness::{conciseness_scores, conciseness_turn_score};
pub use fairness::{
    cumulative_fairness_series, distribution_similarity, fairness_nugget_score, fairness_scores,
    AttributeSetConfig, Divergence, SeriesPoint,
};
pub use recoverability::recoverability_scores;

/// Group mention counts for one nugget and attribute set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionEntry {
    pub session_id: String,
    pub nugget_id: String,
    pub attribute_set: String,
    pub counts: BTreeMap<String, u64>,
    #[serde(skip)]
    pub origin: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MentionTable {
    pub entries: Vec<MentionEntry>,
}

impl MentionTable {
    /// Mentions of one nugget, keyed by attribute set.
    pub fn for_nugget(
        &self,
        session_id: &str,
        nugget_id: &str,
    ) -> BTreeMap<&str, &BTreeMap<String, u64>> {
        self.entries
            .iter()
            .filter(|e| e.session_id == session_id && e.nugget_id == nugget_id)
            .map(|e| (e.attribute_set.as_str(), &e.counts))
            .collect()
    }
}

/// Estimated dissatisfaction of a user turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissatisfactionEntry {
    pub session_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_index: Option<u32>,
    /// For conversation trees, in place of `turn_index`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_id: Option<String>,
    pub value: f64,
    #[serde(skip)]
    pub origin: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DissatisfactionTable {
    pub entries: Vec<DissatisfactionEntry>,
}

/// Forwards an externally judged table to the engine unchanged.
pub fn passthrough_scores(table: &ScoreTable, cfg: &CriterionConfig) -> Result<ScoreIndex> {
    if criterion_key(&table.criterion) != cfg.key() {
        return Err(SwanError::UnknownCriterion(table.criterion.clone()));
    }
    Ok(ScoreIndex::new(table))
}
