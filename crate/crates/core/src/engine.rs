//! Weighted average nugget scores per criterion and their schema-weighted
//! combination.
//!
//! All sums run in the order the nuggets are given, which callers keep
//! canonical (ascending session id, then document order) so that results
//! are bit-reproducible.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SwanError};
use crate::model::{PositionedNugget, Schema};
use crate::weighting::WeightVector;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// One weighted mean over the nuggets of all sessions.
    #[default]
    Pooled,
    /// Unweighted mean of per-session WANs.
    Macro,
}

/// What to do with criteria whose WAN is undefined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UndefinedPolicy {
    #[default]
    Strict,
    SkipUndefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub session_id: String,
    pub turn_index: u32,
    /// `None` for synthetic turn-level items.
    pub nugget_id: Option<String>,
    pub index_position: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset_position: Option<u64>,
    pub weight: f64,
    pub score: f64,
    pub weighted_score: f64,
}

/// A sub-result folded into a criterion result: a session under macro
/// aggregation, or a path of a conversation tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: String,
    pub wan: Option<f64>,
    /// Share of this component in the combined value (1/n or path probability).
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub criterion: String,
    pub wan: Option<f64>,
    pub total_weight: f64,
    pub aggregation: Aggregation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<Component>,
    /// Components left out of `wan` because their own value was undefined.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<String>,
    pub contributions: Vec<Contribution>,
}

impl CriterionResult {
    pub fn is_defined(&self) -> bool {
        self.wan.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionWeight {
    pub criterion: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub swan: Option<f64>,
    pub criteria: Vec<CriterionResult>,
    pub dropped_criteria: Vec<String>,
    pub criterion_weights: Vec<CriterionWeight>,
}

impl AuditResult {
    pub fn criterion(&self, name: &str) -> Option<&CriterionResult> {
        let key = crate::model::criterion_key(name);
        self.criteria
            .iter()
            .find(|c| crate::model::criterion_key(&c.criterion) == key)
    }
}

/// Pooled WAN: `sum(w * s) / sum(w)` over the given nuggets.
///
/// Undefined (with a diagnostic) when the list is empty or carries no weight.
pub fn wan(
    criterion: &str,
    nuggets: &[PositionedNugget],
    weights: &WeightVector,
    scores: &[f64],
) -> Result<CriterionResult> {
    if nuggets.len() != weights.len() || nuggets.len() != scores.len() {
        return Err(SwanError::LengthMismatch {
            nuggets: nuggets.len(),
            weights: weights.len(),
            scores: scores.len(),
        });
    }
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    let mut contributions = Vec::with_capacity(nuggets.len());
    for ((u, &w), &s) in nuggets.iter().zip(&weights.weights).zip(scores) {
        let ws = w * s;
        numerator += ws;
        denominator += w;
        contributions.push(Contribution {
            session_id: u.session_id.clone(),
            turn_index: u.turn_index,
            nugget_id: u.nugget_id.clone(),
            index_position: u.index_position,
            offset_position: u.offset_position,
            weight: w,
            score: s,
            weighted_score: ws,
        });
    }
    let (value, diagnostic) = if nuggets.is_empty() {
        (None, Some("no scored nuggets".to_string()))
    } else if denominator.is_nan() || denominator <= 0.0 {
        (None, Some("total nugget weight is zero".to_string()))
    } else {
        (Some(numerator / denominator), None)
    };
    Ok(CriterionResult {
        criterion: criterion.to_string(),
        wan: value,
        total_weight: denominator,
        aggregation: Aggregation::Pooled,
        diagnostic,
        components: Vec::new(),
        dropped: Vec::new(),
        contributions,
    })
}

/// Nuggets, weights and scores of one session.
#[derive(Debug, Clone, Copy)]
pub struct SessionInput<'a> {
    pub nuggets: &'a [PositionedNugget],
    pub weights: &'a WeightVector,
    pub scores: &'a [f64],
}

/// Mean of per-session WANs; sessions with an undefined WAN are dropped.
pub fn wan_macro(criterion: &str, sessions: &[SessionInput<'_>]) -> Result<CriterionResult> {
    let mut per_session = Vec::with_capacity(sessions.len());
    for (i, s) in sessions.iter().enumerate() {
        let r = wan(criterion, s.nuggets, s.weights, s.scores)?;
        let id = s
            .nuggets
            .first()
            .map(|n| n.session_id.clone())
            .unwrap_or_else(|| format!("#{i}"));
        per_session.push((id, r));
    }
    let defined = per_session.iter().filter(|(_, r)| r.is_defined()).count();
    if defined == 0 {
        return Err(SwanError::UndefinedWan {
            criterion: criterion.to_string(),
            reason: "no session has a defined WAN".into(),
        });
    }

    let mass = 1.0 / defined as f64;
    let mut sum = 0.0;
    let mut total_weight = 0.0;
    let mut components = Vec::new();
    let mut dropped = Vec::new();
    let mut contributions = Vec::new();
    for (id, r) in per_session {
        total_weight += r.total_weight;
        match r.wan {
            Some(v) => {
                sum += v;
                components.push(Component {
                    id,
                    wan: Some(v),
                    mass,
                });
            }
            None => {
                components.push(Component {
                    id: id.clone(),
                    wan: None,
                    mass: 0.0,
                });
                dropped.push(id);
            }
        }
        contributions.extend(r.contributions);
    }
    Ok(CriterionResult {
        criterion: criterion.to_string(),
        wan: Some(sum / defined as f64),
        total_weight,
        aggregation: Aggregation::Macro,
        diagnostic: None,
        components,
        dropped,
        contributions,
    })
}

/// Criterion-weighted mean of WANs over the schema.
pub fn swan(
    results: &[CriterionResult],
    schema: &Schema,
    policy: UndefinedPolicy,
) -> Result<AuditResult> {
    if schema.criteria.is_empty() {
        return Err(SwanError::EmptySchema);
    }
    let mut ordered = Vec::with_capacity(schema.criteria.len());
    for cfg in &schema.criteria {
        let key = cfg.key();
        let r = results
            .iter()
            .find(|r| crate::model::criterion_key(&r.criterion) == key)
            .ok_or_else(|| SwanError::MissingCriterionResult(cfg.name.clone()))?;
        ordered.push((cfg, r));
    }

    let mut numerator = 0.0;
    let mut denominator = 0.0;
    let mut dropped = Vec::new();
    for (cfg, r) in &ordered {
        match r.wan {
            Some(v) => {
                numerator += cfg.weight * v;
                denominator += cfg.weight;
            }
            None if policy == UndefinedPolicy::Strict => {
                return Err(SwanError::UndefinedWan {
                    criterion: cfg.name.clone(),
                    reason: r.diagnostic.clone().unwrap_or_else(|| "undefined".into()),
                });
            }
            None => dropped.push(cfg.name.clone()),
        }
    }
    Ok(AuditResult {
        swan: (denominator > 0.0).then(|| numerator / denominator),
        criteria: ordered.iter().map(|(_, r)| (*r).clone()).collect(),
        dropped_criteria: dropped,
        criterion_weights: schema
            .criteria
            .iter()
            .map(|c| CriterionWeight {
                criterion: c.name.clone(),
                weight: c.weight,
            })
            .collect(),
    })
}

/// Worst-first view of a criterion's contributions: ascending score, ties
/// by descending weight, then canonical order.
pub fn contributions_report(result: &CriterionResult, top_n: usize) -> Vec<Contribution> {
    let mut ranked: Vec<&Contribution> = result.contributions.iter().collect();
    ranked.sort_by(|a, b| match a.score.total_cmp(&b.score) {
        Ordering::Equal => b.weight.total_cmp(&a.weight),
        other => other,
    });
    ranked.into_iter().take(top_n).cloned().collect()
}
