//! From a corpus and its annotations to per-criterion results and SWAN.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{
    self, Aggregation, AuditResult, CriterionResult, SessionInput, UndefinedPolicy,
};
use crate::error::{Result, SwanError};
use crate::model::{
    criterion_key, nugget_sequence, resolve_scores, Coverage, CriterionConfig, DerivedScorer,
    ResolvedScores, Schema, ScoreIndex, ScoreTable, Session,
};
use crate::scorers::{
    conciseness_scores, cumulative_fairness_series, fairness_scores, passthrough_scores,
    recoverability_scores, DissatisfactionTable, MentionTable, SeriesPoint,
};
use crate::weighting::{resolve_weights, WeightVector};

/// Score tables and annotations the criteria draw on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Annotations {
    /// Keyed by normalized criterion name.
    pub tables: BTreeMap<String, ScoreTable>,
    pub mentions: MentionTable,
    pub dissatisfaction: DissatisfactionTable,
}

impl Annotations {
    /// Merges tables that name the same criterion.
    pub fn new(
        tables: impl IntoIterator<Item = ScoreTable>,
        mentions: MentionTable,
        dissatisfaction: DissatisfactionTable,
    ) -> Self {
        let mut merged: BTreeMap<String, ScoreTable> = BTreeMap::new();
        for t in tables {
            merged
                .entry(criterion_key(&t.criterion))
                .or_insert_with(|| ScoreTable::new(t.criterion.clone()))
                .entries
                .extend(t.entries);
        }
        Self {
            tables: merged,
            mentions,
            dissatisfaction,
        }
    }

    pub fn table(&self, criterion: &str) -> Option<&ScoreTable> {
        self.tables.get(&criterion_key(criterion))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub aggregation: Aggregation,
    pub policy: UndefinedPolicy,
}

fn canonical(sessions: &[Session]) -> Vec<&Session> {
    let mut ordered: Vec<&Session> = sessions.iter().collect();
    ordered.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    ordered
}

/// Scored nugget set of every session, in canonical session order.
pub fn score_sessions(
    sessions: &[Session],
    cfg: &CriterionConfig,
    annotations: &Annotations,
) -> Result<Vec<ResolvedScores>> {
    let empty = ScoreTable::new(cfg.name.clone());
    let passthrough = match cfg.derived {
        None => Some(passthrough_scores(
            annotations.table(&cfg.name).unwrap_or(&empty),
            cfg,
        )?),
        Some(_) => None,
    };

    let mut out = Vec::new();
    for session in canonical(sessions) {
        let sequence = nugget_sequence(session, cfg)?;
        let (index, coverage) = match &cfg.derived {
            None => (passthrough.clone().unwrap_or_default(), Coverage::Complete),
            Some(DerivedScorer::FairExposure { attribute_sets }) => {
                let t = fairness_scores(session, &annotations.mentions, attribute_sets, &cfg.name)?;
                (ScoreIndex::new(&t), Coverage::Sparse)
            }
            Some(DerivedScorer::Recoverability { threshold }) => {
                let t = recoverability_scores(
                    session,
                    &annotations.dissatisfaction,
                    *threshold,
                    &cfg.name,
                )?;
                (ScoreIndex::new(&t), Coverage::Sparse)
            }
            Some(DerivedScorer::Conciseness {
                slack,
                correctness_criterion,
            }) => {
                let correctness: BTreeMap<&str, f64> = annotations
                    .table(correctness_criterion)
                    .map(|t| {
                        t.entries
                            .iter()
                            .filter(|e| e.session_id == session.session_id)
                            .filter_map(|e| e.nugget_id.as_deref().map(|id| (id, e.score)))
                            .collect()
                    })
                    .unwrap_or_default();
                let t = conciseness_scores(session, &correctness, *slack, &cfg.name)?;
                (ScoreIndex::new(&t), Coverage::Sparse)
            }
        };
        out.push(resolve_scores(session, &sequence, cfg, &index, coverage)?);
    }
    Ok(out)
}

fn undefined(cfg: &CriterionConfig, aggregation: Aggregation, reason: String) -> CriterionResult {
    CriterionResult {
        criterion: cfg.name.clone(),
        wan: None,
        total_weight: 0.0,
        aggregation,
        diagnostic: Some(reason),
        components: Vec::new(),
        dropped: Vec::new(),
        contributions: Vec::new(),
    }
}

/// WAN of one criterion over a set of sessions.
pub fn evaluate_criterion(
    sessions: &[Session],
    cfg: &CriterionConfig,
    annotations: &Annotations,
    aggregation: Aggregation,
) -> Result<CriterionResult> {
    let resolved = score_sessions(sessions, cfg, annotations)?;
    let weights = resolved
        .iter()
        .map(|r| resolve_weights(&r.nuggets, &cfg.weighting))
        .collect::<Result<Vec<WeightVector>>>()?;

    match aggregation {
        Aggregation::Pooled => {
            let mut nuggets = Vec::new();
            let mut scores = Vec::new();
            let mut all_weights = Vec::new();
            for (r, w) in resolved.iter().zip(&weights) {
                nuggets.extend(r.nuggets.iter().cloned());
                scores.extend(&r.scores);
                all_weights.extend(&w.weights);
            }
            engine::wan(
                &cfg.name,
                &nuggets,
                &WeightVector::from_weights(all_weights),
                &scores,
            )
        }
        Aggregation::Macro => {
            let inputs: Vec<SessionInput<'_>> = resolved
                .iter()
                .zip(&weights)
                .map(|(r, w)| SessionInput {
                    nuggets: &r.nuggets,
                    weights: w,
                    scores: &r.scores,
                })
                .collect();
            match engine::wan_macro(&cfg.name, &inputs) {
                Err(SwanError::UndefinedWan { reason, .. }) => {
                    Ok(undefined(cfg, aggregation, reason))
                }
                other => other,
            }
        }
    }
}

/// Every schema criterion over `sessions`, combined into SWAN.
pub fn audit_sessions(
    sessions: &[Session],
    schema: &Schema,
    annotations: &Annotations,
    options: AuditOptions,
) -> Result<AuditResult> {
    let results = schema
        .criteria
        .iter()
        .map(|cfg| evaluate_criterion(sessions, cfg, annotations, options.aggregation))
        .collect::<Result<Vec<_>>>()?;
    engine::swan(&results, schema, options.policy)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessSeries {
    pub criterion: String,
    pub session_id: String,
    pub attribute_set: String,
    pub points: Vec<SeriesPoint>,
}

/// Per-turn cumulative fairness series for every fair-exposure criterion,
/// session and attribute set. Sessions without mentions are omitted.
pub fn fairness_series(
    sessions: &[Session],
    schema: &Schema,
    mentions: &MentionTable,
) -> Result<Vec<FairnessSeries>> {
    let mut out = Vec::new();
    for cfg in &schema.criteria {
        let Some(DerivedScorer::FairExposure { attribute_sets }) = &cfg.derived else {
            continue;
        };
        for session in canonical(sessions) {
            for a in attribute_sets {
                let points = cumulative_fairness_series(session, a, mentions)?;
                if !points.is_empty() {
                    out.push(FairnessSeries {
                        criterion: cfg.name.clone(),
                        session_id: session.session_id.clone(),
                        attribute_set: a.name.clone(),
                        points,
                    });
                }
            }
        }
    }
    Ok(out)
}
