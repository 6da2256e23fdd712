//! Fair exposure: similarity between the group distribution a nugget
//! achieves and a gold distribution, combined over attribute sets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MentionTable;
use crate::error::{Result, SwanError};
use crate::model::{ScoreTable, Session, Speaker};

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence {
    #[default]
    JensenShannon,
    TotalVariation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSetConfig {
    pub name: String,
    #[serde(default = "one")]
    pub weight: f64,
    pub groups: Vec<String>,
    /// Target distribution over `groups`.
    pub gold: Vec<f64>,
    #[serde(default)]
    pub divergence: Divergence,
}

fn one() -> f64 {
    1.0
}

impl AttributeSetConfig {
    /// Normalizes group counts into a distribution over `groups`.
    /// Returns `None` when every count is zero.
    pub fn distribution(&self, counts: &BTreeMap<String, u64>) -> Result<Option<Vec<f64>>> {
        if let Some(g) = counts.keys().find(|g| !self.groups.contains(g)) {
            return Err(SwanError::InvalidParameter(format!(
                "group {g} is not declared in attribute set {}",
                self.name
            )));
        }
        let raw: Vec<f64> = self
            .groups
            .iter()
            .map(|g| counts.get(g).copied().unwrap_or(0) as f64)
            .collect();
        let total: f64 = raw.iter().sum();
        if total == 0.0 {
            return Ok(None);
        }
        Ok(Some(raw.into_iter().map(|c| c / total).collect()))
    }
}

/// Problems with an attribute-set declaration, as messages.
pub fn validate_attribute_set(a: &AttributeSetConfig) -> Vec<String> {
    let mut problems = Vec::new();
    if !(a.weight.is_finite() && a.weight > 0.0) {
        problems.push(format!("weight must be > 0, got {}", a.weight));
    }
    if a.groups.len() < 2 {
        problems.push("needs at least two groups".to_string());
    }
    let mut seen = std::collections::BTreeSet::new();
    if a.groups.iter().any(|g| !seen.insert(g)) {
        problems.push("group labels must be unique".to_string());
    }
    if a.gold.len() != a.groups.len() {
        problems.push(format!(
            "gold has {} components for {} groups",
            a.gold.len(),
            a.groups.len()
        ));
    }
    if let Err(e) = check_distribution(&a.gold) {
        problems.push(format!("gold: {e}"));
    }
    problems
}

fn check_distribution(d: &[f64]) -> Result<()> {
    if d.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(SwanError::InvalidParameter(
            "probabilities must be finite and non-negative".into(),
        ));
    }
    let sum: f64 = d.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(SwanError::NotNormalized { sum });
    }
    Ok(())
}

fn kl_to_mixture(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, mi)| pi * (pi / mi).log2())
        .sum()
}

/// One minus a divergence between an achieved and a gold distribution.
///
/// Total variation uses `1 - sum|D - D*| / 2`; Jensen-Shannon uses base-2
/// logarithms so that disjoint supports give similarity 0.
pub fn distribution_similarity(d: &[f64], gold: &[f64], divergence: Divergence) -> Result<f64> {
    if d.len() != gold.len() {
        return Err(SwanError::DimensionMismatch {
            left: d.len(),
            right: gold.len(),
        });
    }
    check_distribution(d)?;
    check_distribution(gold)?;
    let div = match divergence {
        Divergence::TotalVariation => {
            0.5 * d.iter().zip(gold).map(|(a, b)| (a - b).abs()).sum::<f64>()
        }
        Divergence::JensenShannon => {
            let m: Vec<f64> = d.iter().zip(gold).map(|(a, b)| (a + b) / 2.0).collect();
            0.5 * kl_to_mixture(d, &m) + 0.5 * kl_to_mixture(gold, &m)
        }
    };
    Ok((1.0 - div).clamp(0.0, 1.0))
}

/// Attribute-weighted mean of distribution similarities for one nugget.
///
/// `mentions` maps attribute-set names to group counts. Only attribute sets
/// the nugget mentions take part; `None` means the nugget mentions none and
/// gets no fairness score.
pub fn fairness_nugget_score(
    mentions: &BTreeMap<&str, &BTreeMap<String, u64>>,
    attribute_sets: &[AttributeSetConfig],
) -> Result<Option<f64>> {
    if let Some(name) = mentions
        .keys()
        .find(|name| !attribute_sets.iter().any(|a| a.name == **name))
    {
        return Err(SwanError::UnknownAttributeSet(name.to_string()));
    }
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for a in attribute_sets {
        let Some(counts) = mentions.get(a.name.as_str()) else {
            continue;
        };
        let Some(d) = a.distribution(counts)? else {
            continue;
        };
        numerator += a.weight * distribution_similarity(&d, &a.gold, a.divergence)?;
        denominator += a.weight;
    }
    Ok((denominator > 0.0).then(|| numerator / denominator))
}

/// Nugget-level fairness scores for every mentioning nugget of a session.
pub fn fairness_scores(
    session: &Session,
    mentions: &MentionTable,
    attribute_sets: &[AttributeSetConfig],
    criterion: &str,
) -> Result<ScoreTable> {
    let mut table = ScoreTable::new(criterion);
    for turn in &session.turns {
        for n in &turn.nuggets {
            let m = mentions.for_nugget(&session.session_id, &n.nugget_id);
            if m.is_empty() {
                continue;
            }
            if let Some(score) = fairness_nugget_score(&m, attribute_sets)? {
                table.push(&session.session_id, turn.index, Some(&n.nugget_id), score);
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub turn_index: u32,
    pub similarity: f64,
}

/// Similarity of the accumulated mention distribution after each system
/// turn. Turns before the first mention produce no point.
pub fn cumulative_fairness_series(
    session: &Session,
    attribute_set: &AttributeSetConfig,
    mentions: &MentionTable,
) -> Result<Vec<SeriesPoint>> {
    let mut acc: BTreeMap<String, u64> = BTreeMap::new();
    let mut series = Vec::new();
    for turn in &session.turns {
        for n in &turn.nuggets {
            for e in mentions.entries.iter().filter(|e| {
                e.session_id == session.session_id
                    && e.nugget_id == n.nugget_id
                    && e.attribute_set == attribute_set.name
            }) {
                for (g, c) in &e.counts {
                    *acc.entry(g.clone()).or_default() += c;
                }
            }
        }
        if turn.speaker != Speaker::System {
            continue;
        }
        if let Some(d) = attribute_set.distribution(&acc)? {
            series.push(SeriesPoint {
                turn_index: turn.index,
                similarity: distribution_similarity(
                    &d,
                    &attribute_set.gold,
                    attribute_set.divergence,
                )?,
            });
        }
    }
    Ok(series)
}
