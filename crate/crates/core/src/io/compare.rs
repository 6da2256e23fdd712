//! Side-by-side scores of systems that started from the same seed turns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::report::fmt;
use crate::audit::{audit_sessions, Annotations, AuditOptions};
use crate::engine::AuditResult;
use crate::error::{Result, SwanError};
use crate::model::{Schema, Session};

/// Attached to every comparison output.
pub const COMPARISON_CAVEAT: &str = "Caveat: after the shared seed turn each system's conversations \
develop differently, so these scores are computed over different conversations and are not directly \
comparable. Use them to see which systems look more problematic on which criteria, and inspect the \
individual nugget scores and weights before drawing conclusions.";

/// The audit of one system's sessions for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub system_id: String,
    pub seed_id: String,
    pub session_count: usize,
    pub audit: AuditResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionWan {
    pub criterion: String,
    pub wan: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub seed_id: String,
    pub system_id: String,
    pub session_count: usize,
    pub swan: Option<f64>,
    pub wans: Vec<CriterionWan>,
}

/// Mean over a system's compared seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemAggregate {
    pub system_id: String,
    pub seeds: usize,
    pub session_count: usize,
    pub swan: Option<f64>,
    pub wans: Vec<CriterionWan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSystem {
    pub system_id: String,
    pub wan: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionRanking {
    pub criterion: String,
    pub caveat: String,
    /// Best first; systems with undefined values last.
    pub systems: Vec<RankedSystem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub caveat: String,
    pub comparable: bool,
    pub rows: Vec<ComparisonRow>,
    pub notes: Vec<String>,
    pub aggregates: Vec<SystemAggregate>,
    pub rankings: Vec<CriterionRanking>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn wans(audit: &AuditResult) -> Vec<CriterionWan> {
    audit
        .criteria
        .iter()
        .map(|c| CriterionWan {
            criterion: c.criterion.clone(),
            wan: c.wan,
        })
        .collect()
}

/// Rows for every seed that at least two systems share. Seeds covered by a
/// single system are omitted and noted.
pub fn compare_systems(runs: &[SeedRun]) -> Result<ComparisonTable> {
    let systems: BTreeSet<&str> = runs.iter().map(|r| r.system_id.as_str()).collect();
    if systems.len() < 2 {
        return Err(SwanError::TooFewSystems(systems.len()));
    }
    let mut by_seed: BTreeMap<&str, BTreeMap<&str, &SeedRun>> = BTreeMap::new();
    for r in runs {
        by_seed
            .entry(r.seed_id.as_str())
            .or_default()
            .insert(r.system_id.as_str(), r);
    }

    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for (seed, present) in &by_seed {
        let missing: Vec<&str> = systems
            .iter()
            .filter(|s| !present.contains_key(*s))
            .copied()
            .collect();
        if present.len() < 2 {
            let only: Vec<&str> = present.keys().copied().collect();
            notes.push(format!(
                "seed {seed} omitted: only system {} has sessions for it",
                only.join(", ")
            ));
            continue;
        }
        if !missing.is_empty() {
            notes.push(format!(
                "seed {seed}: no sessions from {}",
                missing.join(", ")
            ));
        }
        for run in present.values() {
            rows.push(ComparisonRow {
                seed_id: seed.to_string(),
                system_id: run.system_id.clone(),
                session_count: run.session_count,
                swan: run.audit.swan,
                wans: wans(&run.audit),
            });
        }
    }
    if rows.is_empty() {
        return Err(SwanError::NoSharedSeeds);
    }

    let criteria: Vec<String> = rows[0].wans.iter().map(|w| w.criterion.clone()).collect();
    let aggregates: Vec<SystemAggregate> = systems
        .iter()
        .map(|sys| {
            let mine: Vec<&ComparisonRow> = rows.iter().filter(|r| r.system_id == *sys).collect();
            SystemAggregate {
                system_id: sys.to_string(),
                seeds: mine.len(),
                session_count: mine.iter().map(|r| r.session_count).sum(),
                swan: mean(mine.iter().map(|r| r.swan)),
                wans: criteria
                    .iter()
                    .enumerate()
                    .map(|(i, c)| CriterionWan {
                        criterion: c.clone(),
                        wan: mean(mine.iter().map(|r| r.wans.get(i).and_then(|w| w.wan))),
                    })
                    .collect(),
            }
        })
        .collect();

    let rankings = criteria
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut ranked: Vec<RankedSystem> = aggregates
                .iter()
                .map(|a| RankedSystem {
                    system_id: a.system_id.clone(),
                    wan: a.wans[i].wan,
                })
                .collect();
            ranked.sort_by(|a, b| match (a.wan, b.wan) {
                (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.system_id.cmp(&b.system_id)),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => a.system_id.cmp(&b.system_id),
            });
            CriterionRanking {
                criterion: c.clone(),
                caveat: COMPARISON_CAVEAT.to_string(),
                systems: ranked,
            }
        })
        .collect();

    Ok(ComparisonTable {
        caveat: COMPARISON_CAVEAT.to_string(),
        comparable: false,
        rows,
        notes,
        aggregates,
        rankings,
    })
}

/// Audits each (system, seed) group of sessions and compares them.
/// Sessions without a seed are left out and noted.
pub fn compare_corpus(
    sessions: &[Session],
    schema: &Schema,
    annotations: &Annotations,
    options: AuditOptions,
) -> Result<ComparisonTable> {
    let mut groups: BTreeMap<(&str, &str), Vec<Session>> = BTreeMap::new();
    let mut unseeded = 0;
    for s in sessions {
        match &s.seed_id {
            Some(seed) => groups
                .entry((s.system_id.as_str(), seed.as_str()))
                .or_default()
                .push(s.clone()),
            None => unseeded += 1,
        }
    }
    let mut runs = Vec::new();
    for ((system, seed), group) in &groups {
        runs.push(SeedRun {
            system_id: system.to_string(),
            seed_id: seed.to_string(),
            session_count: group.len(),
            audit: audit_sessions(group, schema, annotations, options)?,
        });
    }
    let mut table = compare_systems(&runs)?;
    if unseeded > 0 {
        table.notes.push(format!(
            "{unseeded} session(s) without seed_id left out of the comparison"
        ));
    }
    Ok(table)
}

impl ComparisonTable {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("comparison serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let _ = writeln!(md, "# System comparison\n\n> {}\n", self.caveat);
        let criteria: Vec<&str> = self
            .rows
            .first()
            .map(|r| r.wans.iter().map(|w| w.criterion.as_str()).collect())
            .unwrap_or_default();
        let _ = writeln!(
            md,
            "| seed | system | sessions | SWAN | {} |",
            criteria.join(" | ")
        );
        let _ = writeln!(md, "|---|---|---|---|{}", "---|".repeat(criteria.len()));
        for r in &self.rows {
            let cells: Vec<String> = r.wans.iter().map(|w| fmt(w.wan)).collect();
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} |",
                r.seed_id,
                r.system_id,
                r.session_count,
                fmt(r.swan),
                cells.join(" | ")
            );
        }
        for n in &self.notes {
            let _ = writeln!(md, "\n- {n}");
        }
        let _ = writeln!(
            md,
            "\n## Per-criterion ordering (mean over compared seeds)\n"
        );
        for r in &self.rankings {
            let order: Vec<String> = r
                .systems
                .iter()
                .map(|s| format!("{} ({})", s.system_id, fmt(s.wan)))
                .collect();
            let _ = writeln!(md, "- {}: {}", r.criterion, order.join(" > "));
        }
        let _ = writeln!(md, "\n> {}", self.caveat);
        md
    }
}
