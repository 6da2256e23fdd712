//! Audit reports: JSON, a flat CSV of nugget contributions, and Markdown.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{InputDigest, LoadedCorpus};
use crate::audit::{audit_sessions, fairness_series, AuditOptions, FairnessSeries};
use crate::engine::{contributions_report, AuditResult, Contribution};
use crate::error::Result;
use crate::model::Schema;
use crate::stochastic::{PreparedTree, STOCHASTIC_SEMANTICS};
use crate::weighting::{
    DEFAULT_EXPONENTIAL_BASE, DEFAULT_INDEX_CUTOFF, DEFAULT_OFFSET_CUTOFF, OFFSET_EXPONENT_SCALE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub inputs: Vec<InputDigest>,
    pub schema: Schema,
    pub options: AuditOptions,
    pub top_n: usize,
    pub max_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstNuggets {
    pub criterion: String,
    pub contributions: Vec<Contribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionAudit {
    pub session_count: usize,
    pub audit: AuditResult,
    pub worst: Vec<WorstNuggets>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub session_id: String,
    pub nodes: Vec<String>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeAudit {
    pub tree_id: String,
    pub system_id: String,
    pub seed_id: Option<String>,
    pub semantics: String,
    pub paths: Vec<PathRecord>,
    pub audit: AuditResult,
    pub worst: Vec<WorstNuggets>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub tool: String,
    pub version: String,
    pub provenance: Provenance,
    /// Conventions the numbers depend on.
    pub decisions: BTreeMap<String, String>,
    pub sessions: Option<SessionAudit>,
    pub trees: Vec<TreeAudit>,
    pub fairness_series: Vec<FairnessSeries>,
}

fn decisions(options: AuditOptions) -> BTreeMap<String, String> {
    let entries = [
        ("score_range", "all nugget and turn scores lie in [0,1]".to_string()),
        (
            "positions",
            "positions restart in every session; offsets count Unicode scalar values with one separator character after each turn".to_string(),
        ),
        (
            "weighting_defaults",
            format!(
                "linear L={DEFAULT_INDEX_CUTOFF} (index) or {DEFAULT_OFFSET_CUTOFF} characters (offset); exponential base {DEFAULT_EXPONENTIAL_BASE}, offset exponent = offset/{OFFSET_EXPONENT_SCALE}; anchoring = identity"
            ),
        ),
        (
            "turn_level",
            "synthetic: one item per turn at its first nugget's position; paper_literal: first nugget carries the turn score, later nuggets score 0".to_string(),
        ),
        ("aggregation", format!("{:?}", options.aggregation).to_lowercase()),
        ("undefined_policy", format!("{:?}", options.policy).to_lowercase()),
        ("summation_order", "ascending session_id, then document order".to_string()),
        ("stochastic", STOCHASTIC_SEMANTICS.to_string()),
        (
            "fair_exposure",
            "per nugget: attribute-weighted mean over mentioned attribute sets of 1 - divergence (JSD base 2 or total variation) to the gold distribution".to_string(),
        ),
        (
            "recoverability",
            "system turn after a user turn with dissatisfaction d >= threshold scores max(0, (d - d_next)/d); 0 if the user does not return".to_string(),
        ),
        (
            "conciseness",
            "min(1, slack * sum(|F-nugget| * correctness) / |turn text|) per system turn".to_string(),
        ),
    ];
    entries
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

fn worst(audit: &AuditResult, top_n: usize) -> Vec<WorstNuggets> {
    audit
        .criteria
        .iter()
        .filter(|c| c.is_defined())
        .map(|c| WorstNuggets {
            criterion: c.criterion.clone(),
            contributions: contributions_report(c, top_n),
        })
        .collect()
}

/// Scores the sessions (as one pooled corpus) and every tree.
pub fn run_audit(
    corpus: &LoadedCorpus,
    options: AuditOptions,
    top_n: usize,
    max_paths: usize,
) -> Result<AuditReport> {
    let sessions = if corpus.sessions.is_empty() {
        None
    } else {
        let audit = audit_sessions(
            &corpus.sessions,
            &corpus.schema,
            &corpus.annotations,
            options,
        )?;
        Some(SessionAudit {
            session_count: corpus.sessions.len(),
            worst: worst(&audit, top_n),
            audit,
        })
    };

    let mut trees: Vec<&crate::stochastic::ConversationTree> = corpus.trees.iter().collect();
    trees.sort_by(|a, b| a.tree_id.cmp(&b.tree_id));
    let mut tree_audits = Vec::new();
    for tree in trees {
        let prepared = PreparedTree::new(tree, &corpus.annotations, max_paths)?;
        let audit = prepared.audit(&corpus.schema, options)?;
        tree_audits.push(TreeAudit {
            tree_id: tree.tree_id.clone(),
            system_id: tree.system_id.clone(),
            seed_id: tree.seed_id.clone(),
            semantics: STOCHASTIC_SEMANTICS.to_string(),
            paths: prepared
                .paths
                .iter()
                .map(|p| PathRecord {
                    session_id: p.session.session_id.clone(),
                    nodes: p.nodes.clone(),
                    probability: p.probability,
                })
                .collect(),
            worst: worst(&audit, top_n),
            audit,
        });
    }

    Ok(AuditReport {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        provenance: Provenance {
            inputs: corpus.inputs.clone(),
            schema: corpus.schema.clone(),
            options,
            top_n,
            max_paths,
        },
        decisions: decisions(options),
        sessions,
        trees: tree_audits,
        fairness_series: fairness_series(
            &corpus.sessions,
            &corpus.schema,
            &corpus.annotations.mentions,
        )?,
    })
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    fn audits(&self) -> impl Iterator<Item = &AuditResult> {
        self.sessions
            .iter()
            .map(|s| &s.audit)
            .chain(self.trees.iter().map(|t| &t.audit))
    }

    /// One row per scored nugget: session, turn, nugget, criterion, score,
    /// weight, weighted_score.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "session",
            "turn",
            "nugget",
            "criterion",
            "score",
            "weight",
            "weighted_score",
        ])
        .expect("in-memory write");
        for audit in self.audits() {
            for c in &audit.criteria {
                for k in &c.contributions {
                    w.write_record([
                        k.session_id.clone(),
                        k.turn_index.to_string(),
                        k.nugget_id.clone().unwrap_or_default(),
                        c.criterion.clone(),
                        k.score.to_string(),
                        k.weight.to_string(),
                        k.weighted_score.to_string(),
                    ])
                    .expect("in-memory write");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let _ = writeln!(md, "# Audit report\n");
        if let Some(s) = &self.sessions {
            let _ = writeln!(md, "## Sessions ({} sessions)\n", s.session_count);
            audit_markdown(&mut md, &s.audit, &s.worst);
        }
        for t in &self.trees {
            let _ = writeln!(
                md,
                "## Tree {} (system {}, {} paths)\n",
                t.tree_id,
                t.system_id,
                t.paths.len()
            );
            let _ = writeln!(md, "Scores are an {}.\n", t.semantics);
            audit_markdown(&mut md, &t.audit, &t.worst);
        }
        if !self.fairness_series.is_empty() {
            let _ = writeln!(md, "## Cumulative fairness per turn\n");
            for f in &self.fairness_series {
                let points: Vec<String> = f
                    .points
                    .iter()
                    .map(|p| format!("t{}={}", p.turn_index, fmt(Some(p.similarity))))
                    .collect();
                let _ = writeln!(
                    md,
                    "- {} / {} / {}: {}",
                    f.criterion,
                    f.session_id,
                    f.attribute_set,
                    points.join(", ")
                );
            }
            md.push('\n');
        }
        let _ = writeln!(md, "## Inputs\n");
        for i in &self.provenance.inputs {
            let _ = writeln!(md, "- {} `{}` sha256:{}", i.role, i.path, i.sha256);
        }
        md
    }

    /// Writes the requested formats into `dir`, returning the paths written.
    pub fn write(&self, dir: &Path, formats: &[ReportFormat]) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for format in formats {
            let (name, body) = match format {
                ReportFormat::Json => ("report.json", self.to_json()),
                ReportFormat::Csv => ("contributions.csv", self.to_csv()),
                ReportFormat::Markdown => ("report.md", self.to_markdown()),
            };
            let path = dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub(crate) fn fmt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "undefined".to_string(),
    }
}

fn audit_markdown(md: &mut String, audit: &AuditResult, worst: &[WorstNuggets]) {
    let _ = writeln!(md, "**SWAN: {}**\n", fmt(audit.swan));
    let _ = writeln!(md, "| criterion | weight | WAN | total nugget weight |");
    let _ = writeln!(md, "|---|---|---|---|");
    for (c, w) in audit.criteria.iter().zip(&audit.criterion_weights) {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {:.4} |",
            c.criterion,
            w.weight,
            fmt(c.wan),
            c.total_weight
        );
    }
    if !audit.dropped_criteria.is_empty() {
        let _ = writeln!(
            md,
            "\nDropped (undefined WAN): {}",
            audit.dropped_criteria.join(", ")
        );
    }
    md.push('\n');
    for w in worst {
        let _ = writeln!(md, "### Worst nuggets: {}\n", w.criterion);
        let _ = writeln!(md, "| session | turn | nugget | score | weight |");
        let _ = writeln!(md, "|---|---|---|---|---|");
        for k in &w.contributions {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {:.4} | {:.4} |",
                k.session_id,
                k.turn_index,
                k.nugget_id.as_deref().unwrap_or("(turn)"),
                k.score,
                k.weight
            );
        }
        md.push('\n');
    }
}
