//! File formats, corpus loading, reports and cross-system comparison.
//!
//! Sessions, score records, mention counts and dissatisfaction values are
//! JSON Lines; the schema and each conversation tree are single JSON
//! documents.

pub mod compare;
pub mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::audit::{Annotations, AuditOptions};
use crate::model::{
    criterion_key, validate_corpus, validate_dissatisfaction, validate_mentions, Schema,
    ScoreRecord, ScoreTable, Session, ValidationReport,
};
use crate::scorers::{DissatisfactionEntry, DissatisfactionTable, MentionEntry, MentionTable};
use crate::stochastic::{ConversationTree, DEFAULT_PATH_CAP};

pub use compare::{compare_corpus, compare_systems, ComparisonTable, SeedRun, COMPARISON_CAVEAT};
pub use report::{run_audit, AuditReport, ReportFormat};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {error}")]
    Io { path: String, error: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("corpus failed validation with {} violation(s)", .0.violations.len())]
    Invalid(ValidationReport),
    #[error("{0}")]
    Config(String),
}

/// A file as read, with its content digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

fn read(path: &Path, role: &str, digests: &mut Vec<InputDigest>) -> Result<String, LoadError> {
    let text = fs::read_to_string(path).map_err(|error| LoadError::Io {
        path: path.display().to_string(),
        error,
    })?;
    digests.push(InputDigest {
        role: role.to_string(),
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(text.as_bytes())),
    });
    Ok(text)
}

/// Parses JSON Lines, skipping blank lines. Each value comes with its
/// 1-based line number.
pub fn parse_jsonl<T: DeserializeOwned>(
    text: &str,
    path: &str,
) -> Result<Vec<(T, usize)>, LoadError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| LoadError::Parse {
            path: path.to_string(),
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push((value, i + 1));
    }
    Ok(out)
}

pub fn parse_json<T: DeserializeOwned>(text: &str, path: &str) -> Result<T, LoadError> {
    serde_json::from_str(text).map_err(|e| LoadError::Parse {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, LoadError> {
    let text = read(path, "", &mut Vec::new())?;
    Ok(parse_jsonl(&text, &path.display().to_string())?
        .into_iter()
        .map(|(v, _)| v)
        .collect())
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable"));
        out.push('\n');
    }
    out
}

/// Everything a run reads, plus how it aggregates and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub sessions: Vec<PathBuf>,
    pub trees: Vec<PathBuf>,
    pub schema: Option<PathBuf>,
    pub scores: Vec<PathBuf>,
    pub mentions: Vec<PathBuf>,
    pub dissatisfaction: Vec<PathBuf>,
    pub options: AuditOptions,
    pub out: Option<PathBuf>,
    pub formats: Vec<ReportFormat>,
    pub top_n: usize,
    pub max_paths: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sessions: Vec::new(),
            trees: Vec::new(),
            schema: None,
            scores: Vec::new(),
            mentions: Vec::new(),
            dissatisfaction: Vec::new(),
            options: AuditOptions::default(),
            out: None,
            formats: vec![ReportFormat::Json],
            top_n: 10,
            max_paths: DEFAULT_PATH_CAP,
        }
    }
}

/// A loaded and validated corpus.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub sessions: Vec<Session>,
    pub trees: Vec<ConversationTree>,
    pub schema: Schema,
    pub annotations: Annotations,
    pub inputs: Vec<InputDigest>,
}

impl LoadedCorpus {
    pub fn score_tables(&self) -> Vec<ScoreTable> {
        self.annotations.tables.values().cloned().collect()
    }

    /// Everything a corpus must satisfy before scoring.
    pub fn validate(&self) -> ValidationReport {
        let mut report = validate_corpus(
            &self.sessions,
            &self.trees,
            &self.schema,
            &self.score_tables(),
        );
        report.extend(validate_mentions(
            &self.annotations.mentions,
            &self.sessions,
            &self.trees,
            &self.schema,
        ));
        report.extend(validate_dissatisfaction(
            &self.annotations.dissatisfaction,
            &self.sessions,
            &self.trees,
        ));
        report
    }
}

/// Reads every input without validating it.
pub fn read_corpus(cfg: &RunConfig) -> Result<LoadedCorpus, LoadError> {
    if cfg.sessions.is_empty() && cfg.trees.is_empty() {
        return Err(LoadError::Config(
            "no input corpus: pass --sessions and/or --trees".into(),
        ));
    }
    let schema_path = cfg
        .schema
        .as_ref()
        .ok_or_else(|| LoadError::Config("no schema: pass --schema".into()))?;

    let mut inputs = Vec::new();
    let text = read(schema_path, "schema", &mut inputs)?;
    let schema: Schema = parse_json(&text, &schema_path.display().to_string())?;

    let mut sessions = Vec::new();
    for path in &cfg.sessions {
        let text = read(path, "sessions", &mut inputs)?;
        sessions.extend(
            parse_jsonl::<Session>(&text, &path.display().to_string())?
                .into_iter()
                .map(|(s, _)| s),
        );
    }

    let mut trees = Vec::new();
    for path in &cfg.trees {
        let text = read(path, "tree", &mut inputs)?;
        trees.push(parse_json::<ConversationTree>(
            &text,
            &path.display().to_string(),
        )?);
    }

    let mut tables: BTreeMap<String, ScoreTable> = BTreeMap::new();
    for path in &cfg.scores {
        let text = read(path, "scores", &mut inputs)?;
        let name = path.display().to_string();
        for (mut record, line) in parse_jsonl::<ScoreRecord>(&text, &name)? {
            record.origin = Some(format!("{name}:{line}"));
            tables
                .entry(criterion_key(&record.criterion))
                .or_insert_with(|| ScoreTable::new(record.criterion.clone()))
                .entries
                .push(record);
        }
    }

    let mut mentions = MentionTable::default();
    for path in &cfg.mentions {
        let text = read(path, "mentions", &mut inputs)?;
        let name = path.display().to_string();
        for (mut entry, line) in parse_jsonl::<MentionEntry>(&text, &name)? {
            entry.origin = Some(format!("{name}:{line}"));
            mentions.entries.push(entry);
        }
    }

    let mut dissatisfaction = DissatisfactionTable::default();
    for path in &cfg.dissatisfaction {
        let text = read(path, "dissatisfaction", &mut inputs)?;
        let name = path.display().to_string();
        for (mut entry, line) in parse_jsonl::<DissatisfactionEntry>(&text, &name)? {
            entry.origin = Some(format!("{name}:{line}"));
            dissatisfaction.entries.push(entry);
        }
    }

    Ok(LoadedCorpus {
        sessions,
        trees,
        schema,
        annotations: Annotations::new(tables.into_values(), mentions, dissatisfaction),
        inputs,
    })
}

/// Reads and validates every input; any violation aborts the load.
pub fn load_corpus(cfg: &RunConfig) -> Result<LoadedCorpus, LoadError> {
    let corpus = read_corpus(cfg)?;
    let report = corpus.validate();
    if !report.is_ok() {
        return Err(LoadError::Invalid(report));
    }
    Ok(corpus)
}
