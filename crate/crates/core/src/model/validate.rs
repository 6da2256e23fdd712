use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{
    criterion_key, is_known_criterion, DerivedScorer, Level, Schema, ScoreTable, Session, Speaker,
    Turn,
};
use crate::scorers::fairness::validate_attribute_set;
use crate::scorers::{DissatisfactionTable, MentionTable};
use crate::stochastic::{validate_tree, ConversationTree};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Every defect found in a corpus. Empty iff the input is well-formed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            message: message.into(),
        });
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Id lookup over sessions and trees, which share one id namespace.
pub(crate) struct Corpus<'a> {
    sessions: BTreeMap<&'a str, &'a Session>,
    trees: BTreeMap<&'a str, &'a ConversationTree>,
}

pub(crate) enum Target<'a> {
    Session(&'a Session),
    Tree(&'a ConversationTree),
}

impl<'a> Corpus<'a> {
    pub(crate) fn new(sessions: &'a [Session], trees: &'a [ConversationTree]) -> Self {
        Self {
            sessions: sessions
                .iter()
                .map(|s| (s.session_id.as_str(), s))
                .collect(),
            trees: trees.iter().map(|t| (t.tree_id.as_str(), t)).collect(),
        }
    }

    pub(crate) fn target(&self, id: &str) -> Option<Target<'a>> {
        if let Some(s) = self.sessions.get(id) {
            return Some(Target::Session(s));
        }
        self.trees.get(id).map(|t| Target::Tree(t))
    }
}

fn located(origin: &Option<String>, fallback: String) -> String {
    match origin {
        Some(o) => format!("{o} ({fallback})"),
        None => fallback,
    }
}

/// Checks sessions, trees, the schema and score tables for dangling
/// references, out-of-range scores, duplicate ids and malformed turns.
pub fn validate_corpus(
    sessions: &[Session],
    trees: &[ConversationTree],
    schema: &Schema,
    tables: &[ScoreTable],
) -> ValidationReport {
    let mut report = ValidationReport::default();
    validate_schema(schema, &mut report);

    let mut ids = BTreeSet::new();
    for s in sessions {
        if !ids.insert(s.session_id.as_str()) {
            report.push(format!("session {}", s.session_id), "duplicate session_id");
        }
        validate_session(s, &mut report);
    }
    for t in trees {
        if !ids.insert(t.tree_id.as_str()) {
            report.push(format!("tree {}", t.tree_id), "duplicate tree_id");
        }
        report.extend(validate_tree(t));
    }

    let corpus = Corpus::new(sessions, trees);
    for table in tables {
        validate_table(table, schema, &corpus, &mut report);
    }
    report
}

fn validate_schema(schema: &Schema, report: &mut ValidationReport) {
    if schema.criteria.is_empty() {
        report.push("schema", "schema has no criteria");
    }
    let mut keys = BTreeSet::new();
    let mut attribute_groups: BTreeMap<&str, &[String]> = BTreeMap::new();
    for c in &schema.criteria {
        let loc = format!("criterion {}", c.name);
        if !keys.insert(c.key()) {
            report.push(&loc, "duplicate criterion name");
        }
        if !c.custom && !is_known_criterion(&c.name) {
            report.push(
                &loc,
                "unknown criterion name (set \"custom\": true to declare it)",
            );
        }
        if !(c.weight.is_finite() && c.weight > 0.0) {
            report.push(
                &loc,
                format!("criterion weight must be > 0, got {}", c.weight),
            );
        }
        if c.kinds.is_empty() {
            report.push(&loc, "kinds must not be empty");
        }
        if let Err(e) = c.weighting.check() {
            report.push(&loc, e.to_string());
        }
        match &c.derived {
            None => {}
            Some(DerivedScorer::FairExposure { attribute_sets }) => {
                if c.level != Level::Nugget {
                    report.push(
                        &loc,
                        "fair exposure is scored per nugget (level must be nugget)",
                    );
                }
                if attribute_sets.is_empty() {
                    report.push(&loc, "fair exposure needs at least one attribute set");
                }
                let mut names = BTreeSet::new();
                for a in attribute_sets {
                    if !names.insert(a.name.as_str()) {
                        report.push(&loc, format!("duplicate attribute set {}", a.name));
                    }
                    for problem in validate_attribute_set(a) {
                        report.push(format!("{loc}, attribute set {}", a.name), problem);
                    }
                    match attribute_groups.get(a.name.as_str()) {
                        Some(groups) if *groups != a.groups.as_slice() => report.push(
                            &loc,
                            format!("attribute set {} declared with different groups", a.name),
                        ),
                        _ => {
                            attribute_groups.insert(&a.name, &a.groups);
                        }
                    }
                }
            }
            Some(DerivedScorer::Recoverability { threshold }) => {
                if c.level != Level::Turn {
                    report.push(
                        &loc,
                        "recoverability is scored per turn (level must be turn)",
                    );
                }
                if !(*threshold > 0.0 && *threshold <= 1.0) {
                    report.push(&loc, format!("threshold must be in (0,1], got {threshold}"));
                }
            }
            Some(DerivedScorer::Conciseness {
                slack,
                correctness_criterion,
            }) => {
                if c.level != Level::Turn {
                    report.push(&loc, "conciseness is scored per turn (level must be turn)");
                }
                if !(slack.is_finite() && *slack >= 1.0) {
                    report.push(&loc, format!("slack must be >= 1, got {slack}"));
                }
                match schema.criterion(correctness_criterion) {
                    None => report.push(
                        &loc,
                        format!(
                            "correctness criterion {correctness_criterion} is not in the schema"
                        ),
                    ),
                    Some(cc) if cc.level != Level::Nugget || cc.derived.is_some() => report.push(
                        &loc,
                        format!("{correctness_criterion} must be a nugget-level table criterion"),
                    ),
                    Some(_) => {}
                }
            }
        }
    }
}

fn validate_session(s: &Session, report: &mut ValidationReport) {
    let loc = format!("session {}", s.session_id);
    if s.turns.is_empty() {
        report.push(&loc, "session has no turns");
    }
    let mut nugget_ids = BTreeSet::new();
    for (i, turn) in s.turns.iter().enumerate() {
        if turn.index as usize != i + 1 {
            report.push(
                &loc,
                format!(
                    "non-consecutive turn index {} at position {}",
                    turn.index,
                    i + 1
                ),
            );
        }
        validate_turn(
            turn,
            &format!("{loc}, turn {}", turn.index),
            &mut nugget_ids,
            report,
        );
    }
}

/// Nugget-level checks shared by sessions and tree nodes; `nugget_ids`
/// collects ids across the enclosing session or tree.
pub(crate) fn validate_turn<'a>(
    turn: &'a Turn,
    loc: &str,
    nugget_ids: &mut BTreeSet<&'a str>,
    report: &mut ValidationReport,
) {
    let len = turn.char_len();
    let mut last_start: Option<u64> = None;
    for n in &turn.nuggets {
        let nloc = format!("{loc}, nugget {}", n.nugget_id);
        if !nugget_ids.insert(n.nugget_id.as_str()) {
            report.push(&nloc, "duplicate nugget_id");
        }
        if n.text.is_empty() {
            report.push(&nloc, "nugget text is empty");
        }
        if let Some(start) = n.start {
            if start >= len {
                report.push(
                    &nloc,
                    format!("start {start} is outside the turn text (length {len})"),
                );
            }
            if let Some(prev) = last_start {
                if start <= prev {
                    report.push(
                        &nloc,
                        "start offsets must be strictly increasing within a turn",
                    );
                }
            }
            last_start = Some(start);
        }
    }
}

fn validate_table(
    table: &ScoreTable,
    schema: &Schema,
    corpus: &Corpus<'_>,
    report: &mut ValidationReport,
) {
    let tloc = format!("score table {}", table.criterion);
    let Some(cfg) = schema.criterion(&table.criterion) else {
        report.push(tloc, "unknown criterion (not in the schema)");
        return;
    };
    if cfg.derived.is_some() {
        report.push(
            tloc,
            "criterion is computed from annotations; score tables are not accepted",
        );
        return;
    }

    let mut seen = BTreeSet::new();
    for (i, e) in table.entries.iter().enumerate() {
        let loc = located(&e.origin, format!("{tloc}, entry {}", i + 1));
        if criterion_key(&e.criterion) != cfg.key() {
            report.push(
                &loc,
                format!("entry criterion {} does not match its table", e.criterion),
            );
        }
        if !(e.score.is_finite() && (0.0..=1.0).contains(&e.score)) {
            report.push(&loc, format!("score out of [0,1]: {}", e.score));
        }
        match (cfg.level, &e.nugget_id) {
            (Level::Nugget, None) => {
                report.push(&loc, "turn-level entry for a nugget-level criterion")
            }
            (Level::Turn, Some(_)) => {
                report.push(&loc, "nugget-level entry for a turn-level criterion")
            }
            _ => {}
        }
        let turn_key = match corpus.target(&e.session_id) {
            None => {
                report.push(
                    &loc,
                    format!("unresolved session reference {}", e.session_id),
                );
                continue;
            }
            Some(Target::Session(s)) => {
                if e.node_id.is_some() {
                    report.push(&loc, "node_id is only valid for conversation trees");
                }
                let Some(ti) = e.turn_index else {
                    report.push(&loc, "missing turn_index");
                    continue;
                };
                let Some(turn) = s.turn(ti) else {
                    report.push(&loc, format!("unresolved turn reference {ti}"));
                    continue;
                };
                if let Some(nid) = &e.nugget_id {
                    if !turn.nuggets.iter().any(|n| &n.nugget_id == nid) {
                        report.push(&loc, format!("unresolved nugget reference {nid}"));
                        continue;
                    }
                }
                ti.to_string()
            }
            Some(Target::Tree(t)) => {
                if e.turn_index.is_some() {
                    report.push(&loc, "tree entries are keyed by node_id, not turn_index");
                }
                let node = match (&e.node_id, &e.nugget_id) {
                    (Some(node), _) if !t.nodes.contains_key(node) => {
                        report.push(&loc, format!("unresolved node reference {node}"));
                        continue;
                    }
                    (Some(node), Some(nid)) if t.node_of_nugget(nid) != Some(node.as_str()) => {
                        report.push(&loc, format!("unresolved nugget reference {nid}"));
                        continue;
                    }
                    (Some(node), _) => node.clone(),
                    (None, Some(nid)) => match t.node_of_nugget(nid) {
                        Some(node) => node.to_string(),
                        None => {
                            report.push(&loc, format!("unresolved nugget reference {nid}"));
                            continue;
                        }
                    },
                    (None, None) => {
                        report.push(&loc, "tree entry needs node_id or nugget_id");
                        continue;
                    }
                };
                node
            }
        };
        if !seen.insert((e.session_id.clone(), turn_key, e.nugget_id.clone())) {
            report.push(&loc, "duplicate score entry");
        }
    }
}

/// Checks mention counts against the schema's declared attribute sets.
pub fn validate_mentions(
    mentions: &MentionTable,
    sessions: &[Session],
    trees: &[ConversationTree],
    schema: &Schema,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let declared: BTreeMap<&str, &[String]> = schema
        .criteria
        .iter()
        .filter_map(|c| match &c.derived {
            Some(DerivedScorer::FairExposure { attribute_sets }) => Some(attribute_sets),
            _ => None,
        })
        .flatten()
        .map(|a| (a.name.as_str(), a.groups.as_slice()))
        .collect();
    let corpus = Corpus::new(sessions, trees);

    let mut seen = BTreeSet::new();
    for (i, e) in mentions.entries.iter().enumerate() {
        let loc = located(&e.origin, format!("mention entry {}", i + 1));
        let resolved = match corpus.target(&e.session_id) {
            None => {
                report.push(
                    &loc,
                    format!("unresolved session reference {}", e.session_id),
                );
                continue;
            }
            Some(Target::Session(s)) => s
                .turns
                .iter()
                .any(|t| t.nuggets.iter().any(|n| n.nugget_id == e.nugget_id)),
            Some(Target::Tree(t)) => t.node_of_nugget(&e.nugget_id).is_some(),
        };
        if !resolved {
            report.push(&loc, format!("unresolved nugget reference {}", e.nugget_id));
        }
        match declared.get(e.attribute_set.as_str()) {
            None => report.push(
                &loc,
                format!("undeclared attribute set {}", e.attribute_set),
            ),
            Some(groups) => {
                for g in e.counts.keys() {
                    if !groups.contains(g) {
                        report.push(&loc, format!("undeclared group {g} in {}", e.attribute_set));
                    }
                }
            }
        }
        if !e.counts.values().any(|&c| c > 0) {
            report.push(&loc, "mention counts need at least one positive count");
        }
        if !seen.insert((&e.session_id, &e.nugget_id, &e.attribute_set)) {
            report.push(&loc, "duplicate mention entry");
        }
    }
    report
}

/// Checks that dissatisfaction values sit on user turns and within [0,1].
pub fn validate_dissatisfaction(
    table: &DissatisfactionTable,
    sessions: &[Session],
    trees: &[ConversationTree],
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let corpus = Corpus::new(sessions, trees);
    let mut seen = BTreeSet::new();
    for (i, e) in table.entries.iter().enumerate() {
        let loc = located(&e.origin, format!("dissatisfaction entry {}", i + 1));
        if !(e.value.is_finite() && (0.0..=1.0).contains(&e.value)) {
            report.push(&loc, format!("dissatisfaction out of [0,1]: {}", e.value));
        }
        let (turn, key) = match corpus.target(&e.session_id) {
            None => {
                report.push(
                    &loc,
                    format!("unresolved session reference {}", e.session_id),
                );
                continue;
            }
            Some(Target::Session(s)) => match e.turn_index.and_then(|ti| s.turn(ti)) {
                Some(turn) => (turn, turn.index.to_string()),
                None => {
                    report.push(&loc, "unresolved turn reference");
                    continue;
                }
            },
            Some(Target::Tree(t)) => match e.node_id.as_ref().and_then(|n| t.nodes.get(n)) {
                Some(node) => (&node.turn, e.node_id.clone().unwrap_or_default()),
                None => {
                    report.push(&loc, "unresolved node reference");
                    continue;
                }
            },
        };
        if turn.speaker != Speaker::User {
            report.push(&loc, "dissatisfaction must refer to a user turn");
        }
        if !seen.insert((e.session_id.clone(), key)) {
            report.push(&loc, "duplicate dissatisfaction entry");
        }
    }
    report
}
