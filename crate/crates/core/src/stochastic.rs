//! Conversation trees with branch probabilities.
//!
//! A tree is scored by materializing every root-to-leaf path as a session,
//! computing the criterion's WAN on each path, and taking the
//! probability-weighted mean over paths. Nuggets on a shared prefix get the
//! same positions (hence weights) on every path through them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::audit::{evaluate_criterion, Annotations, AuditOptions};
use crate::engine::{self, AuditResult, Component, CriterionResult, UndefinedPolicy};
use crate::error::{Result, SwanError};
use crate::model::{
    validate::validate_turn, CriterionConfig, Schema, ScoreRecord, ScoreTable, Session, Turn,
    ValidationReport,
};
use crate::scorers::{DissatisfactionEntry, DissatisfactionTable, MentionEntry, MentionTable};

pub const DEFAULT_PATH_CAP: usize = 10_000;
const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// How tree scores are aggregated, echoed into reports.
pub const STOCHASTIC_SEMANTICS: &str =
    "expectation over root-to-leaf paths: sum of path probability times the WAN computed on that path";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub node_id: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub turn: Turn,
    #[serde(default)]
    pub children: Vec<Branch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationTree {
    pub tree_id: String,
    pub system_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_id: Option<String>,
    pub root: String,
    pub nodes: BTreeMap<String, TreeNode>,
}

impl ConversationTree {
    /// Node holding the nugget with this id.
    pub fn node_of_nugget(&self, nugget_id: &str) -> Option<&str> {
        self.nodes
            .iter()
            .find(|(_, n)| n.turn.nuggets.iter().any(|g| g.nugget_id == nugget_id))
            .map(|(id, _)| id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConversationPath {
    pub nodes: Vec<String>,
    pub probability: f64,
    /// The path as a session with turns re-indexed from 1.
    pub session: Session,
}

fn trim_number(x: f64) -> String {
    let s = format!("{x:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

pub fn validate_tree(tree: &ConversationTree) -> ValidationReport {
    let mut report = ValidationReport::default();
    let loc = format!("tree {}", tree.tree_id);
    if !tree.nodes.contains_key(&tree.root) {
        report.push(&loc, format!("root node {} does not exist", tree.root));
        return report;
    }

    let mut references: BTreeMap<&str, usize> = BTreeMap::new();
    *references.entry(tree.root.as_str()).or_default() += 1;
    let mut nugget_ids = BTreeSet::new();
    for (id, node) in &tree.nodes {
        let nloc = format!("{loc}, node {id}");
        validate_turn(&node.turn, &nloc, &mut nugget_ids, &mut report);
        for b in &node.children {
            if !tree.nodes.contains_key(&b.node_id) {
                report.push(&nloc, format!("child {} does not exist", b.node_id));
                continue;
            }
            *references.entry(b.node_id.as_str()).or_default() += 1;
            if !(b.probability > 0.0 && b.probability <= 1.0) {
                report.push(
                    &nloc,
                    format!(
                        "branch probability to {} must be in (0,1], got {}",
                        b.node_id, b.probability
                    ),
                );
            }
        }
        if !node.children.is_empty() {
            let sum: f64 = node.children.iter().map(|b| b.probability).sum();
            if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
                report.push(&nloc, format!("probabilities sum to {}", trim_number(sum)));
            }
        }
    }
    for id in tree.nodes.keys() {
        match references.get(id.as_str()).copied().unwrap_or(0) {
            1 => {}
            0 => {}
            n => report.push(&loc, format!("node {id} is referenced {n} times")),
        }
    }

    // Reachability from the root; a revisit means a cycle or a merge.
    let mut visited = BTreeSet::new();
    let mut stack = vec![tree.root.as_str()];
    while let Some(id) = stack.pop() {
        if !visited.insert(id) {
            report.push(&loc, format!("node {id} is reached twice (cycle or merge)"));
            continue;
        }
        if let Some(node) = tree.nodes.get(id) {
            stack.extend(
                node.children
                    .iter()
                    .filter(|b| tree.nodes.contains_key(&b.node_id))
                    .map(|b| b.node_id.as_str()),
            );
        }
    }
    for id in tree.nodes.keys() {
        if !visited.contains(id.as_str()) {
            report.push(&loc, format!("node {id} is unreachable from the root"));
        }
    }
    report
}

/// Root-to-leaf paths in depth-first, child-declaration order.
pub fn enumerate_paths(tree: &ConversationTree, cap: usize) -> Result<Vec<ConversationPath>> {
    let report = validate_tree(tree);
    if !report.is_ok() {
        return Err(SwanError::InvalidTree {
            tree_id: tree.tree_id.clone(),
            message: report.violations[0].to_string(),
        });
    }

    let mut paths = Vec::new();
    // (node, path so far, probability so far)
    let mut stack: Vec<(&str, Vec<&str>, f64)> = vec![(tree.root.as_str(), Vec::new(), 1.0)];
    while let Some((id, mut prefix, probability)) = stack.pop() {
        prefix.push(id);
        let node = &tree.nodes[id];
        if node.children.is_empty() {
            if paths.len() == cap {
                return Err(SwanError::PathCapExceeded {
                    tree_id: tree.tree_id.clone(),
                    cap,
                });
            }
            paths.push(materialize(tree, &prefix, probability));
            continue;
        }
        for b in node.children.iter().rev() {
            stack.push((
                b.node_id.as_str(),
                prefix.clone(),
                probability * b.probability,
            ));
        }
    }
    Ok(paths)
}

fn materialize(tree: &ConversationTree, nodes: &[&str], probability: f64) -> ConversationPath {
    let leaf = nodes.last().copied().unwrap_or_default();
    let turns = nodes
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let mut turn = tree.nodes[*id].turn.clone();
            turn.index = i as u32 + 1;
            turn
        })
        .collect();
    ConversationPath {
        nodes: nodes.iter().map(|s| s.to_string()).collect(),
        probability,
        session: Session {
            session_id: format!("{}#{}", tree.tree_id, leaf),
            system_id: tree.system_id.clone(),
            seed_id: tree.seed_id.clone(),
            turns,
        },
    }
}

/// Re-keys tree annotations (node ids, tree-wide nugget ids) onto one
/// materialized path. Entries off the path are dropped.
pub fn path_annotations(
    tree: &ConversationTree,
    path: &ConversationPath,
    annotations: &Annotations,
) -> Annotations {
    let turn_of: BTreeMap<&str, u32> = path
        .nodes
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i as u32 + 1))
        .collect();
    let nugget_turn: BTreeMap<&str, u32> = path
        .nodes
        .iter()
        .enumerate()
        .flat_map(|(i, id)| {
            tree.nodes[id]
                .turn
                .nuggets
                .iter()
                .map(move |n| (n.nugget_id.as_str(), i as u32 + 1))
        })
        .collect();
    let sid = &path.session.session_id;

    let tables = annotations.tables.values().map(|t| ScoreTable {
        criterion: t.criterion.clone(),
        entries: t
            .entries
            .iter()
            .filter(|e| e.session_id == tree.tree_id)
            .filter_map(|e| {
                let turn_index = match (&e.node_id, &e.nugget_id) {
                    (Some(node), _) => *turn_of.get(node.as_str())?,
                    (None, Some(nid)) => *nugget_turn.get(nid.as_str())?,
                    (None, None) => return None,
                };
                Some(ScoreRecord {
                    criterion: e.criterion.clone(),
                    session_id: sid.clone(),
                    turn_index: Some(turn_index),
                    node_id: None,
                    nugget_id: e.nugget_id.clone(),
                    score: e.score,
                    origin: e.origin.clone(),
                })
            })
            .collect(),
    });

    let mentions = MentionTable {
        entries: annotations
            .mentions
            .entries
            .iter()
            .filter(|e| {
                e.session_id == tree.tree_id && nugget_turn.contains_key(e.nugget_id.as_str())
            })
            .map(|e| MentionEntry {
                session_id: sid.clone(),
                ..e.clone()
            })
            .collect(),
    };

    let dissatisfaction = DissatisfactionTable {
        entries: annotations
            .dissatisfaction
            .entries
            .iter()
            .filter(|e| e.session_id == tree.tree_id)
            .filter_map(|e| {
                let turn_index = *turn_of.get(e.node_id.as_deref()?)?;
                Some(DissatisfactionEntry {
                    session_id: sid.clone(),
                    turn_index: Some(turn_index),
                    node_id: None,
                    value: e.value,
                    origin: e.origin.clone(),
                })
            })
            .collect(),
    };

    Annotations::new(tables, mentions, dissatisfaction)
}

/// A tree's paths paired with their re-keyed annotations.
pub struct PreparedTree<'a> {
    pub tree: &'a ConversationTree,
    pub paths: Vec<ConversationPath>,
    annotations: Vec<Annotations>,
}

impl<'a> PreparedTree<'a> {
    pub fn new(tree: &'a ConversationTree, annotations: &Annotations, cap: usize) -> Result<Self> {
        let paths = enumerate_paths(tree, cap)?;
        let per_path = paths
            .iter()
            .map(|p| path_annotations(tree, p, annotations))
            .collect();
        Ok(Self {
            tree,
            paths,
            annotations: per_path,
        })
    }

    /// Expected WAN of one criterion over the tree's paths.
    pub fn criterion(
        &self,
        cfg: &CriterionConfig,
        options: AuditOptions,
    ) -> Result<CriterionResult> {
        let mut per_path = Vec::with_capacity(self.paths.len());
        for (path, ann) in self.paths.iter().zip(&self.annotations) {
            let r = evaluate_criterion(
                std::slice::from_ref(&path.session),
                cfg,
                ann,
                options.aggregation,
            )?;
            per_path.push((path, r));
        }

        let undefined: Vec<String> = per_path
            .iter()
            .filter(|(_, r)| !r.is_defined())
            .map(|(p, _)| p.session.session_id.clone())
            .collect();
        let mut components = Vec::with_capacity(per_path.len());
        let mut contributions = Vec::new();
        let mut expected = 0.0;
        let mut mass = 0.0;
        let mut total_weight = 0.0;
        for (path, r) in &per_path {
            components.push(Component {
                id: path.session.session_id.clone(),
                wan: r.wan,
                mass: path.probability,
            });
            if let Some(v) = r.wan {
                expected += path.probability * v;
                mass += path.probability;
                total_weight += path.probability * r.total_weight;
            }
            contributions.extend(r.contributions.iter().cloned());
        }

        let (wan, diagnostic, dropped) = if undefined.is_empty() {
            (Some(expected), None, Vec::new())
        } else if options.policy == UndefinedPolicy::Strict {
            (
                None,
                Some(format!("undefined WAN on paths {}", undefined.join(", "))),
                Vec::new(),
            )
        } else if mass > 0.0 {
            (Some(expected / mass), None, undefined)
        } else {
            (
                None,
                Some("undefined WAN on every path".to_string()),
                undefined,
            )
        };
        Ok(CriterionResult {
            criterion: cfg.name.clone(),
            wan,
            total_weight,
            aggregation: options.aggregation,
            diagnostic,
            components,
            dropped,
            contributions,
        })
    }

    pub fn audit(&self, schema: &Schema, options: AuditOptions) -> Result<AuditResult> {
        let results = schema
            .criteria
            .iter()
            .map(|cfg| self.criterion(cfg, options))
            .collect::<Result<Vec<_>>>()?;
        engine::swan(&results, schema, options.policy)
    }
}

/// Probability-weighted mean of per-path WANs for one criterion.
pub fn stochastic_wan(
    tree: &ConversationTree,
    cfg: &CriterionConfig,
    annotations: &Annotations,
    options: AuditOptions,
    cap: usize,
) -> Result<CriterionResult> {
    PreparedTree::new(tree, annotations, cap)?.criterion(cfg, options)
}

/// SWAN over the stochastic WANs of every schema criterion.
pub fn stochastic_swan(
    tree: &ConversationTree,
    schema: &Schema,
    annotations: &Annotations,
    options: AuditOptions,
    cap: usize,
) -> Result<AuditResult> {
    PreparedTree::new(tree, annotations, cap)?.audit(schema, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Nugget, NuggetKind, Speaker};

    fn node(speaker: Speaker, nuggets: &[&str], children: &[(&str, f64)]) -> TreeNode {
        TreeNode {
            turn: Turn {
                index: 0,
                speaker,
                text: "turn text".into(),
                nuggets: nuggets
                    .iter()
                    .map(|id| Nugget {
                        nugget_id: id.to_string(),
                        kind: NuggetKind::F,
                        text: id.to_string(),
                        dialogue_act: None,
                        start: None,
                    })
                    .collect(),
            },
            children: children
                .iter()
                .map(|(id, p)| Branch {
                    node_id: id.to_string(),
                    probability: *p,
                })
                .collect(),
        }
    }

    fn tree(nodes: Vec<(&str, TreeNode)>) -> ConversationTree {
        ConversationTree {
            tree_id: "t".into(),
            system_id: "sys".into(),
            seed_id: Some("seed".into()),
            root: "r".into(),
            nodes: nodes
                .into_iter()
                .map(|(id, n)| (id.to_string(), n))
                .collect(),
        }
    }

    fn two_leaves() -> ConversationTree {
        tree(vec![
            ("r", node(Speaker::User, &[], &[("a", 0.6), ("b", 0.4)])),
            ("a", node(Speaker::System, &["na"], &[])),
            ("b", node(Speaker::System, &["nb"], &[])),
        ])
    }

    #[test]
    fn chain_is_valid_single_path() {
        let t = tree(vec![
            ("r", node(Speaker::User, &[], &[("s", 1.0)])),
            ("s", node(Speaker::System, &["n1"], &[])),
        ]);
        assert!(validate_tree(&t).is_ok());
        let paths = enumerate_paths(&t, DEFAULT_PATH_CAP).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].probability, 1.0);
        assert_eq!(paths[0].session.session_id, "t#s");
        assert_eq!(paths[0].session.turns[1].index, 2);
    }

    #[test]
    fn two_leaf_paths() {
        let paths = enumerate_paths(&two_leaves(), DEFAULT_PATH_CAP).unwrap();
        let probs: Vec<f64> = paths.iter().map(|p| p.probability).collect();
        assert_eq!(probs, vec![0.6, 0.4]);
        assert_eq!(paths[0].nodes, vec!["r", "a"]);
    }

    #[test]
    fn two_binary_branch_points() {
        let t = tree(vec![
            ("r", node(Speaker::User, &[], &[("a", 0.5), ("b", 0.5)])),
            ("a", node(Speaker::System, &[], &[("a1", 0.5), ("a2", 0.5)])),
            ("b", node(Speaker::System, &[], &[("b1", 0.5), ("b2", 0.5)])),
            ("a1", node(Speaker::User, &[], &[])),
            ("a2", node(Speaker::User, &[], &[])),
            ("b1", node(Speaker::User, &[], &[])),
            ("b2", node(Speaker::User, &[], &[])),
        ]);
        let paths = enumerate_paths(&t, DEFAULT_PATH_CAP).unwrap();
        assert_eq!(paths.len(), 4);
        assert!(paths.iter().all(|p| p.probability == 0.25));
        assert!(matches!(
            enumerate_paths(&t, 3),
            Err(SwanError::PathCapExceeded { cap: 3, .. })
        ));
    }

    #[test]
    fn probability_sum_violation() {
        let t = tree(vec![
            ("r", node(Speaker::User, &[], &[("a", 0.6), ("b", 0.3)])),
            ("a", node(Speaker::System, &[], &[])),
            ("b", node(Speaker::System, &[], &[])),
        ]);
        let r = validate_tree(&t);
        assert!(r.contains("probabilities sum to 0.9"), "{r}");
        assert!(enumerate_paths(&t, 10).is_err());
    }

    #[test]
    fn unreachable_and_cycles() {
        let mut t = two_leaves();
        t.nodes
            .insert("orphan".into(), node(Speaker::User, &[], &[]));
        assert!(validate_tree(&t).contains("unreachable"));

        let t = tree(vec![
            ("r", node(Speaker::User, &[], &[("a", 1.0)])),
            ("a", node(Speaker::System, &[], &[("r", 1.0)])),
        ]);
        assert!(!validate_tree(&t).is_ok());
        assert!(enumerate_paths(&t, 10).is_err());
    }

    #[test]
    fn duplicate_nuggets_across_branches() {
        let t = tree(vec![
            ("r", node(Speaker::User, &[], &[("a", 0.5), ("b", 0.5)])),
            ("a", node(Speaker::System, &["n"], &[])),
            ("b", node(Speaker::System, &["n"], &[])),
        ]);
        assert!(validate_tree(&t).contains("duplicate nugget_id"));
    }

    fn tree_table(scores: &[(&str, f64)]) -> Annotations {
        let table = ScoreTable {
            criterion: "correctness".into(),
            entries: scores
                .iter()
                .map(|(n, s)| ScoreRecord {
                    criterion: "correctness".into(),
                    session_id: "t".into(),
                    turn_index: None,
                    node_id: None,
                    nugget_id: Some(n.to_string()),
                    score: *s,
                    origin: None,
                })
                .collect(),
        };
        Annotations::new(
            [table],
            MentionTable::default(),
            DissatisfactionTable::default(),
        )
    }

    #[test]
    fn expectation_over_paths() {
        let ann = tree_table(&[("na", 1.0), ("nb", 0.5)]);
        let r = stochastic_wan(
            &two_leaves(),
            &CriterionConfig::new("correctness"),
            &ann,
            AuditOptions::default(),
            DEFAULT_PATH_CAP,
        )
        .unwrap();
        assert!((r.wan.unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(r.components.len(), 2);

        let ann = tree_table(&[("na", 0.3), ("nb", 0.3)]);
        let r = stochastic_wan(
            &two_leaves(),
            &CriterionConfig::new("correctness"),
            &ann,
            AuditOptions::default(),
            DEFAULT_PATH_CAP,
        )
        .unwrap();
        assert!((r.wan.unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn undefined_path_policies() {
        let mut t = two_leaves();
        t.nodes.get_mut("b").unwrap().turn.nuggets.clear();
        let ann = tree_table(&[("na", 0.9)]);
        let cfg = CriterionConfig::new("correctness");
        let strict = stochastic_wan(&t, &cfg, &ann, AuditOptions::default(), 10).unwrap();
        assert!(strict.wan.is_none());
        let skip = AuditOptions {
            policy: UndefinedPolicy::SkipUndefined,
            ..Default::default()
        };
        let r = stochastic_wan(&t, &cfg, &ann, skip, 10).unwrap();
        assert!((r.wan.unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(r.dropped, vec!["t#b"]);
    }

    #[test]
    fn shared_prefix_keeps_positions() {
        let t = tree(vec![
            (
                "r",
                node(Speaker::System, &["p1", "p2"], &[("a", 0.5), ("b", 0.5)]),
            ),
            ("a", node(Speaker::System, &["na"], &[])),
            ("b", node(Speaker::System, &["nb"], &[])),
        ]);
        let ann = tree_table(&[("p1", 1.0), ("p2", 0.0), ("na", 0.5), ("nb", 0.5)]);
        let mut cfg = CriterionConfig::new("correctness");
        cfg.weighting =
            crate::weighting::WeightingConfig::linear(4.0, crate::weighting::PositionMode::Index);
        let r = stochastic_wan(&t, &cfg, &ann, AuditOptions::default(), 10).unwrap();
        let p1: Vec<f64> = r
            .contributions
            .iter()
            .filter(|c| c.nugget_id.as_deref() == Some("p1"))
            .map(|c| c.weight)
            .collect();
        assert_eq!(p1, vec![0.75, 0.75]);
    }
}
