//! Reference implementations and random corpus generators shared by the
//! integration tests. Nothing in `oracle` calls into the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use swan_audit::stochastic::{Branch, ConversationTree, TreeNode};
use swan_audit::{Nugget, NuggetKind, ScoreTable, Session, Speaker, Turn};

pub fn demo_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../demo")
}

pub mod oracle {
    use super::*;

    /// Worked out by hand and checked in a Python shell.
    pub const GOLDEN_WAN: f64 = 0.6666666666666666;
    pub const JSD_ONE_HOT_VS_UNIFORM: f64 = 0.31127812445913283;
    pub const RECOVERABILITY_SCRIPTED: f64 = 0.75;

    pub fn mean(xs: &[f64]) -> f64 {
        xs.iter().sum::<f64>() / xs.len() as f64
    }

    pub fn weighted_mean(weights: &[f64], values: &[f64]) -> Option<f64> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return None;
        }
        Some(weights.iter().zip(values).map(|(w, v)| w * v).sum::<f64>() / total)
    }

    pub fn linear_weight(position: usize, cutoff: f64) -> f64 {
        (1.0 - position as f64 / cutoff).max(0.0)
    }

    /// WAN with index-based linear weights, positions counted per session
    /// over system-turn nuggets. `score` is looked up by (session, nugget).
    pub fn linear_wan(
        sessions: &[Session],
        cutoff: f64,
        score: &dyn Fn(&str, &str) -> f64,
    ) -> Option<f64> {
        let mut weights = Vec::new();
        let mut values = Vec::new();
        for s in sessions {
            let mut pos = 0;
            for t in &s.turns {
                if t.speaker != Speaker::System {
                    continue;
                }
                for n in &t.nuggets {
                    pos += 1;
                    weights.push(linear_weight(pos, cutoff));
                    values.push(score(&s.session_id, &n.nugget_id));
                }
            }
        }
        weighted_mean(&weights, &values)
    }

    fn entropy2(p: &[f64]) -> f64 {
        -p.iter()
            .filter(|&&x| x > 0.0)
            .map(|x| x * x.log2())
            .sum::<f64>()
    }

    /// Jensen-Shannon divergence as H(M) - (H(P) + H(Q)) / 2, base 2.
    pub fn jsd(p: &[f64], q: &[f64]) -> f64 {
        let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
        entropy2(&m) - 0.5 * (entropy2(p) + entropy2(q))
    }

    pub fn tv(p: &[f64], q: &[f64]) -> f64 {
        0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    /// Breadth-first enumeration of root-to-leaf paths as (node ids, probability).
    pub fn tree_paths(tree: &ConversationTree) -> Vec<(Vec<String>, f64)> {
        let mut out = Vec::new();
        let mut queue = VecDeque::from([(vec![tree.root.clone()], 1.0)]);
        while let Some((path, p)) = queue.pop_front() {
            let node = &tree.nodes[path.last().unwrap()];
            if node.children.is_empty() {
                out.push((path, p));
                continue;
            }
            for c in &node.children {
                let mut next = path.clone();
                next.push(c.node_id.clone());
                queue.push_back((next, p * c.probability));
            }
        }
        out
    }

    /// Expected linear-weight WAN over the tree's paths.
    pub fn tree_wan(tree: &ConversationTree, cutoff: f64, scores: &BTreeMap<String, f64>) -> f64 {
        tree_paths(tree)
            .iter()
            .map(|(nodes, p)| {
                let mut weights = Vec::new();
                let mut values = Vec::new();
                for id in nodes {
                    let turn = &tree.nodes[id].turn;
                    if turn.speaker != Speaker::System {
                        continue;
                    }
                    for n in &turn.nuggets {
                        weights.push(linear_weight(weights.len() + 1, cutoff));
                        values.push(scores[&n.nugget_id]);
                    }
                }
                p * weighted_mean(&weights, &values).expect("every path has a weighted nugget")
            })
            .sum()
    }
}

fn turn_with(index: u32, speaker: Speaker, ids: &[String]) -> Turn {
    let mut text = String::new();
    let mut nuggets = Vec::new();
    for id in ids {
        if !text.is_empty() {
            text.push(' ');
        }
        let body = format!("fact {id}.");
        nuggets.push(Nugget {
            nugget_id: id.clone(),
            kind: NuggetKind::F,
            text: body.clone(),
            dialogue_act: None,
            start: Some(text.chars().count() as u64),
        });
        text.push_str(&body);
    }
    if text.is_empty() {
        text.push_str("ok");
    }
    Turn {
        index,
        speaker,
        text,
        nuggets,
    }
}

/// Sessions of alternating user/system turns with nuggets on system turns.
pub struct RandomCorpus {
    pub sessions: Vec<Session>,
    /// (session_id, turn_index, nugget_id) in generation order.
    pub nuggets: Vec<(String, u32, String)>,
}

impl RandomCorpus {
    pub fn generate(rng: &mut ChaCha8Rng, max_nuggets: usize) -> Self {
        let target = rng.gen_range(1..=max_nuggets);
        let n_sessions = rng.gen_range(1..=4.min(target));
        let mut counts = vec![1usize; n_sessions];
        for _ in n_sessions..target {
            counts[rng.gen_range(0..n_sessions)] += 1;
        }
        let mut sessions = Vec::new();
        let mut nuggets = Vec::new();
        for (si, &count) in counts.iter().enumerate() {
            let sid = format!("sess{si:02}");
            let n_system = rng.gen_range(1..=count.min(5));
            let mut per_turn = vec![1usize; n_system];
            for _ in n_system..count {
                per_turn[rng.gen_range(0..n_system)] += 1;
            }
            let mut turns = Vec::new();
            for (k, &m) in per_turn.iter().enumerate() {
                let u = 2 * k as u32 + 1;
                turns.push(turn_with(u, Speaker::User, &[]));
                let ids: Vec<String> = (0..m).map(|j| format!("{sid}-t{}-n{j}", u + 1)).collect();
                for id in &ids {
                    nuggets.push((sid.clone(), u + 1, id.clone()));
                }
                turns.push(turn_with(u + 1, Speaker::System, &ids));
            }
            sessions.push(Session {
                session_id: sid,
                system_id: "sys".into(),
                seed_id: None,
                turns,
            });
        }
        // file order is not canonical order
        sessions.shuffle(rng);
        Self { sessions, nuggets }
    }

    pub fn random_scores(
        &self,
        rng: &mut ChaCha8Rng,
        criterion: &str,
    ) -> (ScoreTable, BTreeMap<(String, String), f64>) {
        let mut table = ScoreTable::new(criterion);
        let mut map = BTreeMap::new();
        for (sid, turn, nid) in &self.nuggets {
            let s: f64 = rng.gen();
            table.push(sid, *turn, Some(nid), s);
            map.insert((sid.clone(), nid.clone()), s);
        }
        (table, map)
    }
}

/// A tree with at most `max_branch_points` branching nodes. Speakers
/// alternate from a user root; every system node carries 1-3 nuggets and
/// every leaf is a system node.
pub fn random_tree(rng: &mut ChaCha8Rng, id: &str, max_branch_points: usize) -> ConversationTree {
    let mut nodes = BTreeMap::new();
    let mut budget = max_branch_points;
    let mut counter = 0usize;
    let root = build(rng, &mut nodes, &mut budget, &mut counter, 0, id);
    ConversationTree {
        tree_id: id.into(),
        system_id: "sys".into(),
        seed_id: None,
        root,
        nodes,
    }
}

fn build(
    rng: &mut ChaCha8Rng,
    nodes: &mut BTreeMap<String, TreeNode>,
    budget: &mut usize,
    counter: &mut usize,
    depth: u32,
    tree_id: &str,
) -> String {
    let node_id = format!("n{counter:03}");
    *counter += 1;
    let speaker = if depth.is_multiple_of(2) {
        Speaker::User
    } else {
        Speaker::System
    };
    let ids: Vec<String> = match speaker {
        Speaker::User => Vec::new(),
        Speaker::System => (0..rng.gen_range(1..=3))
            .map(|j| format!("{tree_id}-{node_id}-{j}"))
            .collect(),
    };
    let turn = turn_with(0, speaker, &ids);

    let is_leaf = speaker == Speaker::System && (depth >= 7 || rng.gen_bool(0.3));
    let children = if is_leaf {
        Vec::new()
    } else {
        let fan = if *budget > 0 && rng.gen_bool(0.6) {
            *budget -= 1;
            rng.gen_range(2..=3)
        } else {
            1
        };
        let raw: Vec<f64> = (0..fan).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter()
            .map(|r| {
                let child = build(rng, nodes, budget, counter, depth + 1, tree_id);
                Branch {
                    node_id: child,
                    probability: r / total,
                }
            })
            .collect()
    };
    nodes.insert(node_id.clone(), TreeNode { turn, children });
    node_id
}

/// The chain of a single-path tree as a plain session.
pub fn chain_session(tree: &ConversationTree) -> Session {
    let mut turns = Vec::new();
    let mut id = tree.root.clone();
    loop {
        let node = &tree.nodes[&id];
        let mut turn = node.turn.clone();
        turn.index = turns.len() as u32 + 1;
        turns.push(turn);
        match node.children.first() {
            Some(b) => id = b.node_id.clone(),
            None => break,
        }
    }
    Session {
        session_id: tree.tree_id.clone(),
        system_id: tree.system_id.clone(),
        seed_id: None,
        turns,
    }
}

/// Random tree with a single child per node.
pub fn random_chain(rng: &mut ChaCha8Rng, id: &str) -> ConversationTree {
    random_tree(rng, id, 0)
}
