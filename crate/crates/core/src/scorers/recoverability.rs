//! Recoverability: whether the system keeps a dissatisfied user talking.

use std::collections::BTreeMap;

use super::DissatisfactionTable;
use crate::error::{Result, SwanError};
use crate::model::{ScoreTable, Session, Speaker};

/// Turn-level recoverability scores for one session.
///
/// For every user turn whose dissatisfaction `d_n` reaches `threshold`, the
/// next system turn is scored `max(0, (d_n - d_next) / d_n)`, where `d_next`
/// is the dissatisfaction of the following user turn (0 if unannotated). If
/// the user never speaks again, the system turn scores 0. When several
/// dissatisfied user turns precede the same system turn, the latest one
/// counts.
pub fn recoverability_scores(
    session: &Session,
    dissatisfaction: &DissatisfactionTable,
    threshold: f64,
    criterion: &str,
) -> Result<ScoreTable> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(SwanError::InvalidParameter(format!(
            "threshold must be in (0,1], got {threshold}"
        )));
    }
    let mut d: BTreeMap<u32, f64> = BTreeMap::new();
    for e in dissatisfaction
        .entries
        .iter()
        .filter(|e| e.session_id == session.session_id)
    {
        if !(0.0..=1.0).contains(&e.value) {
            return Err(SwanError::InvalidParameter(format!(
                "dissatisfaction out of [0,1]: {}",
                e.value
            )));
        }
        if let Some(ti) = e.turn_index {
            d.insert(ti, e.value);
        }
    }

    let mut scored: BTreeMap<u32, f64> = BTreeMap::new();
    for (pos, turn) in session.turns.iter().enumerate() {
        if turn.speaker != Speaker::User {
            continue;
        }
        let Some(&d_n) = d.get(&turn.index) else {
            continue;
        };
        if d_n < threshold {
            continue;
        }
        let rest = &session.turns[pos + 1..];
        let Some(sys_pos) = rest.iter().position(|t| t.speaker == Speaker::System) else {
            continue;
        };
        let system_turn = &rest[sys_pos];
        let score = match rest[sys_pos + 1..]
            .iter()
            .find(|t| t.speaker == Speaker::User)
        {
            Some(next_user) => {
                let d_next = d.get(&next_user.index).copied().unwrap_or(0.0);
                ((d_n - d_next) / d_n).max(0.0)
            }
            None => 0.0,
        };
        scored.insert(system_turn.index, score);
    }

    let mut table = ScoreTable::new(criterion);
    for (turn_index, score) in scored {
        table.push(&session.session_id, turn_index, None, score);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Turn;
    use crate::scorers::DissatisfactionEntry;
    use proptest::prelude::*;

    fn session(speakers: &[Speaker]) -> Session {
        Session {
            session_id: "s".into(),
            system_id: "sys".into(),
            seed_id: None,
            turns: speakers
                .iter()
                .enumerate()
                .map(|(i, sp)| Turn {
                    index: i as u32 + 1,
                    speaker: *sp,
                    text: "t".into(),
                    nuggets: vec![],
                })
                .collect(),
        }
    }

    fn table(values: &[(u32, f64)]) -> DissatisfactionTable {
        DissatisfactionTable {
            entries: values
                .iter()
                .map(|(t, v)| DissatisfactionEntry {
                    session_id: "s".into(),
                    turn_index: Some(*t),
                    node_id: None,
                    value: *v,
                    origin: None,
                })
                .collect(),
        }
    }

    use Speaker::{System as S, User as U};

    #[test]
    fn relative_drop() {
        let s = session(&[U, S, U, S, U, S]);
        let t = recoverability_scores(&s, &table(&[(3, 0.8), (5, 0.2)]), 0.6, "recoverability")
            .unwrap();
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.entries[0].turn_index, Some(4));
        assert!((t.entries[0].score - 0.75).abs() < 1e-12);
    }

    #[test]
    fn no_recovery_clamps_to_zero() {
        let s = session(&[U, S, U, S]);
        let t = recoverability_scores(&s, &table(&[(1, 0.7), (3, 0.9)]), 0.6, "r").unwrap();
        assert_eq!(t.entries[0].turn_index, Some(2));
        assert_eq!(t.entries[0].score, 0.0);
    }

    #[test]
    fn unannotated_next_user_turn_is_satisfied() {
        let s = session(&[U, S, U]);
        let t = recoverability_scores(&s, &table(&[(1, 0.7)]), 0.6, "r").unwrap();
        assert_eq!(t.entries[0].score, 1.0);
    }

    #[test]
    fn abandonment_scores_zero() {
        let s = session(&[U, S, U, S]);
        let t = recoverability_scores(&s, &table(&[(3, 0.9)]), 0.6, "r").unwrap();
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.entries[0].turn_index, Some(4));
        assert_eq!(t.entries[0].score, 0.0);
    }

    #[test]
    fn no_system_follow_up_emits_nothing() {
        let s = session(&[U, S, U]);
        let t = recoverability_scores(&s, &table(&[(3, 0.9)]), 0.6, "r").unwrap();
        assert!(t.entries.is_empty());
    }

    #[test]
    fn below_threshold_ignored() {
        let s = session(&[U, S, U]);
        let t = recoverability_scores(&s, &table(&[(1, 0.5)]), 0.6, "r").unwrap();
        assert!(t.entries.is_empty());
    }

    #[test]
    fn latest_dissatisfied_turn_wins() {
        let s = session(&[U, U, S, U]);
        let t =
            recoverability_scores(&s, &table(&[(1, 1.0), (2, 0.8), (4, 0.4)]), 0.6, "r").unwrap();
        assert_eq!(t.entries.len(), 1);
        assert!((t.entries[0].score - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bad_parameters() {
        let s = session(&[U, S]);
        assert!(recoverability_scores(&s, &table(&[]), 0.0, "r").is_err());
        assert!(recoverability_scores(&s, &table(&[(1, 1.2)]), 0.5, "r").is_err());
    }

    proptest! {
        #[test]
        fn bounded_and_zero_without_decrease(d in prop::collection::vec(0.0f64..=1.0, 1..6), tau in 0.05f64..=1.0) {
            let mut speakers = Vec::new();
            for _ in 0..d.len() {
                speakers.push(U);
                speakers.push(S);
            }
            let s = session(&speakers);
            let mut sorted = d.clone();
            sorted.sort_by(f64::total_cmp);
            let values: Vec<(u32, f64)> = sorted.iter().enumerate().map(|(i, v)| (2 * i as u32 + 1, *v)).collect();
            let t = recoverability_scores(&s, &table(&values), tau, "r").unwrap();
            for e in &t.entries {
                prop_assert_eq!(e.score, 0.0);
            }
            let values: Vec<(u32, f64)> = d.iter().enumerate().map(|(i, v)| (2 * i as u32 + 1, *v)).collect();
            let t = recoverability_scores(&s, &table(&values), tau, "r").unwrap();
            for e in &t.entries {
                prop_assert!((0.0..=1.0).contains(&e.score));
            }
        }
    }
}
