//! Conciseness as a length penalty over correct content.

use std::collections::BTreeMap;

use crate::error::{Result, SwanError};
use crate::model::{NuggetKind, ScoreTable, Session, Speaker, Turn};

/// `min(1, slack * useful / |text|)` where `useful` is the character length
/// of the turn's F-nuggets weighted by their correctness scores. Nuggets
/// without a correctness score count as incorrect.
pub fn conciseness_turn_score(
    turn: &Turn,
    correctness: &BTreeMap<&str, f64>,
    slack: f64,
) -> Result<f64> {
    if slack.is_nan() || slack < 1.0 {
        return Err(SwanError::InvalidParameter(format!(
            "slack must be >= 1, got {slack}"
        )));
    }
    let len = turn.char_len();
    if len == 0 {
        return Err(SwanError::EmptyTurnText {
            session_id: String::new(),
            turn_index: turn.index,
        });
    }
    let useful: f64 = turn
        .nuggets
        .iter()
        .filter(|n| n.kind == NuggetKind::F)
        .map(|n| {
            let score = correctness
                .get(n.nugget_id.as_str())
                .copied()
                .unwrap_or(0.0);
            n.text.chars().count() as f64 * score
        })
        .sum();
    Ok((slack * useful / len as f64).min(1.0))
}

/// Turn-level conciseness for every system turn of a session, given the
/// session's nugget-level correctness scores keyed by nugget id.
pub fn conciseness_scores(
    session: &Session,
    correctness: &BTreeMap<&str, f64>,
    slack: f64,
    criterion: &str,
) -> Result<ScoreTable> {
    let mut table = ScoreTable::new(criterion);
    for turn in session
        .turns
        .iter()
        .filter(|t| t.speaker == Speaker::System)
    {
        let score = conciseness_turn_score(turn, correctness, slack).map_err(|e| match e {
            SwanError::EmptyTurnText { turn_index, .. } => SwanError::EmptyTurnText {
                session_id: session.session_id.clone(),
                turn_index,
            },
            other => other,
        })?;
        table.push(&session.session_id, turn.index, None, score);
    }
    Ok(table)
}
