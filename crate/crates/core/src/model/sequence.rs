use super::{CriterionConfig, PositionedNugget, Session, Speaker};
use crate::error::{Result, SwanError};
use crate::weighting::PositionMode;

/// Start offset of every turn in the session's concatenated text, where each
/// turn is followed by exactly one separator character.
pub fn turn_offsets(session: &Session) -> Vec<u64> {
    let mut offsets = Vec::with_capacity(session.turns.len());
    let mut acc = 0u64;
    for turn in &session.turns {
        offsets.push(acc);
        acc += turn.char_len() + 1;
    }
    offsets
}

/// Nuggets of the criterion's kinds in document order, with positions.
///
/// User-turn nuggets are included (and advance positions) only when
/// `include_user_nuggets` is set. Offset positions are filled in offset mode
/// only, and then every included nugget must carry a `start`.
pub fn nugget_sequence(session: &Session, cfg: &CriterionConfig) -> Result<Vec<PositionedNugget>> {
    let offset_mode = cfg.weighting.position_mode == PositionMode::Offset;
    let offsets = turn_offsets(session);
    let last_turn = session.last_turn_index();

    let mut out = Vec::new();
    for (turn, turn_start) in session.turns.iter().zip(offsets) {
        if turn.speaker == Speaker::User && !cfg.include_user_nuggets {
            continue;
        }
        for nugget in turn.nuggets.iter().filter(|n| cfg.kinds.contains(&n.kind)) {
            let offset_position = if offset_mode {
                let start = nugget.start.ok_or_else(|| SwanError::MissingOffset {
                    session_id: session.session_id.clone(),
                    nugget_id: nugget.nugget_id.clone(),
                })?;
                Some(turn_start + start)
            } else {
                None
            };
            out.push(PositionedNugget {
                session_id: session.session_id.clone(),
                turn_index: turn.index,
                nugget_id: Some(nugget.nugget_id.clone()),
                index_position: out.len() as u32 + 1,
                offset_position,
                in_final_turn: Some(turn.index) == last_turn,
                speaker: turn.speaker,
            });
        }
    }
    Ok(out)
}

/// Per-session sequences concatenated in canonical order: ascending
/// `session_id`, then document order. All accumulation follows this order.
pub fn flatten_corpus(
    sessions: &[Session],
    cfg: &CriterionConfig,
) -> Result<Vec<PositionedNugget>> {
    let mut ordered: Vec<&Session> = sessions.iter().collect();
    ordered.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    let mut out = Vec::new();
    for session in ordered {
        out.extend(nugget_sequence(session, cfg)?);
    }
    Ok(out)
}
