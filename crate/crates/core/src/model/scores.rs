use std::collections::BTreeMap;

use super::{
    turn_offsets, CriterionConfig, Level, PositionedNugget, ScoreTable, Session, Speaker,
    TurnLevelMode,
};
use crate::error::{Result, SwanError};
use crate::weighting::PositionMode;

/// Which in-scope items must carry a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    /// Every system nugget (or system turn) of the sequence must be scored.
    Complete,
    /// Only items with an entry are scored; the rest leave the nugget set.
    Sparse,
}

type ScoreKey = (String, u32, Option<String>);

/// Session-keyed lookup over one criterion's score table.
#[derive(Debug, Clone, Default)]
pub struct ScoreIndex {
    criterion: String,
    scores: BTreeMap<ScoreKey, f64>,
    nugget_level: bool,
    turn_level: bool,
}

impl ScoreIndex {
    /// Indexes the session-keyed entries of `table`. Tree-keyed entries
    /// (without `turn_index`) are skipped; translate them per path first.
    pub fn new(table: &ScoreTable) -> Self {
        let mut index = ScoreIndex {
            criterion: table.criterion.clone(),
            ..Default::default()
        };
        for entry in &table.entries {
            let Some(turn_index) = entry.turn_index else {
                continue;
            };
            if entry.nugget_id.is_some() {
                index.nugget_level = true;
            } else {
                index.turn_level = true;
            }
            index.scores.insert(
                (
                    entry.session_id.clone(),
                    turn_index,
                    entry.nugget_id.clone(),
                ),
                entry.score,
            );
        }
        index
    }

    pub fn criterion(&self) -> &str {
        &self.criterion
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, session_id: &str, turn_index: u32, nugget_id: Option<&str>) -> Option<f64> {
        self.scores
            .get(&(
                session_id.to_string(),
                turn_index,
                nugget_id.map(str::to_string),
            ))
            .copied()
    }

    fn has_turn_entry(&self, session_id: &str, turn_index: u32) -> bool {
        self.get(session_id, turn_index, None).is_some()
    }
}

/// A criterion's nugget set for one session with aligned scores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResolvedScores {
    pub nuggets: Vec<PositionedNugget>,
    pub scores: Vec<f64>,
}

/// Attaches scores to a session's nugget sequence.
///
/// Nugget-level criteria look each nugget up by id. Turn-level criteria
/// either replace the turn's nuggets by one synthetic item carrying the turn
/// score, or (paper-literal mode) keep all of them with the score on the
/// first and zero on the rest.
pub fn resolve_scores(
    session: &Session,
    sequence: &[PositionedNugget],
    cfg: &CriterionConfig,
    index: &ScoreIndex,
    coverage: Coverage,
) -> Result<ResolvedScores> {
    if index.nugget_level && index.turn_level {
        return Err(SwanError::MixedLevels {
            criterion: cfg.name.clone(),
        });
    }
    match cfg.level {
        Level::Nugget => {
            if index.turn_level {
                return Err(SwanError::LevelMismatch {
                    criterion: cfg.name.clone(),
                    expected: "nugget".into(),
                });
            }
            resolve_nugget_level(session, sequence, cfg, index, coverage)
        }
        Level::Turn => {
            if index.nugget_level {
                return Err(SwanError::LevelMismatch {
                    criterion: cfg.name.clone(),
                    expected: "turn".into(),
                });
            }
            resolve_turn_level(session, sequence, cfg, index, coverage)
        }
    }
}

fn resolve_nugget_level(
    session: &Session,
    sequence: &[PositionedNugget],
    cfg: &CriterionConfig,
    index: &ScoreIndex,
    coverage: Coverage,
) -> Result<ResolvedScores> {
    let mut out = ResolvedScores::default();
    for n in sequence {
        match index.get(&session.session_id, n.turn_index, n.nugget_id.as_deref()) {
            Some(score) => {
                out.nuggets.push(n.clone());
                out.scores.push(score);
            }
            None if n.speaker == Speaker::System && coverage == Coverage::Complete => {
                return Err(SwanError::MissingScore {
                    criterion: cfg.name.clone(),
                    session_id: session.session_id.clone(),
                    turn_index: n.turn_index,
                    nugget_id: n.nugget_id.clone(),
                });
            }
            None => {}
        }
    }
    Ok(out)
}

fn resolve_turn_level(
    session: &Session,
    sequence: &[PositionedNugget],
    cfg: &CriterionConfig,
    index: &ScoreIndex,
    coverage: Coverage,
) -> Result<ResolvedScores> {
    let offset_mode = cfg.weighting.position_mode == PositionMode::Offset;
    let last_turn = session.last_turn_index();
    let mut out = ResolvedScores::default();

    for (turn, turn_start) in session.turns.iter().zip(turn_offsets(session)) {
        let members: Vec<&PositionedNugget> = sequence
            .iter()
            .filter(|n| n.turn_index == turn.index)
            .collect();
        let required = coverage == Coverage::Complete
            && turn.speaker == Speaker::System
            && !members.is_empty();
        if !required && !index.has_turn_entry(&session.session_id, turn.index) {
            continue;
        }
        let score = index
            .get(&session.session_id, turn.index, None)
            .ok_or_else(|| SwanError::MissingScore {
                criterion: cfg.name.clone(),
                session_id: session.session_id.clone(),
                turn_index: turn.index,
                nugget_id: None,
            })?;

        match cfg.turn_level_mode {
            TurnLevelMode::Synthetic => {
                let (index_position, offset_position) = match members.first() {
                    Some(first) => (first.index_position, first.offset_position),
                    None => {
                        // A turn without in-scope nuggets sits where its first
                        // nugget would have been.
                        let before = sequence
                            .iter()
                            .filter(|n| n.turn_index < turn.index)
                            .count();
                        (before as u32 + 1, offset_mode.then_some(turn_start))
                    }
                };
                out.nuggets.push(PositionedNugget {
                    session_id: session.session_id.clone(),
                    turn_index: turn.index,
                    nugget_id: None,
                    index_position,
                    offset_position,
                    in_final_turn: Some(turn.index) == last_turn,
                    speaker: turn.speaker,
                });
                out.scores.push(score);
            }
            TurnLevelMode::PaperLiteral => {
                if members.is_empty() {
                    return Err(SwanError::UnattachableTurnScore {
                        criterion: cfg.name.clone(),
                        session_id: session.session_id.clone(),
                        turn_index: turn.index,
                    });
                }
                for (k, n) in members.into_iter().enumerate() {
                    out.nuggets.push(n.clone());
                    out.scores.push(if k == 0 { score } else { 0.0 });
                }
            }
        }
    }
    Ok(out)
}
