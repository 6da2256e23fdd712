//! Position-aware nugget weights.
//!
//! Positions restart in every session: a nugget's weight reflects how far
//! into its own conversation it appears.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SwanError};
use crate::model::PositionedNugget;

pub const DEFAULT_INDEX_CUTOFF: f64 = 20.0;
pub const DEFAULT_OFFSET_CUTOFF: f64 = 4000.0;
pub const DEFAULT_EXPONENTIAL_BASE: f64 = 0.9;

/// Characters per unit exponent of the exponential scheme in offset mode.
pub const OFFSET_EXPONENT_SCALE: f64 = 100.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Uniform,
    Linear,
    Recency,
    Exponential,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionMode {
    /// Rank of the nugget in the session's sequence.
    #[default]
    Index,
    /// Character offset in the session's concatenated text.
    Offset,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchoring {
    #[default]
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightingConfig {
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub position_mode: PositionMode,
    /// Linear cutoff; defaults depend on the position mode.
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(default = "default_base")]
    pub base: f64,
    #[serde(default)]
    pub anchoring: Anchoring,
}

fn default_base() -> f64 {
    DEFAULT_EXPONENTIAL_BASE
}

impl Default for WeightingConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Uniform,
            position_mode: PositionMode::Index,
            cutoff: None,
            base: DEFAULT_EXPONENTIAL_BASE,
            anchoring: Anchoring::Identity,
        }
    }
}

impl WeightingConfig {
    pub fn with_scheme(scheme: Scheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }

    pub fn linear(cutoff: f64, mode: PositionMode) -> Self {
        Self {
            scheme: Scheme::Linear,
            position_mode: mode,
            cutoff: Some(cutoff),
            ..Self::default()
        }
    }

    pub fn effective_cutoff(&self) -> f64 {
        self.cutoff.unwrap_or(match self.position_mode {
            PositionMode::Index => DEFAULT_INDEX_CUTOFF,
            PositionMode::Offset => DEFAULT_OFFSET_CUTOFF,
        })
    }

    pub fn check(&self) -> Result<()> {
        let cutoff = self.effective_cutoff();
        if cutoff.is_nan() || cutoff <= 0.0 {
            return Err(SwanError::InvalidParameter(format!(
                "L must be > 0, got {cutoff}"
            )));
        }
        if !(self.base > 0.0 && self.base <= 1.0) {
            return Err(SwanError::InvalidParameter(format!(
                "base must be in (0,1], got {}",
                self.base
            )));
        }
        Ok(())
    }
}

fn position(u: &PositionedNugget, mode: PositionMode) -> Result<f64> {
    match mode {
        PositionMode::Index => Ok(u.index_position as f64),
        PositionMode::Offset => {
            u.offset_position
                .map(|o| o as f64)
                .ok_or_else(|| SwanError::MissingOffset {
                    session_id: u.session_id.clone(),
                    nugget_id: u
                        .nugget_id
                        .clone()
                        .unwrap_or_else(|| format!("turn {}", u.turn_index)),
                })
        }
    }
}

pub fn weight_uniform(_u: &PositionedNugget) -> f64 {
    1.0
}

/// `max(0, 1 - pos/L)`.
pub fn weight_linear(u: &PositionedNugget, cutoff: f64, mode: PositionMode) -> Result<f64> {
    if cutoff.is_nan() || cutoff <= 0.0 {
        return Err(SwanError::InvalidParameter(format!(
            "L must be > 0, got {cutoff}"
        )));
    }
    let pos = position(u, mode)?;
    Ok((1.0 - pos / cutoff).max(0.0))
}

/// 1 for nuggets in the last turn of their session, whoever spoke it.
pub fn weight_recency(u: &PositionedNugget) -> f64 {
    if u.in_final_turn {
        1.0
    } else {
        0.0
    }
}

/// `base^(index - 1)` in index mode, `base^(offset / 100)` in offset mode.
pub fn weight_exponential(u: &PositionedNugget, base: f64, mode: PositionMode) -> Result<f64> {
    if !(base > 0.0 && base <= 1.0) {
        return Err(SwanError::InvalidParameter(format!(
            "base must be in (0,1], got {base}"
        )));
    }
    let exponent = match mode {
        PositionMode::Index => position(u, mode)? - 1.0,
        PositionMode::Offset => position(u, mode)? / OFFSET_EXPONENT_SCALE,
    };
    Ok(base.powf(exponent))
}

/// Multiplier applied on top of the base weight, given the nuggets already
/// seen in the same session and their scores.
pub trait AnchoringHook {
    fn multiplier(&self, seen: &[(&PositionedNugget, f64)], current: &PositionedNugget) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityAnchoring;

impl AnchoringHook for IdentityAnchoring {
    fn multiplier(&self, _seen: &[(&PositionedNugget, f64)], _current: &PositionedNugget) -> f64 {
        1.0
    }
}

/// Per-nugget weights aligned with a nugget list.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    /// Sum of `weights` in list order.
    pub total_weight: f64,
}

impl WeightVector {
    pub fn from_weights(weights: Vec<f64>) -> Self {
        let total_weight = weights.iter().fold(0.0, |acc, w| acc + w);
        Self {
            weights,
            total_weight,
        }
    }

    /// True when no nugget carries weight; the WAN is then undefined.
    pub fn is_degenerate(&self) -> bool {
        self.total_weight.is_nan() || self.total_weight <= 0.0
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn base_weight(u: &PositionedNugget, cfg: &WeightingConfig) -> Result<f64> {
    match cfg.scheme {
        Scheme::Uniform => Ok(weight_uniform(u)),
        Scheme::Linear => weight_linear(u, cfg.effective_cutoff(), cfg.position_mode),
        Scheme::Recency => Ok(weight_recency(u)),
        Scheme::Exponential => weight_exponential(u, cfg.base, cfg.position_mode),
    }
}

/// Weights under `cfg` with the identity anchoring hook.
pub fn resolve_weights(
    nuggets: &[PositionedNugget],
    cfg: &WeightingConfig,
) -> Result<WeightVector> {
    cfg.check()?;
    let weights = nuggets
        .iter()
        .map(|u| base_weight(u, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightVector::from_weights(weights))
}

/// Weights under `cfg` with a custom anchoring hook. The hook sees the
/// preceding nuggets of the same session with their scores.
pub fn resolve_weights_anchored(
    nuggets: &[PositionedNugget],
    scores: &[f64],
    cfg: &WeightingConfig,
    hook: &dyn AnchoringHook,
) -> Result<WeightVector> {
    cfg.check()?;
    if nuggets.len() != scores.len() {
        return Err(SwanError::LengthMismatch {
            nuggets: nuggets.len(),
            weights: nuggets.len(),
            scores: scores.len(),
        });
    }
    let mut weights = Vec::with_capacity(nuggets.len());
    let mut session_start = 0;
    for (i, u) in nuggets.iter().enumerate() {
        if nuggets[session_start].session_id != u.session_id {
            session_start = i;
        }
        let seen: Vec<(&PositionedNugget, f64)> = nuggets[session_start..i]
            .iter()
            .zip(&scores[session_start..i])
            .map(|(n, s)| (n, *s))
            .collect();
        weights.push(base_weight(u, cfg)? * hook.multiplier(&seen, u));
    }
    Ok(WeightVector::from_weights(weights))
}
