//! Property score shaping.
//!
//! Raw property values live on unrelated scales. Sigmoid alignment maps every
//! objective into `(0, 1)`: improve-properties through a sigmoid centred on
//! their target, stabilize-properties through a product of two opposed
//! sigmoids that forms a plateau over the tolerance band. The steepness is
//! `proportionality · 5 / delta`, so a move of exactly one margin past the
//! target always scores `σ(5)` whatever the property's units.
//!
//! [`ScoreMode::Linear`] is the unaligned baseline used in ablations: improve
//! properties score their raw value measured from the worst end of the
//! oracle's declared range, stabilize properties a linear tent that reaches 0
//! at the band edge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::property::{OracleRegistry, PropertyRole, TaskSpec};

/// Logistic function, clamped so the result stays strictly inside `(0, 1)`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteepnessConfig {
    pub proportionality: f64,
}

impl Default for SteepnessConfig {
    fn default() -> Self {
        SteepnessConfig { proportionality: 1.0 }
    }
}

impl SteepnessConfig {
    pub fn new(proportionality: f64) -> Result<Self> {
        if !(proportionality > 0.0 && proportionality.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "steepness proportionality must be positive, got {proportionality}"
            )));
        }
        Ok(SteepnessConfig { proportionality })
    }
}

pub fn steepness(delta: f64, cfg: SteepnessConfig) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::NonPositive(delta));
    }
    Ok(cfg.proportionality * 5.0 / delta)
}

/// `σ(alpha · direction · (v − target))`.
#[inline]
pub fn improvement_score(v: f64, target: f64, alpha: f64, direction: f64) -> f64 {
    sigmoid(alpha * direction * (v - target))
}

/// Derivative of [`improvement_score`] with respect to `v`.
pub fn improvement_score_dv(v: f64, target: f64, alpha: f64, direction: f64) -> f64 {
    let s = improvement_score(v, target, alpha, direction);
    alpha * direction * s * (1.0 - s)
}

/// `σ(alpha (upper − v)) · σ(alpha (v − lower))`.
pub fn stability_score(v: f64, lower: f64, upper: f64, alpha: f64) -> Result<f64> {
    if !(lower < upper) {
        return Err(Error::InvalidArgument(format!(
            "stability band needs lower < upper, got [{lower}, {upper}]"
        )));
    }
    let p = sigmoid(alpha * (upper - v)) * sigmoid(alpha * (v - lower));
    Ok(p.max(f64::MIN_POSITIVE))
}

/// Derivative of [`stability_score`] with respect to `v`.
pub fn stability_score_dv(v: f64, lower: f64, upper: f64, alpha: f64) -> f64 {
    let a = sigmoid(alpha * (upper - v));
    let b = sigmoid(alpha * (v - lower));
    alpha * a * b * ((1.0 - b) - (1.0 - a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    #[default]
    SigmoidAligned,
    Linear,
}

/// Per-property shaped scores, ordered as the task's properties.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapedScores {
    pub values: Vec<f64>,
}

/// Sigmoid-aligned shaping of one candidate's property vector.
pub fn shape_rewards(values: &[f64], task: &TaskSpec, cfg: SteepnessConfig) -> Result<ShapedScores> {
    if values.len() != task.properties.len() {
        return Err(Error::LengthMismatch {
            expected: task.properties.len(),
            actual: values.len(),
        });
    }
    let mut out = Vec::with_capacity(values.len());
    for ((v, spec), role) in values.iter().zip(&task.properties).zip(&task.roles) {
        let alpha = steepness(spec.delta, cfg)?;
        let s = match *role {
            PropertyRole::Improve { target } => {
                improvement_score(*v, target, alpha, spec.direction.sign())
            }
            PropertyRole::Stabilize { lower, upper } => stability_score(*v, lower, upper, alpha)?,
        };
        out.push(s);
    }
    Ok(ShapedScores { values: out })
}

/// Unaligned linear scores (see module docs). Always nonnegative.
pub fn linear_scores(values: &[f64], task: &TaskSpec, registry: &OracleRegistry) -> Result<ShapedScores> {
    if values.len() != task.properties.len() {
        return Err(Error::LengthMismatch {
            expected: task.properties.len(),
            actual: values.len(),
        });
    }
    let src = task.source_values();
    let mut out = Vec::with_capacity(values.len());
    for (i, (v, spec)) in values.iter().zip(&task.properties).enumerate() {
        let s = match task.roles[i] {
            PropertyRole::Improve { .. } => {
                let (lo, hi) = registry.get(&spec.oracle_id)?.range();
                let raw = match spec.direction.sign() > 0.0 {
                    true => v - lo,
                    false => hi - v,
                };
                raw.max(0.0)
            }
            PropertyRole::Stabilize { .. } => (1.0 - (v - src[i]).abs() / spec.delta).max(0.0),
        };
        out.push(s);
    }
    Ok(ShapedScores { values: out })
}

/// Shaping strategy used by the trainer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardShaper {
    pub mode: ScoreMode,
    pub steepness: SteepnessConfig,
}

impl RewardShaper {
    pub fn shape(&self, values: &[f64], task: &TaskSpec, registry: &OracleRegistry) -> Result<ShapedScores> {
        match self.mode {
            ScoreMode::SigmoidAligned => shape_rewards(values, task, self.steepness),
            ScoreMode::Linear => linear_scores(values, task, registry),
        }
    }
}
