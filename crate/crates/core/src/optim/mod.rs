//! Group-relative policy optimization.
//!
//! Advantages come either from normalizing each group's aggregated reward
//! ([`AdvantageMode::Grpo`]) or from normalizing every property separately
//! before combining them (the two GDPO modes). The loss is the clipped
//! importance-weighted surrogate plus an exact KL penalty against a frozen
//! reference policy, with analytic gradients through the tabular softmax.

mod advantage;
mod loss;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use advantage::{
    batch_normalize, decoupled_advantages, gdpo_advantages, grpo_advantages, minibatch_ranges, AdvantageBatch,
    AdvantageConfig, AdvantageMode,
};
pub use loss::{clipped_surrogate, kl_divergence, kl_penalty, policy_loss, LossOutput, RatioMode};

use crate::error::{Error, Result};
use crate::property::{Candidate, TaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipConfig {
    pub eps_clip: f64,
}

impl Default for ClipConfig {
    fn default() -> Self {
        ClipConfig { eps_clip: 0.2 }
    }
}

impl ClipConfig {
    pub fn new(eps_clip: f64) -> Result<Self> {
        if !(eps_clip > 0.0 && eps_clip < 1.0) {
            return Err(Error::InvalidArgument(format!("clip epsilon must be in (0, 1), got {eps_clip}")));
        }
        Ok(ClipConfig { eps_clip })
    }
}

pub const KL_COEF_MIN: f64 = 1e-5;
pub const KL_COEF_MAX: f64 = 10.0;

/// Proportional KL coefficient controller with a 1.5× dead band around the
/// target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlController {
    pub coef: f64,
    pub target: f64,
    pub initial: f64,
    pub adapt_rate: f64,
}

impl Default for KlController {
    fn default() -> Self {
        KlController { coef: 0.05, target: 1.0, initial: 0.05, adapt_rate: 0.1 }
    }
}

impl KlController {
    pub fn new(initial: f64, target: f64, adapt_rate: f64) -> Result<Self> {
        if !(initial > 0.0) || !(target > 0.0) || !(adapt_rate >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bad KL controller settings: initial {initial}, target {target}, rate {adapt_rate}"
            )));
        }
        Ok(KlController { coef: initial.clamp(KL_COEF_MIN, KL_COEF_MAX), target, initial, adapt_rate })
    }

    pub fn update(&mut self, observed_kl: f64) {
        *self = adapt_kl_coef(*self, observed_kl);
    }
}

pub fn adapt_kl_coef(ctrl: KlController, observed_kl: f64) -> KlController {
    let mut coef = ctrl.coef;
    if observed_kl > 1.5 * ctrl.target {
        coef *= 1.0 + ctrl.adapt_rate;
    } else if observed_kl < ctrl.target / 1.5 {
        coef /= 1.0 + ctrl.adapt_rate;
    }
    KlController { coef: coef.clamp(KL_COEF_MIN, KL_COEF_MAX), ..ctrl }
}

/// One prompt's group of sampled candidates with their rewards and the
/// log-probabilities recorded at sampling time.
#[derive(Debug, Clone)]
pub struct GroupRollout {
    pub task: Arc<TaskSpec>,
    pub candidates: Vec<Candidate>,
    /// `G × M` per-property shaped rewards.
    pub reward_matrix: Vec<Vec<f64>>,
    /// Aggregated reward per candidate.
    pub total_rewards: Vec<f64>,
    /// Per-action log-probabilities under the sampling policy.
    pub logp_old: Vec<Vec<f64>>,
    /// Per-action log-probabilities under the reference policy.
    pub logp_ref: Vec<Vec<f64>>,
}

impl GroupRollout {
    pub fn new(
        task: Arc<TaskSpec>,
        candidates: Vec<Candidate>,
        reward_matrix: Vec<Vec<f64>>,
        total_rewards: Vec<f64>,
        logp_old: Vec<Vec<f64>>,
        logp_ref: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let g = candidates.len();
        if g < 2 {
            return Err(Error::InvalidArgument(format!("group needs at least 2 candidates, got {g}")));
        }
        for (what, n) in [
            ("reward rows", reward_matrix.len()),
            ("total rewards", total_rewards.len()),
            ("logp_ref", logp_ref.len()),
        ] {
            if n != g {
                return Err(Error::InvalidArgument(format!("{what}: expected {g}, got {n}")));
            }
        }
        let m = task.properties.len();
        if let Some(row) = reward_matrix.iter().find(|r| r.len() != m) {
            return Err(Error::LengthMismatch { expected: m, actual: row.len() });
        }
        let r = GroupRollout { task, candidates, reward_matrix, total_rewards, logp_old, logp_ref };
        r.check_old()?;
        Ok(r)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Fails unless `logp_old` has one entry per action of every candidate.
    pub fn check_old(&self) -> Result<()> {
        if self.logp_old.len() != self.candidates.len() {
            return Err(Error::StaleSnapshot(format!(
                "{} logp_old rows for {} candidates",
                self.logp_old.len(),
                self.candidates.len()
            )));
        }
        for (c, lp) in self.candidates.iter().zip(&self.logp_old) {
            let n = c.actions().len();
            if lp.len() != n {
                return Err(Error::StaleSnapshot(format!("{} log-probs for {n} actions", lp.len())));
            }
        }
        Ok(())
    }
}
