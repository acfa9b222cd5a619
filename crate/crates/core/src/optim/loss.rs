use serde::{Deserialize, Serialize};

use super::{AdvantageBatch, ClipConfig, GroupRollout};
use crate::error::{Error, Result};
use crate::policy::{log_softmax, Gradient, Policy};
use crate::vocab::Vocabulary;

/// Granularity of the importance ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RatioMode {
    /// One ratio per action, each response's tokens averaged.
    #[default]
    Token,
    /// One ratio per response, the product of its action ratios.
    Sequence,
}

/// `min(ρA, clip(ρ, 1−ε, 1+ε)·A)`.
pub fn clipped_surrogate(rho: f64, advantage: f64, clip: ClipConfig) -> f64 {
    let c = rho.clamp(1.0 - clip.eps_clip, 1.0 + clip.eps_clip);
    (rho * advantage).min(c * advantage)
}

/// True when the unclipped branch is the active one, i.e. the surrogate has
/// nonzero slope in `ρ`.
fn unclipped_active(rho: f64, advantage: f64, clip: ClipConfig) -> bool {
    let c = rho.clamp(1.0 - clip.eps_clip, 1.0 + clip.eps_clip);
    rho * advantage <= c * advantage
}

/// `KL(p ‖ q)` between two softmax rows given their logits.
pub fn kl_divergence(p_logits: &[f64], q_logits: &[f64]) -> f64 {
    let lp = log_softmax(p_logits);
    let lq = log_softmax(q_logits);
    lp.iter().zip(&lq).map(|(a, b)| a.exp() * (a - b)).sum::<f64>().max(0.0)
}

/// Exact KL between `policy` and `reference`, averaged over the given rows.
pub fn kl_penalty(policy: &Policy, reference: &Policy, contexts: &[usize]) -> Result<f64> {
    policy.check_compatible(reference)?;
    if contexts.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &r in contexts {
        if r >= policy.rows() {
            return Err(Error::InvalidArgument(format!("context row {r} out of range")));
        }
        total += kl_divergence(policy.row_logits(r), reference.row_logits(r));
    }
    Ok(total / contexts.len() as f64)
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    /// Weighted mean of the clipped surrogate.
    pub surrogate: f64,
    /// Weighted mean per-token KL against the reference.
    pub kl: f64,
    pub grad: Gradient,
}

/// Clipped surrogate loss plus `beta`·KL, with its exact gradient.
///
/// Each response gets weight `1/(B·G)`, spread evenly over its `|y|` actions
/// (`|y|` counts a trailing `END`). The KL term uses the same per-token
/// weights.
pub fn policy_loss(
    rollouts: &[GroupRollout],
    advantages: &AdvantageBatch,
    policy: &Policy,
    reference: &Policy,
    clip: ClipConfig,
    beta: f64,
    ratio: RatioMode,
) -> Result<LossOutput> {
    policy.check_compatible(reference)?;
    if rollouts.is_empty() {
        return Err(Error::Empty("rollout batch"));
    }
    if advantages.values.len() != rollouts.len() {
        return Err(Error::LengthMismatch { expected: rollouts.len(), actual: advantages.values.len() });
    }
    let b = rollouts.len() as f64;
    let cols = policy.cols();
    let mut grad = policy.zero_gradient();
    let (mut surrogate, mut kl) = (0.0, 0.0);

    for (group, adv) in rollouts.iter().zip(&advantages.values) {
        group.check_old()?;
        if adv.len() != group.len() {
            return Err(Error::LengthMismatch { expected: group.len(), actual: adv.len() });
        }
        let w_seq = 1.0 / (b * group.len() as f64);
        for ((cand, old), &a) in group.candidates.iter().zip(&group.logp_old).zip(adv) {
            let actions = cand.actions();
            let rows = policy.context_rows(group.task.slot, &actions)?;
            let w_tok = w_seq / actions.len() as f64;
            let lps: Vec<Vec<f64>> = rows.iter().map(|&r| policy.log_probs(r)).collect();
            let cols_taken: Vec<usize> = actions.iter().map(|&t| Vocabulary::token_to_action(t)).collect();

            match ratio {
                RatioMode::Token => {
                    for t in 0..actions.len() {
                        let rho = (lps[t][cols_taken[t]] - old[t]).exp();
                        surrogate += w_tok * clipped_surrogate(rho, a, clip);
                        if unclipped_active(rho, a, clip) {
                            add_score_grad(grad.row_mut(rows[t]), &lps[t], cols_taken[t], -w_tok * a * rho);
                        }
                    }
                }
                RatioMode::Sequence => {
                    let log_rho: f64 = (0..actions.len()).map(|t| lps[t][cols_taken[t]] - old[t]).sum();
                    let rho = log_rho.exp();
                    surrogate += w_seq * clipped_surrogate(rho, a, clip);
                    if unclipped_active(rho, a, clip) {
                        for t in 0..actions.len() {
                            add_score_grad(grad.row_mut(rows[t]), &lps[t], cols_taken[t], -w_seq * a * rho);
                        }
                    }
                }
            }

            if beta != 0.0 {
                for (t, &r) in rows.iter().enumerate() {
                    let lq = reference.log_probs(r);
                    let lp = &lps[t];
                    let k: f64 = lp.iter().zip(&lq).map(|(x, y)| x.exp() * (x - y)).sum();
                    kl += w_tok * k;
                    let g = grad.row_mut(r);
                    for c in 0..cols {
                        g[c] += beta * w_tok * lp[c].exp() * ((lp[c] - lq[c]) - k);
                    }
                }
            } else {
                for (t, &r) in rows.iter().enumerate() {
                    kl += w_tok * kl_divergence(&lps[t], reference.row_logits(r));
                }
            }
        }
    }
    let loss = -surrogate + beta * kl;
    if !loss.is_finite() {
        return Err(Error::NonFinite("policy loss"));
    }
    Ok(LossOutput { loss, surrogate, kl, grad })
}

/// Adds `scale · ∂ log π(col | row) / ∂ logits = scale · (e_col − π)`.
fn add_score_grad(g: &mut [f64], log_probs: &[f64], col: usize, scale: f64) {
    for (c, (gc, lp)) in g.iter_mut().zip(log_probs).enumerate() {
        let ind = if c == col { 1.0 } else { 0.0 };
        *gc += scale * (ind - lp.exp());
    }
}
