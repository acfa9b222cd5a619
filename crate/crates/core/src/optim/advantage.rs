use serde::{Deserialize, Serialize};

use super::GroupRollout;
use crate::aggregate::lse_softmin;
use crate::error::{Error, Result};

/// How a group's rewards become per-candidate advantages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvantageMode {
    /// Normalize the aggregated reward within each group.
    Grpo,
    /// Normalize each property within the group, then soft-min across properties.
    GdpoLse,
    /// Normalize each property within the group, take the weighted sum, then
    /// normalize across the whole mini-batch.
    GdpoSumBn,
}

/// `(x − μ) / (σ + eps)` with the population standard deviation; a group with
/// zero spread gets all zeros.
fn normalize(values: &[f64], eps: f64) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd == 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|x| (x - mean) / (sd + eps)).collect()
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {eps}")));
    }
    Ok(())
}

pub fn grpo_advantages(total_rewards: &[f64], eps: f64) -> Result<Vec<f64>> {
    if total_rewards.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "group needs at least 2 rewards, got {}",
            total_rewards.len()
        )));
    }
    check_eps(eps)?;
    if total_rewards.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("group rewards"));
    }
    Ok(normalize(total_rewards, eps))
}

/// Per-property group normalization of a `G × M` reward matrix. Column `m` of
/// the result is [`grpo_advantages`] applied to column `m` of the input.
pub fn decoupled_advantages(reward_matrix: &[Vec<f64>], eps: f64) -> Result<Vec<Vec<f64>>> {
    let g = reward_matrix.len();
    let m = reward_matrix.first().map_or(0, Vec::len);
    if g < 2 {
        return Err(Error::InvalidArgument(format!("group needs at least 2 rows, got {g}")));
    }
    if m == 0 {
        return Err(Error::Empty("reward matrix columns"));
    }
    if let Some(row) = reward_matrix.iter().find(|r| r.len() != m) {
        return Err(Error::LengthMismatch { expected: m, actual: row.len() });
    }
    let mut out = vec![vec![0.0; m]; g];
    for j in 0..m {
        let col: Vec<f64> = reward_matrix.iter().map(|r| r[j]).collect();
        for (i, a) in grpo_advantages(&col, eps)?.into_iter().enumerate() {
            out[i][j] = a;
        }
    }
    Ok(out)
}

/// Group-level GDPO advantages. For [`AdvantageMode::GdpoLse`] the result is
/// final; for [`AdvantageMode::GdpoSumBn`] it is the weighted sum still
/// awaiting [`batch_normalize`] over the mini-batch.
pub fn gdpo_advantages(
    reward_matrix: &[Vec<f64>],
    weights: Option<&[f64]>,
    mode: AdvantageMode,
    eps_grp: f64,
) -> Result<Vec<f64>> {
    let per_prop = decoupled_advantages(reward_matrix, eps_grp)?;
    let m = per_prop[0].len();
    match mode {
        AdvantageMode::Grpo => Err(Error::InvalidArgument("gdpo_advantages needs a gdpo mode".into())),
        AdvantageMode::GdpoLse => per_prop.iter().map(|a| lse_softmin(a, 1.0)).collect(),
        AdvantageMode::GdpoSumBn => {
            let ones = vec![1.0; m];
            let w = weights.unwrap_or(&ones);
            if w.len() != m {
                return Err(Error::LengthMismatch { expected: m, actual: w.len() });
            }
            if let Some(&bad) = w.iter().find(|&&x| !(x >= 0.0)) {
                return Err(Error::InvalidArgument(format!("negative property weight {bad}")));
            }
            Ok(per_prop.iter().map(|a| a.iter().zip(w).map(|(x, w)| x * w).sum()).collect())
        }
    }
}

/// Normalizes a flat mini-batch of advantages to mean 0 and std 1.
pub fn batch_normalize(values: &[f64], eps: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Empty("batch normalization context"));
    }
    check_eps(eps)?;
    Ok(normalize(values, eps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageConfig {
    pub mode: AdvantageMode,
    pub eps_grp: f64,
    pub eps_bn: f64,
    /// Per-property weights for the summed mode; all ones when absent.
    pub weights: Option<Vec<f64>>,
    /// Also batch-normalize the soft-min advantages. The summed mode always does.
    pub lse_batch_norm: bool,
}

impl Default for AdvantageConfig {
    fn default() -> Self {
        AdvantageConfig { mode: AdvantageMode::Grpo, eps_grp: 1e-8, eps_bn: 1e-8, weights: None, lse_batch_norm: true }
    }
}

/// Advantages for a whole rollout batch, indexed `[group][candidate]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageBatch {
    pub values: Vec<Vec<f64>>,
    pub mode: AdvantageMode,
    pub eps_grp: f64,
    pub eps_bn: f64,
}

impl AdvantageBatch {
    /// Computes advantages for every group. In the summed mode (and the
    /// soft-min mode when `lse_batch_norm` is set), batch normalization runs
    /// separately over each of `minibatches` contiguous chunks of groups,
    /// matching how the optimizer later slices the batch.
    pub fn compute(rollouts: &[GroupRollout], cfg: &AdvantageConfig, minibatches: usize) -> Result<Self> {
        if cfg.eps_grp <= 0.0 || cfg.eps_bn <= 0.0 {
            return Err(Error::InvalidArgument("advantage epsilons must be > 0".into()));
        }
        let mut values = rollouts
            .iter()
            .map(|r| match cfg.mode {
                AdvantageMode::Grpo => grpo_advantages(&r.total_rewards, cfg.eps_grp),
                mode => gdpo_advantages(&r.reward_matrix, cfg.weights.as_deref(), mode, cfg.eps_grp),
            })
            .collect::<Result<Vec<_>>>()?;
        let bn = match cfg.mode {
            AdvantageMode::Grpo => false,
            AdvantageMode::GdpoLse => cfg.lse_batch_norm,
            AdvantageMode::GdpoSumBn => true,
        };
        if bn {
            for range in minibatch_ranges(values.len(), minibatches)? {
                let flat: Vec<f64> = values[range.clone()].iter().flatten().copied().collect();
                let mut normed = batch_normalize(&flat, cfg.eps_bn)?.into_iter();
                for group in &mut values[range] {
                    for a in group.iter_mut() {
                        *a = normed.next().expect("same length");
                    }
                }
            }
        }
        Ok(AdvantageBatch { values, mode: cfg.mode, eps_grp: cfg.eps_grp, eps_bn: cfg.eps_bn })
    }

    pub fn mean(&self) -> f64 {
        let n: usize = self.values.iter().map(Vec::len).sum();
        self.values.iter().flatten().sum::<f64>() / n.max(1) as f64
    }
}

/// Splits `n` groups into `k` contiguous, nearly equal, nonempty chunks.
pub fn minibatch_ranges(n: usize, k: usize) -> Result<Vec<std::ops::Range<usize>>> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("cannot split {n} groups into {k} mini-batches")));
    }
    Ok((0..k).map(|i| (i * n / k)..((i + 1) * n / k)).collect())
}
