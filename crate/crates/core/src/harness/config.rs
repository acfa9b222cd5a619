use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregate::{AggregationKind, Aggregator};
use crate::error::{Error, Result};
use crate::optim::{AdvantageConfig, AdvantageMode, ClipConfig, KlController, RatioMode};
use crate::policy::ContextOrder;
use crate::shaping::{RewardShaper, ScoreMode, SteepnessConfig};

use super::task::{resolve_task_ref, TaskRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Grpo,
    Gdpo,
}

/// Training run configuration. Every field except `task` has a default;
/// `seed` must come from the file or the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Task file path (relative to the config file) or `builtin:<name>`.
    pub task: String,
    pub algorithm: Algorithm,
    pub aggregation: AggregationKind,
    pub lse_temperature: f64,
    /// gdpo with lse_softmin: batch-normalize the soft-min advantages.
    pub lse_batch_norm: bool,
    pub sigmoid_align: bool,
    pub steepness: f64,
    pub group_size: usize,
    /// Prompts per step; tasks are visited round robin.
    pub rollout_batch: usize,
    pub epochs: usize,
    pub minibatches: usize,
    pub max_steps: usize,
    pub seed: Option<u64>,
    pub learning_rate: f64,
    pub clip: f64,
    pub kl_initial: f64,
    pub kl_target: f64,
    pub kl_adapt_rate: f64,
    pub eps_grp: f64,
    pub eps_bn: f64,
    pub ratio: RatioMode,
    pub policy_order: u8,
    /// Logit bonus on each source's own next tokens at initialization.
    pub warm_start: f64,
    pub beam_width: usize,
    /// Samples per task for the sampled part of the final evaluation.
    pub eval_samples: usize,
    pub ssor_gated: bool,
    pub out_dir: Option<PathBuf>,
    /// Directory relative task paths resolve against; set by the loader.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: String::new(),
            algorithm: Algorithm::Grpo,
            aggregation: AggregationKind::GeometricMean,
            lse_temperature: 1.0,
            lse_batch_norm: true,
            sigmoid_align: true,
            steepness: 1.0,
            group_size: 4,
            rollout_batch: 32,
            epochs: 2,
            minibatches: 1,
            max_steps: 300,
            seed: None,
            learning_rate: 1e-2,
            clip: 0.2,
            kl_initial: 0.05,
            kl_target: 1.0,
            kl_adapt_rate: 0.1,
            eps_grp: 1e-8,
            eps_bn: 1e-8,
            ratio: RatioMode::Token,
            policy_order: 2,
            warm_start: 3.0,
            beam_width: 20,
            eval_samples: 64,
            ssor_gated: true,
            out_dir: None,
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Parse { path: origin.to_path_buf(), message: e.to_string() })?;
        cfg.base_dir = origin.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn task_ref(&self) -> TaskRef {
        resolve_task_ref(&self.task, &self.base_dir)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("seed is required".into()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.task.is_empty() {
            return bad("`task` is required".into());
        }
        self.seed()?;
        for (name, v) in [
            ("group_size", self.group_size),
            ("rollout_batch", self.rollout_batch),
            ("epochs", self.epochs),
            ("minibatches", self.minibatches),
            ("beam_width", self.beam_width),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.group_size < 2 {
            return bad("group_size must be >= 2".into());
        }
        if self.minibatches > self.rollout_batch {
            return bad("minibatches cannot exceed rollout_batch".into());
        }
        if self.algorithm == Algorithm::Gdpo && self.aggregation == AggregationKind::GeometricMean {
            return bad("gdpo aggregates advantages, which can be negative; use arithmetic_mean or lse_softmin".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.warm_start >= 0.0 && self.warm_start.is_finite()) {
            return bad("warm_start must be >= 0".into());
        }
        if !(self.eps_grp > 0.0 && self.eps_bn > 0.0) {
            return bad("eps_grp and eps_bn must be > 0".into());
        }
        ClipConfig::new(self.clip)?;
        KlController::new(self.kl_initial, self.kl_target, self.kl_adapt_rate)?;
        SteepnessConfig::new(self.steepness)?;
        Aggregator::new(self.aggregation, self.lse_temperature)?;
        ContextOrder::try_from(self.policy_order).map_err(Error::Config)?;
        Ok(())
    }

    pub fn aggregator(&self) -> Result<Aggregator> {
        Aggregator::new(self.aggregation, self.lse_temperature)
    }

    pub fn shaper(&self) -> Result<RewardShaper> {
        Ok(RewardShaper {
            mode: if self.sigmoid_align { ScoreMode::SigmoidAligned } else { ScoreMode::Linear },
            steepness: SteepnessConfig::new(self.steepness)?,
        })
    }

    pub fn advantage_config(&self) -> AdvantageConfig {
        let mode = match (self.algorithm, self.aggregation) {
            (Algorithm::Grpo, _) => AdvantageMode::Grpo,
            (Algorithm::Gdpo, AggregationKind::LseSoftmin) => AdvantageMode::GdpoLse,
            (Algorithm::Gdpo, _) => AdvantageMode::GdpoSumBn,
        };
        AdvantageConfig { mode, eps_grp: self.eps_grp, eps_bn: self.eps_bn, weights: None, lse_batch_norm: self.lse_batch_norm }
    }

    pub fn order(&self) -> Result<ContextOrder> {
        ContextOrder::try_from(self.policy_order).map_err(Error::Config)
    }
}
