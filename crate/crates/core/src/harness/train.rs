use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::log::{LogWriter, TrainLogRecord};
use super::task::{load_tasks, LoadedTasks};
use crate::aggregate::Aggregator;
use crate::error::{Error, Result};
use crate::metrics::{select_candidate, sor_success, EvalPair, MetricsReport, Selection};
use crate::optim::{
    kl_penalty, minibatch_ranges, policy_loss, AdvantageBatch, AdvantageConfig, ClipConfig, GroupRollout,
    KlController,
};
use crate::policy::{beam_search, sample_group, write_checkpoint, Policy, PolicySnapshot, SnapshotRole};
use crate::property::{annotate, Candidate, OracleRegistry, PropertyRole, TaskSpec};
use crate::shaping::{shape_rewards, RewardShaper, SteepnessConfig};

pub const LOG_FILE: &str = "train_log.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const CHECKPOINT_FILE: &str = "policy.ckpt";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";

/// Sampled-evaluation statistics reported next to the beam metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub samples: usize,
    /// Fraction of all samples that are valid but leave a stabilize band.
    pub band_violation_rate: f64,
    pub sampled_sor: f64,
    pub valid_rate: f64,
    /// Mean sigmoid-aligned score per property (invalid samples score 0).
    pub mean_score: BTreeMap<String, f64>,
    /// Mean raw value per property over valid samples.
    pub mean_raw: BTreeMap<String, f64>,
    /// Tasks whose beam selection came from the SOR-compliant subset.
    pub selections_sor_compliant: usize,
    pub ri_guarded_terms: usize,
}

/// Builds the initial policy: one slot per task, nudged towards each source.
pub fn initial_policy(cfg: &RunConfig, tasks: &LoadedTasks) -> Result<Policy> {
    let sources: Vec<(usize, &[usize])> = tasks.tasks.iter().map(|t| (t.slot, t.source.tokens.as_slice())).collect();
    Policy::warm_start(tasks.vocab().clone(), cfg.order()?, &sources, cfg.warm_start)
}

/// Per-property rewards and the aggregated reward for one candidate.
/// Invalid candidates score 0 on every property.
pub fn candidate_rewards(
    cand: &Candidate,
    task: &TaskSpec,
    registry: &OracleRegistry,
    shaper: &RewardShaper,
    aggregator: &Aggregator,
) -> Result<(Vec<f64>, f64)> {
    let scores = if cand.valid {
        shaper.shape(cand.props()?, task, registry)?.values
    } else {
        vec![0.0; task.properties.len()]
    };
    let total = aggregator.apply(&scores)?;
    Ok((scores, total))
}

/// Aligned per-property scores used for logging, whatever the training reward.
fn aligned_scores(cand: &Candidate, task: &TaskSpec, steep: SteepnessConfig) -> Result<Vec<f64>> {
    if cand.valid {
        Ok(shape_rewards(cand.props()?, task, steep)?.values)
    } else {
        Ok(vec![0.0; task.properties.len()])
    }
}

pub struct Trainer {
    cfg: RunConfig,
    tasks: LoadedTasks,
    policy: Policy,
    reference: PolicySnapshot,
    kl: KlController,
    clip: ClipConfig,
    shaper: RewardShaper,
    aggregator: Aggregator,
    adv_cfg: AdvantageConfig,
    rng: ChaCha8Rng,
    step: usize,
    started: Instant,
}

impl Trainer {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let tasks = load_tasks(&cfg.task_ref())?;
        Self::with_tasks(cfg, tasks)
    }

    pub fn with_tasks(cfg: RunConfig, tasks: LoadedTasks) -> Result<Self> {
        cfg.validate()?;
        let policy = initial_policy(&cfg, &tasks)?;
        let reference = policy.snapshot(SnapshotRole::Reference);
        Ok(Trainer {
            kl: KlController::new(cfg.kl_initial, cfg.kl_target, cfg.kl_adapt_rate)?,
            clip: ClipConfig::new(cfg.clip)?,
            shaper: cfg.shaper()?,
            aggregator: cfg.aggregator()?,
            adv_cfg: cfg.advantage_config(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed()?),
            step: 0,
            started: Instant::now(),
            cfg,
            tasks,
            policy,
            reference,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn tasks(&self) -> &LoadedTasks {
        &self.tasks
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn kl_controller(&self) -> &KlController {
        &self.kl
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    fn rollout(&mut self, old: &PolicySnapshot) -> Result<Vec<GroupRollout>> {
        let n_tasks = self.tasks.tasks.len();
        let registry = self.tasks.registry.clone();
        let mut out = Vec::with_capacity(self.cfg.rollout_batch);
        for b in 0..self.cfg.rollout_batch {
            let task = self.tasks.tasks[(self.step * self.cfg.rollout_batch + b) % n_tasks].clone();
            let sampled = sample_group(&task, old, self.cfg.group_size, self.tasks.max_len(), &mut self.rng)?;
            let mut cands = Vec::with_capacity(sampled.len());
            let (mut matrix, mut totals, mut old_lp, mut ref_lp) = (vec![], vec![], vec![], vec![]);
            for s in sampled {
                let mut c = s.candidate;
                annotate(&mut c, &task, &registry)?;
                let (scores, total) = candidate_rewards(&c, &task, &registry, &self.shaper, &self.aggregator)?;
                ref_lp.push(self.reference.log_prob(task.slot, &c.actions())?);
                matrix.push(scores);
                totals.push(total);
                old_lp.push(s.logp);
                cands.push(c);
            }
            out.push(GroupRollout::new(task, cands, matrix, totals, old_lp, ref_lp)?);
        }
        Ok(out)
    }

    /// One optimization step: sample, score, compute advantages, run the
    /// configured epochs of mini-batch updates, adapt the KL coefficient.
    pub fn step(&mut self) -> Result<TrainLogRecord> {
        self.step += 1;
        let step = self.step;
        let old = self.policy.snapshot(SnapshotRole::Old);
        let rollouts = self.rollout(&old)?;
        let adv = AdvantageBatch::compute(&rollouts, &self.adv_cfg, self.cfg.minibatches)?;
        let beta = self.kl.coef;

        let ranges = minibatch_ranges(rollouts.len(), self.cfg.minibatches)?;
        let mut loss_sum = 0.0;
        let mut updates = 0usize;
        for _ in 0..self.cfg.epochs {
            for r in &ranges {
                let sub = AdvantageBatch { values: adv.values[r.clone()].to_vec(), ..adv.clone() };
                let out = policy_loss(
                    &rollouts[r.clone()],
                    &sub,
                    &self.policy,
                    &self.reference,
                    self.clip,
                    beta,
                    self.cfg.ratio,
                )
                .map_err(|e| Error::Diverged { step, what: e.to_string() })?;
                self.policy
                    .apply_gradient(&out.grad, self.cfg.learning_rate)
                    .map_err(|e| Error::Diverged { step, what: e.to_string() })?;
                loss_sum += out.loss;
                updates += 1;
            }
        }

        let mut contexts = Vec::new();
        for g in &rollouts {
            for c in &g.candidates {
                contexts.extend(self.policy.context_rows(g.task.slot, &c.actions())?);
            }
        }
        let observed_kl = kl_penalty(&self.policy, &self.reference, &contexts)?;
        self.kl.update(observed_kl);

        let m = self.tasks.property_names().len();
        let steep = self.shaper.steepness;
        let (mut raw, mut raw_n, mut score) = (vec![0.0; m], vec![0usize; m], vec![0.0; m]);
        let (mut reward_sum, mut n) = (0.0, 0usize);
        for g in &rollouts {
            for (c, total) in g.candidates.iter().zip(&g.total_rewards) {
                reward_sum += total;
                n += 1;
                for (j, s) in aligned_scores(c, &g.task, steep)?.into_iter().enumerate() {
                    score[j] += s;
                }
                if let Some(v) = &c.props {
                    for (j, x) in v.iter().enumerate() {
                        raw[j] += x;
                        raw_n[j] += 1;
                    }
                }
            }
        }
        let record = TrainLogRecord {
            step,
            loss: loss_sum / updates as f64,
            mean_reward: reward_sum / n as f64,
            mean_advantage: adv.mean(),
            kl: observed_kl,
            beta,
            raw: raw.iter().zip(&raw_n).map(|(s, &k)| if k == 0 { 0.0 } else { s / k as f64 }).collect(),
            score: score.iter().map(|s| s / n as f64).collect(),
            wall_time: self.started.elapsed().as_secs_f64(),
        };
        if !(record.loss.is_finite() && record.mean_reward.is_finite() && record.kl.is_finite()) {
            return Err(Error::Diverged { step, what: "non-finite training statistics".into() });
        }
        Ok(record)
    }

    /// Beam-search evaluation plus a seeded sampled evaluation of the current policy.
    pub fn evaluate(&self) -> Result<(MetricsReport, Diagnostics)> {
        let (report, selections) = evaluate_beam(&self.policy, &self.tasks, self.cfg.beam_width, self.cfg.ssor_gated)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed()?);
        rng.set_stream(1);
        let mut diag = sampled_diagnostics(&self.policy, &self.tasks, self.cfg.eval_samples, self.shaper.steepness, &mut rng)?;
        diag.selections_sor_compliant = selections.iter().filter(|s| s.sor_compliant).count();
        diag.ri_guarded_terms = report.ri_guarded_terms;
        Ok((report, diag))
    }
}

/// Beam search per task, Algorithm-style selection, then the four metrics.
pub fn evaluate_beam(
    policy: &Policy,
    tasks: &LoadedTasks,
    beam_width: usize,
    ssor_gated: bool,
) -> Result<(MetricsReport, Vec<Selection>)> {
    let mut pairs = Vec::with_capacity(tasks.tasks.len());
    let mut selections = Vec::with_capacity(tasks.tasks.len());
    for task in &tasks.tasks {
        let beam = beam_search(policy, task, beam_width, tasks.max_len())?;
        let mut cands: Vec<Candidate> = beam.into_iter().map(|h| h.candidate).collect();
        for c in &mut cands {
            annotate(c, task, &tasks.registry)?;
        }
        let sel = select_candidate(&cands, task)?;
        pairs.push(EvalPair::new(task.clone(), sel.candidate.clone()));
        selections.push(sel);
    }
    Ok((MetricsReport::compute(&pairs, ssor_gated)?, selections))
}

/// Samples `per_task` candidates for every task and summarizes them.
pub fn sampled_diagnostics(
    policy: &Policy,
    tasks: &LoadedTasks,
    per_task: usize,
    steep: SteepnessConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Diagnostics> {
    let names = tasks.property_names();
    let m = names.len();
    let (mut score, mut raw, mut raw_n) = (vec![0.0; m], vec![0.0; m], 0usize);
    let (mut n, mut valid, mut violations, mut sor_hits) = (0usize, 0usize, 0usize, 0usize);
    if per_task >= 2 {
        for task in &tasks.tasks {
            for s in sample_group(task, policy, per_task, tasks.max_len(), rng)? {
                let mut c = s.candidate;
                annotate(&mut c, task, &tasks.registry)?;
                n += 1;
                for (j, x) in aligned_scores(&c, task, steep)?.into_iter().enumerate() {
                    score[j] += x;
                }
                if !c.valid {
                    continue;
                }
                valid += 1;
                let v = c.props()?;
                raw_n += 1;
                for (j, x) in v.iter().enumerate() {
                    raw[j] += x;
                }
                if band_violated(task, v) {
                    violations += 1;
                }
                if sor_success(task, &c)? {
                    sor_hits += 1;
                }
            }
        }
    }
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    Ok(Diagnostics {
        samples: n,
        band_violation_rate: frac(violations),
        sampled_sor: frac(sor_hits),
        valid_rate: frac(valid),
        mean_score: names.iter().cloned().zip(score.iter().map(|s| if n == 0 { 0.0 } else { s / n as f64 })).collect(),
        mean_raw: names.iter().cloned().zip(raw.iter().map(|s| if raw_n == 0 { 0.0 } else { s / raw_n as f64 })).collect(),
        selections_sor_compliant: 0,
        ri_guarded_terms: 0,
    })
}

/// True when any stabilize property lies outside its band.
pub fn band_violated(task: &TaskSpec, values: &[f64]) -> bool {
    task.roles.iter().zip(values).any(|(r, &v)| match *r {
        PropertyRole::Stabilize { lower, upper } => v < lower || v > upper,
        PropertyRole::Improve { .. } => false,
    })
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub out_dir: PathBuf,
    pub report: MetricsReport,
    pub diagnostics: Diagnostics,
    pub records: Vec<TrainLogRecord>,
    pub policy: Arc<Policy>,
}

/// Runs a full training job and writes its artifacts into `out_dir`:
/// the resolved config, the step log, the final metrics and diagnostics,
/// and the final policy checkpoint.
pub fn run_training(cfg: &RunConfig, out_dir: &Path) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(cfg.clone())?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let cfg_path = out_dir.join(RESOLVED_CONFIG_FILE);
    fs::write(&cfg_path, cfg.to_toml()).map_err(|e| Error::io(&cfg_path, e))?;

    let mut log = LogWriter::create(&out_dir.join(LOG_FILE), &trainer.tasks().property_names())?;
    let mut records = Vec::with_capacity(cfg.max_steps);
    for _ in 0..cfg.max_steps {
        match trainer.step() {
            Ok(r) => {
                log.append(&r)?;
                records.push(r);
            }
            Err(e) => {
                let m = trainer.tasks().property_names().len();
                let diag = TrainLogRecord {
                    step: trainer.steps_done(),
                    loss: f64::NAN,
                    mean_reward: f64::NAN,
                    mean_advantage: f64::NAN,
                    kl: f64::NAN,
                    beta: trainer.kl_controller().coef,
                    raw: vec![f64::NAN; m],
                    score: vec![f64::NAN; m],
                    wall_time: 0.0,
                };
                log.append(&diag)?;
                return Err(e);
            }
        }
    }
    let (report, diagnostics) = trainer.evaluate()?;
    write_json(&out_dir.join(METRICS_FILE), &report)?;
    write_json(&out_dir.join(DIAGNOSTICS_FILE), &diagnostics)?;
    write_checkpoint(trainer.policy(), &out_dir.join(CHECKPOINT_FILE))?;
    Ok(TrainOutcome {
        out_dir: out_dir.to_path_buf(),
        report,
        diagnostics,
        records,
        policy: Arc::new(trainer.policy().clone()),
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
