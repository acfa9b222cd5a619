use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::config::{Algorithm, RunConfig};
use super::train::run_training;
use crate::aggregate::AggregationKind;
use crate::error::{Error, Result};

/// The shipped conflict configuration, with its task resolved to the
/// compiled-in copy.
pub const DEFAULT_ABLATION_CONFIG: &str = include_str!("../../configs/conflict.toml");

pub fn default_ablation_config() -> Result<RunConfig> {
    let mut cfg = RunConfig::from_toml(DEFAULT_ABLATION_CONFIG, Path::new("configs/conflict.toml"))?;
    cfg.task = "builtin:conflict".into();
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub id: &'static str,
    pub algorithm: Algorithm,
    pub aggregation: AggregationKind,
    pub sigmoid_align: bool,
}

pub const PRESETS: [Preset; 6] = [
    Preset { id: "grpo_am", algorithm: Algorithm::Grpo, aggregation: AggregationKind::ArithmeticMean, sigmoid_align: false },
    Preset { id: "grpo_gm", algorithm: Algorithm::Grpo, aggregation: AggregationKind::GeometricMean, sigmoid_align: false },
    Preset { id: "grpo_gm_sigmoid", algorithm: Algorithm::Grpo, aggregation: AggregationKind::GeometricMean, sigmoid_align: true },
    Preset { id: "gdpo_am", algorithm: Algorithm::Gdpo, aggregation: AggregationKind::ArithmeticMean, sigmoid_align: false },
    Preset { id: "gdpo_lse", algorithm: Algorithm::Gdpo, aggregation: AggregationKind::LseSoftmin, sigmoid_align: false },
    Preset { id: "gdpo_lse_sigmoid", algorithm: Algorithm::Gdpo, aggregation: AggregationKind::LseSoftmin, sigmoid_align: true },
];

impl Preset {
    pub fn get(id: &str) -> Result<Preset> {
        PRESETS
            .iter()
            .copied()
            .find(|p| p.id == id)
            .ok_or_else(|| Error::Unknown { kind: "preset", name: id.to_string() })
    }

    /// Accepts a single id, a comma-separated list, or `all`.
    pub fn parse_list(spec: &str) -> Result<Vec<Preset>> {
        if spec == "all" {
            return Ok(PRESETS.to_vec());
        }
        spec.split(',').map(|s| Preset::get(s.trim())).collect()
    }

    pub fn apply(&self, base: &RunConfig) -> RunConfig {
        RunConfig {
            algorithm: self.algorithm,
            aggregation: self.aggregation,
            sigmoid_align: self.sigmoid_align,
            ..base.clone()
        }
    }
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub preset: String,
    pub seed: u64,
    pub sor: f64,
    pub ssor: f64,
    pub sim: f64,
    pub ri: f64,
    pub n: usize,
    pub band_violation: f64,
    pub sampled_sor: f64,
}

pub const ABLATION_TABLE: &str = "ablation.csv";

/// Trains every (preset, seed) pair on top of `base`, each into
/// `out_dir/<preset>/seed-<n>`, and writes the side-by-side table to
/// `out_dir/ablation.csv`. Runs are independent and execute on up to
/// `threads` worker threads; row order is fixed (preset-major).
pub fn run_ablation(
    presets: &[Preset],
    seeds: &[u64],
    base: &RunConfig,
    out_dir: &Path,
    threads: usize,
) -> Result<Vec<AblationRow>> {
    if presets.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument("ablation needs at least one preset and one seed".into()));
    }
    let jobs: Vec<(Preset, u64, PathBuf)> = presets
        .iter()
        .flat_map(|p| seeds.iter().map(move |&s| (*p, s, out_dir.join(p.id).join(format!("seed-{s}")))))
        .collect();
    for (p, s, _) in &jobs {
        RunConfig { seed: Some(*s), ..p.apply(base) }.validate()?;
    }
    let results: Mutex<Vec<Option<Result<AblationRow>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = threads.clamp(1, jobs.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((preset, seed, dir)) = jobs.get(i) else { break };
                let cfg = RunConfig { seed: Some(*seed), ..preset.apply(base) };
                let row = run_training(&cfg, dir).map(|o| AblationRow {
                    preset: preset.id.to_string(),
                    seed: *seed,
                    sor: o.report.sor,
                    ssor: o.report.ssor,
                    sim: o.report.sim,
                    ri: o.report.ri,
                    n: o.report.n,
                    band_violation: o.diagnostics.band_violation_rate,
                    sampled_sor: o.diagnostics.sampled_sor,
                });
                results.lock().expect("no poisoned workers")[i] = Some(row);
            });
        }
    });
    let rows = results
        .into_inner()
        .expect("no poisoned workers")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join(ABLATION_TABLE);
    let mut w = csv::Writer::from_path(&path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}
