//! Experiment orchestration: configuration, training, ablations, the
//! front-geometry study, logs, and checkpoint evaluation.

mod ablation;
mod config;
mod log;
mod pareto;
mod task;
mod train;

use std::path::Path;

pub use ablation::{
    default_ablation_config, run_ablation, AblationRow, Preset, ABLATION_TABLE, DEFAULT_ABLATION_CONFIG, PRESETS,
};
pub use config::{Algorithm, RunConfig};
pub use log::{emit_logs, format_real, header, parse_log, round_real, LogWriter, TrainLogRecord, FIXED_COLUMNS};
pub use pareto::{run_pareto_analysis, ParetoSummaryRow, CONTOUR_POINTS, FRONT_RESOLUTION};
pub use task::{load_tasks, resolve_task_ref, LoadedTasks, OracleDef, SourceDef, TaskFile, TaskRef, TermDef, BUILTIN_TASKS};
pub use train::{
    band_violated, candidate_rewards, evaluate_beam, initial_policy, run_training, sampled_diagnostics, Diagnostics,
    TrainOutcome, Trainer, CHECKPOINT_FILE, DIAGNOSTICS_FILE, LOG_FILE, METRICS_FILE, RESOLVED_CONFIG_FILE,
};

use crate::error::{Error, Result};
use crate::metrics::{MetricsReport, Selection};
use crate::policy::read_checkpoint;

/// Loads a checkpoint and a task file and runs the beam evaluation.
/// `task` may be a path or `builtin:<name>`.
pub fn evaluate_checkpoint(
    checkpoint: &Path,
    task: &str,
    beam_width: usize,
    ssor_gated: bool,
) -> Result<(LoadedTasks, MetricsReport, Vec<Selection>)> {
    let policy = read_checkpoint(checkpoint)?;
    let tasks = load_tasks(&resolve_task_ref(task, Path::new("")))?;
    if policy.vocab() != tasks.vocab() {
        return Err(Error::VocabularyMismatch);
    }
    if policy.slots() < tasks.tasks.len() {
        return Err(Error::InvalidArgument(format!(
            "checkpoint has {} slots but the task file defines {} tasks",
            policy.slots(),
            tasks.tasks.len()
        )));
    }
    let (report, sel) = evaluate_beam(&policy, &tasks, beam_width, ssor_gated)?;
    Ok((tasks, report, sel))
}
