//! Train briefly, save the policy, reload it and evaluate on the same tasks.
//!
//!     cargo run --release --example checkpoint

use moalign::harness::{default_ablation_config, evaluate_checkpoint, run_training, RunConfig, CHECKPOINT_FILE};

fn main() -> moalign::Result<()> {
    let dir = std::env::temp_dir().join("moalign-checkpoint-example");
    let cfg = RunConfig { max_steps: 100, seed: Some(5), ..default_ablation_config()? };
    let run = run_training(&cfg, &dir)?;
    println!("after training: {}", serde_json::to_string(&run.report)?);

    let (tasks, report, picks) = evaluate_checkpoint(&dir.join(CHECKPOINT_FILE), "builtin:conflict", 20, true)?;
    println!("from checkpoint: {}", serde_json::to_string(&report)?);
    for (t, s) in tasks.tasks.iter().zip(&picks) {
        println!("  {:<12} {}  ->  {}", t.name, tasks.vocab().render(&t.source.tokens), tasks.vocab().render(&s.candidate.tokens));
    }
    Ok(())
}
