//! Stepping the trainer by hand on the built-in conflict task and watching
//! the per-property scores.
//!
//!     cargo run --release --example train -- [algorithm] [aggregation] [seed]
//!
//! e.g. `grpo arithmetic_mean 1` or `gdpo lse_softmin 2`.

use moalign::harness::{default_ablation_config, RunConfig, Trainer};

fn main() -> moalign::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let algorithm = args.first().map_or("grpo", String::as_str);
    let aggregation = args.get(1).map_or("geometric_mean", String::as_str);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);

    let overrides = format!("algorithm = \"{algorithm}\"\naggregation = \"{aggregation}\"");
    let patch: RunConfig = RunConfig::from_toml(&overrides, std::path::Path::new("args"))?;
    let cfg = RunConfig {
        algorithm: patch.algorithm,
        aggregation: patch.aggregation,
        seed: Some(seed),
        ..default_ablation_config()?
    };
    let mut trainer = Trainer::new(cfg)?;
    let names = trainer.tasks().property_names();
    println!("{:>5} {:>9} {:>8} {:>8}  scores {names:?}", "step", "loss", "reward", "kl");
    for _ in 0..trainer.config().max_steps {
        let r = trainer.step()?;
        if r.step == 1 || r.step % 25 == 0 {
            let s: Vec<String> = r.score.iter().map(|x| format!("{x:.3}")).collect();
            println!("{:>5} {:>9.4} {:>8.4} {:>8.4}  {}", r.step, r.loss, r.mean_reward, r.kl, s.join(" "));
        }
    }
    let (report, diag) = trainer.evaluate()?;
    println!("\nbeam eval: {}", serde_json::to_string(&report)?);
    println!("sampled band violation {:.3}, sampled SOR {:.3}", diag.band_violation_rate, diag.sampled_sor);
    Ok(())
}
