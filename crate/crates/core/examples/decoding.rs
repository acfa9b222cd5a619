//! Sampling a group and running beam search from a warm-started policy.
//!
//!     cargo run --example decoding

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use moalign::harness::{initial_policy, load_tasks, TaskRef};
use moalign::harness::RunConfig;
use moalign::policy::{beam_search, sample_group};

fn main() -> moalign::Result<()> {
    let tasks = load_tasks(&TaskRef::Builtin("conflict".into()))?;
    let cfg = RunConfig { task: "builtin:conflict".into(), ..RunConfig::default() };
    let policy = initial_policy(&cfg, &tasks)?;
    let task = &tasks.tasks[0];
    let vocab = tasks.vocab();
    println!("source  {}", vocab.render(&task.source.tokens));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("\nsampled group:");
    for s in sample_group(task, &policy, 4, tasks.max_len(), &mut rng)? {
        let lp: f64 = s.logp.iter().sum();
        println!("  {lp:>8.3}  {}", vocab.render(&s.candidate.tokens));
    }

    println!("\nbeam (width 5):");
    for h in beam_search(&policy, task, 5, tasks.max_len())? {
        let tail = if h.candidate.ended { "" } else { "  (cut at max_len)" };
        println!("  {:>8.3}  {}{tail}", h.logp, vocab.render(&h.candidate.tokens));
    }
    Ok(())
}
