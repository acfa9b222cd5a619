//! Group-relative advantages for one group of four candidates scored on
//! three properties, under each advantage mode.
//!
//!     cargo run --example advantages

use moalign::aggregate::{arithmetic_mean, geometric_mean};
use moalign::optim::{batch_normalize, decoupled_advantages, gdpo_advantages, grpo_advantages, AdvantageMode};

fn main() -> moalign::Result<()> {
    // Rows are candidates, columns properties. Candidate 0 trades the third
    // property away for the first two.
    let rewards = vec![
        vec![0.99, 0.97, 0.02],
        vec![0.60, 0.55, 0.90],
        vec![0.50, 0.52, 0.93],
        vec![0.70, 0.40, 0.88],
    ];
    let am: Vec<f64> = rewards.iter().map(|r| arithmetic_mean(r)).collect::<Result<_, _>>()?;
    let gm: Vec<f64> = rewards.iter().map(|r| geometric_mean(r)).collect::<Result<_, _>>()?;
    println!("GRPO + AM   {:?}", fmt(&grpo_advantages(&am, 1e-8)?));
    println!("GRPO + GM   {:?}", fmt(&grpo_advantages(&gm, 1e-8)?));

    println!("\nper-property normalized:");
    for row in decoupled_advantages(&rewards, 1e-8)? {
        println!("  {:?}", fmt(&row));
    }
    let lse = gdpo_advantages(&rewards, None, AdvantageMode::GdpoLse, 1e-8)?;
    let sum = gdpo_advantages(&rewards, None, AdvantageMode::GdpoSumBn, 1e-8)?;
    println!("GDPO + LSE  {:?}", fmt(&lse));
    println!("  after BN  {:?}", fmt(&batch_normalize(&lse, 1e-8)?));
    println!("GDPO + sum  {:?}", fmt(&sum));
    println!("  after BN  {:?}", fmt(&batch_normalize(&sum, 1e-8)?));
    Ok(())
}

fn fmt(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:+.3}")).collect()
}
