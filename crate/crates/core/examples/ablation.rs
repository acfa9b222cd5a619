//! All six presets on the conflict task, three seeds each, side by side.
//!
//!     cargo run --release --example ablation

use moalign::harness::{default_ablation_config, run_ablation, PRESETS};

fn main() -> moalign::Result<()> {
    let out = std::env::temp_dir().join("moalign-ablation-example");
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let rows = run_ablation(&PRESETS, &[1, 2, 3], &default_ablation_config()?, &out, threads)?;
    println!("{:<18} {:>4} {:>6} {:>6} {:>6} {:>9}", "preset", "seed", "SOR", "SSOR", "Sim", "band vio");
    for r in &rows {
        println!(
            "{:<18} {:>4} {:>6.3} {:>6.3} {:>6.3} {:>9.3}",
            r.preset, r.seed, r.sor, r.ssor, r.sim, r.band_violation
        );
    }
    println!("\nruns written under {}", out.display());
    Ok(())
}
