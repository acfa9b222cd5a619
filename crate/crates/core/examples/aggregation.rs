//! The three aggregators on a score vector, and where each one lands on the
//! shipped trade-off fronts.
//!
//!     cargo run --example aggregation

use moalign::aggregate::{gm_gradient, lse_gradient, pareto_argmax, Aggregator, ParetoFront};

fn main() -> moalign::Result<()> {
    let scores = [0.95, 0.9, 0.05];
    let am = Aggregator::arithmetic();
    let gm = Aggregator::geometric();
    let lse = Aggregator::softmin(5.0)?;
    println!("scores {scores:?}");
    println!("  AM  {:.4}", am.apply(&scores)?);
    println!("  GM  {:.4}  grad {:?}", gm.apply(&scores)?, round(&gm_gradient(&scores)?));
    println!("  LSE {:.4}  grad {:?}", lse.apply(&scores)?, round(&lse_gradient(&scores, 5.0)?));

    println!("\n{:<16} {:>14} {:>14} {:>14}", "front", "AM", "GM", "LSE(k=5)");
    for id in ParetoFront::builtin_ids() {
        let front = ParetoFront::builtin(&id, 1000)?;
        let mut cells = Vec::new();
        for agg in [&am, &gm, &lse] {
            cells.push(match pareto_argmax(&front, agg) {
                Ok(o) => format!("t={:.3} {:?}", o.t, o.location),
                Err(_) => "flat".to_string(),
            });
        }
        println!("{id:<16} {:>14} {:>14} {:>14}", cells[0], cells[1], cells[2]);
    }
    Ok(())
}

fn round(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}
