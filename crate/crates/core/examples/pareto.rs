//! Writes contour grids and front samples for plotting.
//!
//!     cargo run --example pareto -- out/pareto

use std::path::PathBuf;

use moalign::harness::run_pareto_analysis;

fn main() -> moalign::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("moalign-pareto"), PathBuf::from);
    for r in run_pareto_analysis("all", &out, 1.0)? {
        println!("{:<16} {:<4} {:<10} {:?}", r.front, r.aggregator, r.location, r.t);
    }
    println!("csv files in {}", out.display());
    Ok(())
}
