//! Scoring a beam against its source and picking the candidate to report.
//!
//!     cargo run --example selection

use std::path::Path;

use moalign::harness::TaskFile;
use moalign::metrics::{relative_improvement, select_candidate, sor_success, strict_success, EvalPair, MetricsReport};
use moalign::property::{annotate, Candidate};

const TASK: &str = r#"
name = "select"
symbols = ["A", "B", "C"]
max_len = 8

[[properties]]
name = "a"
direction = 1
delta = 0.25
theta = 0.5
oracle = "frac_A"

[[properties]]
name = "c"
direction = 1
delta = 0.25
theta = 0.25
oracle = "frac_C"

[[sources]]
tokens = "A B C C"
"#;

fn main() -> moalign::Result<()> {
    let loaded = TaskFile::parse(TASK, Path::new("select.toml"))?.build()?;
    let task = loaded.tasks[0].clone();
    let beam: Vec<Candidate> = ["A B C C", "A A A A", "A A C C", "A A B C", "A A A C"]
        .iter()
        .map(|t| {
            let mut c = Candidate::parse(loaded.vocab(), t)?;
            annotate(&mut c, &task, &loaded.registry)?;
            Ok(c)
        })
        .collect::<moalign::Result<_>>()?;

    println!("{:<10} {:>5} {:>5} {:>7}", "beam", "SOR", "SSOR", "RI");
    for c in &beam {
        println!(
            "{:<10} {:>5} {:>5} {:>7.3}",
            loaded.vocab().render(&c.tokens),
            sor_success(&task, c)?,
            strict_success(&task, c, true)?,
            relative_improvement(&task, c)?.0
        );
    }
    let pick = select_candidate(&beam, &task)?;
    println!("\npicked #{} {} (SOR-compliant: {})", pick.index, loaded.vocab().render(&pick.candidate.tokens), pick.sor_compliant);

    let report = MetricsReport::compute(&[EvalPair::new(task, pick.candidate)], true)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
