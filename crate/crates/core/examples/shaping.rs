//! Sigmoid-aligned and linear scores for a few edits of one source.
//!
//!     cargo run --example shaping

use std::path::Path;

use moalign::harness::TaskFile;
use moalign::property::{annotate, Candidate};
use moalign::shaping::{RewardShaper, ScoreMode, SteepnessConfig};

const TASK: &str = r#"
name = "demo"
symbols = ["A", "B", "C", "D"]
max_len = 12

[[oracles]]
id = "b_x10"
base = "frac_B"
scale = 10.0

[[properties]]
name = "narrow"
direction = 1
delta = 0.1
theta = 0.3
oracle = "frac_A"

[[properties]]
name = "wide"
direction = 1
delta = 1.0
theta = 3.0
oracle = "b_x10"

[[properties]]
name = "keep_c"
direction = 1
delta = 0.2
theta = 0.3
oracle = "frac_C"

[[sources]]
tokens = "C D C D A C D B C D"
"#;

fn main() -> moalign::Result<()> {
    let loaded = TaskFile::parse(TASK, Path::new("demo.toml"))?.build()?;
    let task = &loaded.tasks[0];
    println!("improve: {:?}  stabilize: {:?}", task.improve_set(), task.stabilize_set());
    println!("targets: {:?}", task.targets());
    println!("bands:   {:?}\n", task.bands());

    let steep = SteepnessConfig::new(1.0)?;
    let aligned = RewardShaper { mode: ScoreMode::SigmoidAligned, steepness: steep };
    let linear = RewardShaper { mode: ScoreMode::Linear, steepness: steep };

    println!("{:<22} {:>30}   {:>30}", "candidate", "aligned (narrow wide keep)", "linear (narrow wide keep)");
    for text in [
        "C D C D A C D B C D",
        "C A C D A C D B C D",
        "C D C B A C D B C D",
        "C A C B A C D B C D",
        "A A A B A B D B C D",
    ] {
        let mut c = Candidate::parse(loaded.vocab(), text)?;
        annotate(&mut c, task, &loaded.registry)?;
        let v = c.props()?;
        let a = aligned.shape(v, task, &loaded.registry)?.values;
        let l = linear.shape(v, task, &loaded.registry)?.values;
        println!(
            "{text:<22} {:>9.4} {:>9.4} {:>9.4}   {:>9.4} {:>9.4} {:>9.4}",
            a[0], a[1], a[2], l[0], l[1], l[2]
        );
    }
    Ok(())
}
