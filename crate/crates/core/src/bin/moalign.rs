use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use moalign::harness::{
    default_ablation_config, evaluate_checkpoint, run_ablation, run_pareto_analysis, run_training, Preset, RunConfig,
};
use moalign::Result;

#[derive(Parser)]
#[command(name = "moalign", version, about = "Multi-objective group-relative policy optimization on a toy sequence policy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run and evaluate it.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Output directory [default: config's out_dir, else runs/<config name>/seed-<n>]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run ablation presets over shared seeds.
    Ablate {
        /// Preset id, comma-separated ids, or `all`.
        #[arg(long)]
        preset: String,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        /// Base config [default: the built-in conflict config]
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "runs/ablation")]
        out: PathBuf,
        /// Worker threads [default: available cores]
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Locate aggregator optima on a trade-off front and dump contour data.
    Pareto {
        /// Front id (`linear`, `quarter-circle`, `bowed-<p>`) or `all`.
        #[arg(long)]
        front: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        lse_temperature: f64,
    },
    /// Beam-evaluate a saved policy on a task file.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Task file path or builtin:<name>.
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 20)]
        beam_width: usize,
        /// Do not require SOR success for SSOR.
        #[arg(long)]
        ungated_ssor: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, seed, out } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.seed = Some(seed);
            let stem = config.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
            let dir = out
                .or_else(|| cfg.out_dir.as_ref().map(|d| cfg.base_dir.join(d)))
                .unwrap_or_else(|| PathBuf::from("runs").join(stem).join(format!("seed-{seed}")));
            let o = run_training(&cfg, &dir)?;
            println!("{}", serde_json::to_string(&o.report)?);
            eprintln!("wrote {}", dir.display());
        }
        Command::Ablate { preset, seeds, config, out, threads } => {
            let presets = Preset::parse_list(&preset)?;
            let base = match config {
                Some(p) => RunConfig::load(&p)?,
                None => default_ablation_config()?,
            };
            let threads = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let rows = run_ablation(&presets, &seeds, &base, &out, threads)?;
            println!("{:<18} {:>5} {:>6} {:>6} {:>6} {:>8} {:>4} {:>8} {:>8}", "preset", "seed", "sor", "ssor", "sim", "ri", "n", "band_vio", "samp_sor");
            for r in rows {
                println!(
                    "{:<18} {:>5} {:>6.3} {:>6.3} {:>6.3} {:>8.3} {:>4} {:>8.3} {:>8.3}",
                    r.preset, r.seed, r.sor, r.ssor, r.sim, r.ri, r.n, r.band_violation, r.sampled_sor
                );
            }
        }
        Command::Pareto { front, out, lse_temperature } => {
            for r in run_pareto_analysis(&front, &out, lse_temperature)? {
                match r.t {
                    Some(t) => println!("{:<16} {:<4} t={t:.3} {}", r.front, r.aggregator, r.location),
                    None => println!("{:<16} {:<4} {}", r.front, r.aggregator, r.location),
                }
            }
        }
        Command::Eval { checkpoint, task, beam_width, ungated_ssor } => {
            let (tasks, report, selections) = evaluate_checkpoint(&checkpoint, &task, beam_width, !ungated_ssor)?;
            for (t, s) in tasks.tasks.iter().zip(&selections) {
                eprintln!("{}: {}", t.name, tasks.vocab().render(&s.candidate.tokens));
            }
            println!("{}", serde_json::to_string(&report)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
