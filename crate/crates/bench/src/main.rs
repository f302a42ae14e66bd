use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use sqrt_slr::tracking::simulate_trajectory;
use sqrt_slr_bench::config::{parse_list, parse_sigma0};
use sqrt_slr_bench::{aggregate, emit_csv, format_f64, mean_path, read_records, run_experiment, write_aggregates};
use sqrt_slr_bench::{Aggregates, ExperimentConfig, Method, Precision, RuleSpec};

#[derive(Parser)]
#[command(
    name = "slr-bench",
    version,
    about = "Coordinated-turn benchmark for square-root SLR smoothers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one ground-truth trajectory with measurements.
    Simulate {
        #[arg(long, default_value_t = 101)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "variance")]
        sigma0: String,
    },
    /// Run the Monte Carlo experiment and write per-step error records.
    Experiment {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 101)]
        length: usize,
        #[arg(long, default_value_t = 10)]
        iterations: usize,
        #[arg(long, default_value = "proposed,reference")]
        methods: String,
        #[arg(long, default_value = "32,64")]
        precisions: String,
        #[arg(long, default_value = "cubature")]
        rule: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "variance")]
        sigma0: String,
    },
    /// Recompute per-step means from a records file.
    Aggregate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Defaults to the `_mean` sibling of the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate {
            length,
            seed,
            out,
            sigma0,
        } => {
            let config = ExperimentConfig {
                sigma0_reading: parse_sigma0(&sigma0)?,
                ..Default::default()
            };
            let traj = simulate_trajectory(&config.ct_params(), length, seed)?;
            let mut w = csv::Writer::from_path(&out).with_context(|| format!("creating {}", out.display()))?;
            w.write_record(["time", "p1", "p2", "v1", "v2", "omega", "range", "bearing"])?;
            for (t, (x, y)) in traj.states.iter().zip(&traj.observations).enumerate() {
                let mut row = vec![t.to_string()];
                row.extend(x.iter().chain(y).map(|&v| format_f64(v)));
                w.write_record(&row)?;
            }
            w.flush()?;
            println!("wrote {length} steps to {}", out.display());
        }
        Command::Experiment {
            trials,
            length,
            iterations,
            methods,
            precisions,
            rule,
            seed,
            out,
            sigma0,
        } => {
            let config = ExperimentConfig {
                trials,
                length,
                iterations,
                methods: parse_list::<Method>(&methods)?,
                precisions: parse_list::<Precision>(&precisions)?,
                rule: rule.parse::<RuleSpec>()?,
                seed,
                output_path: Some(out.clone()),
                sigma0_reading: parse_sigma0(&sigma0)?,
            };
            let start = Instant::now();
            let records = run_experiment(&config)?;
            let means = aggregate(&records)?;
            emit_csv(&records, Some(&means), &out)?;
            summarize(&means);
            println!(
                "wrote {} records to {} and means to {} in {:.1}s",
                records.len(),
                out.display(),
                mean_path(&out).display(),
                start.elapsed().as_secs_f64()
            );
        }
        Command::Aggregate { input, out } => {
            let records = read_records(&input)?;
            let means = aggregate(&records)?;
            let out = out.unwrap_or_else(|| mean_path(&input));
            write_aggregates(&out, &means)?;
            summarize(&means);
            println!("wrote means to {}", out.display());
        }
    }
    Ok(())
}

fn summarize(means: &Aggregates) {
    for cell in &means.cells {
        let last = means
            .series(cell.method, cell.precision)
            .into_iter()
            .rev()
            .find(|r| r.pos_err.is_some());
        let tail = match last {
            Some(r) => format!(
                "final step {}: pos {:.4} vel {:.4} omega {:.6}",
                r.time,
                r.pos_err.unwrap(),
                r.vel_err.unwrap(),
                r.omega_err.unwrap()
            ),
            None => "no completed trials".to_string(),
        };
        println!(
            "{}{}: {}/{} trials failed; {}",
            cell.method.short(),
            cell.precision.bits(),
            cell.failures,
            cell.trials,
            tail
        );
    }
}
