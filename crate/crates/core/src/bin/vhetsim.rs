use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vhetsim::config::{load_config, render_config, ExperimentConfig, Scenario};
use vhetsim::output::{execute, format_number, group_rows, read_trials, render_summary_table};
use vhetsim::stats::threads_from_env;

#[derive(Parser)]
#[command(
    name = "vhetsim",
    version,
    about = "Monte Carlo simulator for HAPS-assisted vertical heterogeneous networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write trials.csv, summary.csv and cdf.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        topologies: Option<usize>,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to VHETSIM_THREADS, then all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Nearest-rank percentile of every metric group in a trials file.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        percentile: f64,
    },
    /// Print the full default configuration for a scenario.
    Defaults {
        #[arg(value_enum)]
        scenario: ScenarioArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Cs1,
    Cs2,
}

fn run(cli: Cli) -> vhetsim::Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            topologies,
            realizations,
            out,
            threads,
        } => {
            let mut cfg: ExperimentConfig = load_config(&config)?;
            cfg.plan.master_seed = seed;
            if let Some(t) = topologies {
                cfg.plan.topologies = t;
            }
            if let Some(r) = realizations {
                cfg.plan.realizations = r;
            }
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            let threads = threads.filter(|&n| n > 0).or_else(threads_from_env);
            let report = execute(&cfg, threads)?;
            write_stdout(&render_summary_table(&report.summary));
            log::info!("wrote {}", cfg.output_dir.display());
        }
        Command::Stats { input, percentile } => {
            let rows = read_trials(&input)?;
            let mut text = format!(
                "scenario,scheme,sweep_value,metric_name,count,p{}\n",
                format_number(percentile)
            );
            for g in group_rows(&rows)? {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{},{}",
                    g.scenario,
                    g.scheme,
                    g.sweep_value.map(format_number).unwrap_or_default(),
                    g.metric_name,
                    g.distribution.len(),
                    format_number(g.distribution.percentile(percentile)?)
                );
            }
            write_stdout(&text);
        }
        Command::Defaults { scenario } => {
            let s = match scenario {
                ScenarioArg::Cs1 => Scenario::Cs1,
                ScenarioArg::Cs2 => Scenario::Cs2,
            };
            write_stdout(&render_config(&ExperimentConfig::defaults(s)));
        }
    }
    Ok(())
}

// a closed pipe (`| head`) is not an error
fn write_stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
