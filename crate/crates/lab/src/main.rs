use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use coco_lab::{list_scenarios, report, run, sweep, LabError, Metric, RunConfig};

/// Run constrained online learners on synthetic adversarial scenarios.
///
/// Exit codes: 0 success, 1 bound violation, 2 configuration error, 3 numerical failure.
#[derive(Parser)]
#[command(name = "coco-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write rounds.csv, summary.json and config.json.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write plotdata.csv (series,t,value).
        #[arg(long)]
        emit_plotdata: bool,
    },
    /// Run every horizon and fit the growth exponent of a metric.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = MetricArg::Ccv)]
        metric: MetricArg,
    },
    /// Print a stored summary; with --verify, rederive it from the CSV.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        verify: bool,
    },
    /// List scenario families.
    ListScenarios,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated horizons; a single value sets the run horizon.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Ccv,
    Regret,
}

impl Common {
    fn load(&self, single_run: bool) -> anyhow::Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.out_dir = Some(out.clone());
        }
        if let Some(seed) = self.seed {
            cfg.seed = Some(seed);
        }
        if let Some(h) = &self.horizons {
            if single_run {
                match h.as_slice() {
                    [t] => cfg.scenario.horizon = *t,
                    _ => {
                        return Err(LabError::Config("run takes a single horizon".into()).into())
                    }
                }
            } else {
                cfg.horizons = h.clone();
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn bound_code(ok: bool) -> u8 {
    if ok {
        0
    } else {
        1
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Run {
            common,
            emit_plotdata,
        } => {
            let cfg = common.load(true)?;
            let outcome = run(&cfg, emit_plotdata).context("run failed")?;
            println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
            Ok(bound_code(outcome.all_bounds_ok()))
        }
        Command::Sweep { common, metric } => {
            let cfg = common.load(false)?;
            let metric = match metric {
                MetricArg::Ccv => Metric::Ccv,
                MetricArg::Regret => Metric::Regret,
            };
            let outcome = sweep(&cfg, metric).context("sweep failed")?;
            if outcome.fit.degenerate {
                eprintln!("metric degenerate: fewer than two horizons with {} > 1", outcome.key);
            }
            println!("{}", serde_json::to_string_pretty(&outcome)?);
            Ok(bound_code(outcome.all_bounds_ok()))
        }
        Command::Report { out, verify } => {
            let outcome = report(&out, verify)
                .with_context(|| format!("cannot report on {}", out.display()))?;
            println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
            if !outcome.mismatches.is_empty() {
                for m in &outcome.mismatches {
                    eprintln!("mismatch: {m}");
                }
                return Err(LabError::Verify(format!(
                    "{} entries differ",
                    outcome.mismatches.len()
                ))
                .into());
            }
            if verify {
                eprintln!("verified: summary reproduced from {}", out.display());
            }
            let ok = outcome.summary.get("all_bounds_ok") == Some(&serde_json::Value::Bool(true));
            Ok(bound_code(ok))
        }
        Command::ListScenarios => {
            for (name, desc) in list_scenarios() {
                println!("{name:<22} {desc}");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .chain()
                .find_map(|e| e.downcast_ref::<LabError>())
                .map_or(2, LabError::exit_code);
            ExitCode::from(code)
        }
    }
}
