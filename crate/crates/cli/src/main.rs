//! `condmap {sample|verify|experiment|stats}`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use condmap_core::bijections::Fault;
use condmap_core::harness::{cmd_experiment, cmd_sample, cmd_stats, cmd_verify, RunConfig, EXPERIMENTS};
use condmap_core::io::{write_new, Format};

#[derive(Parser)]
#[command(
    name = "condmap",
    version,
    about = "Boltzmann bipartite planar maps with a condensate face"
)]
struct Cli {
    /// Worker threads for replicate-level parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Largest n accepted by the sampler (default: CONDMAP_CAP_N or 30000).
    #[arg(long, global = true)]
    cap: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Sampling {
    /// Weight family, e.g. `powerlaw:beta=3,c=1` or `factorial:alpha=1`.
    #[arg(long)]
    family: String,
    /// Number of edges.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Bin,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    SuccessorOffByOne,
}

#[derive(Subcommand)]
enum Command {
    /// Sample maps and write one file per replicate plus a manifest.
    Sample {
        #[command(flatten)]
        s: Sampling,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
    },
    /// Run the exhaustive verification suite; exit 1 on any failure.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON report here (stdout otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Inject a defect to check that the suite catches it.
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Run an experiment and write `<out>/<name>.json` and `<out>/<name>.csv`.
    Experiment {
        /// One of prop-scgw, prop-super, thm-inv, thm-dinv, distortion,
        /// label-moments, degree-profile.
        name: String,
        #[command(flatten)]
        s: Sampling,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75")]
        t_grid: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        oracle_m: usize,
        #[arg(long, default_value_t = 500)]
        oracle_draws: usize,
        /// Label draws per tree for label-moments.
        #[arg(long, default_value_t = 50)]
        labelings: usize,
        /// Compute the exact distortion (n <= 500) in the distortion experiment.
        #[arg(long)]
        exact_distortion: bool,
    },
    /// Summarise a directory written by `sample`.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<PathBuf>, text: String) -> Result<(), condmap_core::Error> {
    match out {
        Some(p) => write_new(&p, text.as_bytes()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, condmap_core::Error> {
    let base = RunConfig {
        threads: cli.threads,
        cap: cli.cap,
        ..RunConfig::default()
    };
    let sampling = |command: &str, s: Sampling| RunConfig {
        command: command.into(),
        family: Some(s.family),
        n: s.n,
        replicates: s.reps,
        seed: Some(s.seed),
        out_dir: s.out,
        ..base.clone()
    };
    match cli.command {
        Command::Sample { s, format } => {
            let cfg = RunConfig {
                format: match format {
                    FormatArg::Json => Format::Json,
                    FormatArg::Bin => Format::Bin,
                },
                ..sampling("sample", s)
            };
            let manifest = cmd_sample(&cfg)?;
            eprintln!("wrote {} replicates; manifest {}", cfg.replicates, manifest.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            seed,
            out,
            inject_fault,
        } => {
            let cfg = RunConfig {
                command: "verify".into(),
                seed: Some(seed),
                fault: inject_fault.map(|FaultArg::SuccessorOffByOne| Fault::SuccessorOffByOne),
                ..base.clone()
            };
            let report = cmd_verify(&cfg)?;
            for c in &report.checks {
                eprintln!(
                    "{} {} ({} instances)",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.instances
                );
            }
            if let Some((name, ce)) = report.first_counterexample() {
                eprintln!("first counterexample ({name}): {ce}");
            }
            emit(out, serde_json::to_string_pretty(&report)?)?;
            Ok(if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Experiment {
            name,
            s,
            t_grid,
            oracle_m,
            oracle_draws,
            labelings,
            exact_distortion,
        } => {
            if !EXPERIMENTS.contains(&name.as_str()) {
                eprintln!(
                    "unknown experiment `{name}`; expected one of {}",
                    EXPERIMENTS.join(", ")
                );
                return Ok(ExitCode::from(2));
            }
            let cfg = RunConfig {
                t_grid,
                oracle_m,
                oracle_draws,
                labelings,
                exact_distortion,
                ..sampling("experiment", s)
            };
            let summary = cmd_experiment(&cfg, &name)?;
            println!("{}", summary.to_json());
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats { input, out } => {
            let cfg = RunConfig {
                command: "stats".into(),
                input: Some(input),
                ..base.clone()
            };
            let report = cmd_stats(&cfg)?;
            let ok = report.corrupted.is_empty();
            emit(out, serde_json::to_string_pretty(&report)?)?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
