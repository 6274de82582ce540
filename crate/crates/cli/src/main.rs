use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use drsub_core::instances::IndexBase;
use drsub_core::objectives::QpDistribution;
use drsub_cli::{commands, run, ExperimentConfig, Failure};

#[derive(Parser)]
#[command(name = "drsub", version, about = "DR-submodular maximization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Uniform,
    Exponential,
}

#[derive(Clone, Copy, ValueEnum)]
enum Base {
    Auto,
    Zero,
    One,
}

#[derive(Subcommand)]
enum Command {
    /// Print the QP instance `run` would solve for a seed and dimension.
    GenQp {
        #[arg(long)]
        n: usize,
        /// Packing rows (default: n).
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long, value_enum, default_value = "uniform")]
        dist: Dist,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replace the configured seeds by this one.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Print the effective config and stop.
        #[arg(long)]
        dry_run: bool,
    },
    /// Parse an edge list and print its node and edge counts.
    IngestGraph {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        index_base: Base,
    },
    /// Run the invariant suite on small seeded instances.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        instances: usize,
        /// Seed taken from this config's first seed instead.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::GenQp { n, rows, dist, seed, out } => {
            let dist = match dist {
                Dist::Uniform => QpDistribution::Uniform,
                Dist::Exponential => QpDistribution::Exponential,
            };
            let text = commands::gen_qp(n, rows, dist, seed)?;
            match out {
                Some(path) => fs::write(path, text)?,
                None => std::io::stdout().write_all(text.as_bytes())?,
            }
            Ok(())
        }
        Command::Run {
            config,
            seed,
            out,
            threads,
            dry_run,
        } => {
            let cfg = ExperimentConfig::load(&config)?.with_overrides(seed, out)?;
            if dry_run {
                let echo = serde_json::json!({
                    "config": cfg,
                    "config_hash": run::config_hash(&cfg),
                    "cells": run::planned_cells(&cfg),
                    "out": cfg.out_dir(),
                });
                println!("{}", serde_json::to_string_pretty(&echo).expect("json value serializes"));
                return Ok(());
            }
            let report = run::execute(&cfg, threads)?;
            println!(
                "{} cells, {} failed, {} feasibility violations; wrote {}",
                report.cells,
                report.failed,
                report.feasibility_violations,
                cfg.out_dir().display()
            );
            if report.failed > 0 {
                return Err(Failure::Solver(format!(
                    "{} of {} cells failed, see manifest.json",
                    report.failed, report.cells
                )));
            }
            Ok(())
        }
        Command::IngestGraph { path, index_base } => {
            let base = match index_base {
                Base::Auto => IndexBase::Auto,
                Base::Zero => IndexBase::Zero,
                Base::One => IndexBase::One,
            };
            let file = fs::File::open(&path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let (_, text) = commands::ingest_graph(std::io::BufReader::new(file), base)?;
            print!("{text}");
            Ok(())
        }
        Command::Validate { seed, instances, config } => {
            let seed = match config {
                Some(p) => ExperimentConfig::load(&p)?.seeds[0],
                None => seed,
            };
            let (report, bad) = commands::validate(seed, instances)?;
            print!("{report}");
            if bad > 0 {
                return Err(Failure::Solver(format!("{bad} invariant violations")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("drsub: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
