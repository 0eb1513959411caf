use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use dri_core::bench::{oracle_suite, run_grid, BksTable, ExperimentGrid};
use dri_core::instance::write_instance;
use dri_core::synthetic::SyntheticSpec;
use dri_core::{decompose_instance, parse_instance, run_dri, DriConfig, Instance};

/// Decompose-route-improve solver for large VRPTW instances.
#[derive(Parser)]
#[command(name = "dri", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on one instance.
    Solve {
        instance: PathBuf,
        /// TOML run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed, overriding the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Total runtime in seconds, overriding the config.
        #[arg(long)]
        theta: Option<f64>,
        /// Solution JSON output (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run report JSON output.
        #[arg(long)]
        report: Option<PathBuf>,
        /// CSV of best-known costs for gap reporting.
        #[arg(long)]
        bks: Option<PathBuf>,
        /// Improvement move log, one JSON object per line.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Cluster an instance and write each subproblem as an instance file.
    Decompose {
        instance: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment grid.
    Bench {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        bks: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the reference-implementation cross-checks.
    Oracles,
    /// Write a seeded synthetic instance.
    Generate {
        #[arg(long)]
        customers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        clustered: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<DriConfig> {
    let mut config = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            DriConfig::from_toml_str(&text).with_context(|| format!("config {}", p.display()))?
        }
        None => DriConfig::default(),
    };
    if let Some(s) = seed {
        config.master_seed = s;
    }
    Ok(config)
}

fn write_or_print(path: Option<&Path>, body: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct ManifestEntry {
    index: usize,
    file: String,
    customers: Vec<usize>,
    fleet: usize,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { instance, config, seed, theta, out, report, bks, log } => {
            let inst = load_instance(&instance)?;
            let mut config = load_config(config.as_deref(), seed)?;
            if let Some(t) = theta {
                config.theta = t;
            }
            if let Some(path) = bks {
                let table = BksTable::load(&path)?;
                match table.get(inst.name()) {
                    Some(z) => config.bks = Some(z),
                    None => log::warn!("no best-known cost for {}", inst.name()),
                }
            }
            let outcome = run_dri(&inst, &config)?;
            let r = &outcome.report;
            eprintln!(
                "{}: q={} Z {:.2} -> {:.2}, routes {} -> {}, feasible {}",
                r.instance, r.q, r.z_before, r.z_after, r.routes_before, r.routes_after, r.feasible
            );
            write_or_print(out.as_deref(), &outcome.solution.to_json()?)?;
            if let Some(p) = report {
                fs::write(&p, r.to_json()?).with_context(|| format!("writing {}", p.display()))?;
            }
            if let Some(p) = log {
                let mut lines = String::new();
                for rec in &r.improvement_log {
                    lines.push_str(&serde_json::to_string(rec)?);
                    lines.push('\n');
                }
                fs::write(&p, lines).with_context(|| format!("writing {}", p.display()))?;
            }
            if !r.feasible {
                bail!("final solution is infeasible");
            }
        }
        Command::Decompose { instance, config, seed, out } => {
            let inst = load_instance(&instance)?;
            let config = load_config(config.as_deref(), seed)?;
            let (clustering, subs) = decompose_instance(&inst, &config)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut manifest = Vec::new();
            for sub in &subs {
                let file = format!("{}.txt", sub.instance.name());
                fs::write(out.join(&file), write_instance(&sub.instance))?;
                manifest.push(ManifestEntry {
                    index: sub.index,
                    file,
                    customers: sub.customers.clone(),
                    fleet: sub.fleet,
                });
            }
            fs::write(out.join("clustering.json"), clustering.to_json()?)?;
            fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
            eprintln!("{} subproblems written to {}", subs.len(), out.display());
        }
        Command::Bench { grid, bks, out } => {
            let grid = ExperimentGrid::load(&grid)?;
            let table = match bks {
                Some(p) => BksTable::load(&p)?,
                None => BksTable::default(),
            };
            let results = run_grid(&grid, &table)?;
            results.write(&out)?;
            eprintln!("{} rows written to {}", results.rows.len(), out.display());
        }
        Command::Oracles => {
            let report = oracle_suite();
            print!("{}", report.render());
            if !report.all_passed() {
                bail!("oracle mismatches found");
            }
        }
        Command::Generate { customers, seed, clustered, out } => {
            let mut spec = SyntheticSpec::with_customers(customers, seed);
            if clustered {
                spec.layout = dri_core::synthetic::Layout::Clustered;
            }
            let inst = spec.generate()?;
            write_or_print(out.as_deref(), &write_instance(&inst))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
