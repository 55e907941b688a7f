use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rsmarket::experiment::output::write_summary;
use rsmarket::experiment::{read_days, run_scenario_into, summarize, CsvSink, ScenarioConfig, Summary, WorldState};
use rsmarket::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Two-platform ride-sourcing market simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its CSV outputs.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: out/<scenario name>]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the horizon.
        #[arg(long)]
        days: Option<usize>,
    },
    /// Simulate every scenario file in a directory.
    Sweep {
        dir: PathBuf,
        /// Parent output directory; each scenario gets a subdirectory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Steady-state KPIs of an existing days.csv.
    Summarize {
        days: PathBuf,
        #[arg(long, default_value_t = 50)]
        window: usize,
        /// Write the table to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file, its network and its demand.
    Validate { scenario: PathBuf },
}

fn print_summary(summary: &Summary) {
    println!("days {}..={}", summary.first_day, summary.last_day);
    println!("{:<26}{:>14}{:>14}{:>14}", "metric", "platform_1", "platform_2", "market");
    let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
    for row in &summary.rows {
        print!("{:<26}", row.metric);
        for v in &row.platforms {
            print!("{:>14}", cell(*v));
        }
        println!("{:>14}", cell(row.market));
    }
}

fn run_one(cfg: &ScenarioConfig, out: &Path) -> Result<Option<Summary>> {
    let mut sink = CsvSink::create(out, cfg.summary_window_days)?;
    run_scenario_into(cfg, &mut sink)?;
    sink.finish(cfg.shift_hours)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { scenario, seed, out, days } => {
            let mut cfg = ScenarioConfig::load(&scenario)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = days {
                cfg.horizon_days = d;
            }
            let out = out.unwrap_or_else(|| Path::new("out").join(&cfg.name));
            if let Some(summary) = run_one(&cfg, &out)? {
                print_summary(&summary);
            }
            eprintln!("wrote {}", out.display());
        }
        Command::Sweep { dir, out, seed } => {
            let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(|e| Error::Io { path: dir.clone(), source: e })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "toml"))
                .collect();
            files.sort();
            if files.is_empty() {
                return Err(Error::Config(format!("no .toml scenarios in {}", dir.display())));
            }
            for f in files {
                let mut cfg = ScenarioConfig::load(&f)?;
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                let stem = f.file_stem().expect("file name").to_os_string();
                let target = out.join(stem);
                println!("== {} -> {}", cfg.name, target.display());
                if let Some(summary) = run_one(&cfg, &target)? {
                    print_summary(&summary);
                }
            }
        }
        Command::Summarize { days, window, out } => {
            let summary = summarize(&read_days(&days)?, window)?;
            match out {
                Some(path) => write_summary(&path, &summary)?,
                None => print_summary(&summary),
            }
        }
        Command::Validate { scenario } => {
            let cfg = ScenarioConfig::load(&scenario)?;
            let world = WorldState::new(&cfg)?;
            println!(
                "{}: ok ({} nodes, {} travelers, {} drivers, {} days)",
                scenario.display(),
                world.network().node_count(),
                world.travelers().len(),
                world.drivers().len(),
                cfg.horizon_days
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
