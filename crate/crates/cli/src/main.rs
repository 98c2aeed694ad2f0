use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use abcscore_cli::config::{parse_config, RunConfig};
use abcscore_cli::output;
use abcscore_cli::pipeline::execute;
use abcscore_cli::CliError;
use abcscore_core::diagnostics::{run_study, StudyConfig};
use abcscore_core::models::SpatialDataset;
use abcscore_core::parallel::{with_workers, WORKERS_ENV};
use abcscore_core::RngStream;

#[derive(Parser)]
#[command(name = "abcscore", version, about = "ABC with rescaled composite score summaries")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one model/method combination and write its output files.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed of the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the config's output_dir, else ./abcscore-out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replicated study: posterior means of several methods over many datasets.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a stations/maxima CSV pair and report its shape.
    Ingest {
        #[arg(long)]
        stations: PathBuf,
        #[arg(long)]
        maxima: PathBuf,
        /// Write normalized copies of both files here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(cli: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    cli.or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("abcscore-out"))
}

fn run(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Result<(), CliError> {
    let mut cfg = parse_config(&config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out_dir(out, &cfg);
    let start = Instant::now();
    let (session, mut runs) = execute(&cfg, &[cfg.method], RngStream::new(cfg.seed, 0))?;
    let run = runs.remove(0)?;
    output::write_run(&dir, &cfg, &session, &run, start.elapsed())?;
    println!("{}", dir.join(output::SUMMARY_FILE).display());
    Ok(())
}

fn study(config: PathBuf, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = parse_config(&config)?;
    let dir = out_dir(out, &cfg);
    let methods = cfg.study_methods();
    let study_cfg = StudyConfig {
        n_trials: cfg.study_trials(),
        seed: cfg.seed,
        methods: methods.iter().map(|m| m.as_str().to_string()).collect(),
        param_names: Vec::new(),
        config_snapshot: cfg.snapshot(),
    };
    let names = std::sync::OnceLock::new();
    let mut result = run_study(&study_cfg, |_, stream| {
        let (session, runs) = execute(&cfg, &methods, stream)?;
        let _ = names.set(session.param_names.clone());
        Ok(runs.into_iter().map(|r| r.map(|r| r.sample.mean())).collect())
    })?;
    result.config.param_names = names.into_inner().unwrap_or_default();
    std::fs::create_dir_all(&dir)?;
    result.write_csv(std::fs::File::create(dir.join(output::STUDY_FILE))?)?;
    std::fs::write(dir.join(output::CONFIG_FILE), cfg.snapshot() + "\n")?;
    println!("{}", dir.join(output::STUDY_FILE).display());
    Ok(())
}

fn ingest(stations: PathBuf, maxima: PathBuf, out: Option<PathBuf>) -> Result<(), CliError> {
    let ds = SpatialDataset::load(&stations, &maxima)?;
    let (n, q) = ds.shape();
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        ds.save(&dir.join("stations.csv"), &dir.join("maxima.csv"))?;
    }
    println!("{}", serde_json::json!({ "n_years": n, "n_stations": q }));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let workers = cli.workers.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    let result = with_workers(workers, || match cli.command {
        Command::Run { config, seed, out } => run(config, seed, out),
        Command::Study { config, out } => study(config, out),
        Command::Ingest { stations, maxima, out } => ingest(stations, maxima, out),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
