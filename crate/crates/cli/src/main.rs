use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fairo_core::harness::{compare, load_run_dir, run, sweep, write_metrics_table, ExperimentConfig, RunSeries};
use fairo_core::{Error, Method, Result};

#[derive(Parser)]
#[command(name = "fairo", version, about = "Seeded fairness-controller experiments")]
struct Cli {
    /// Root directory for outputs that are not given an explicit path.
    #[arg(long, global = true, env = "FAIRO_OUT_DIR", default_value = "runs")]
    out_root: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its trace, signals and metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write moving-average curves with this window.
        #[arg(long)]
        smooth: Option<usize>,
    },
    /// Compare finished run directories.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value_t = 3000)]
        window: usize,
        /// Write comparison.csv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every method over a list of seeds and aggregate the comparisons.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `a..b` (inclusive) or a comma-separated list.
        #[arg(long, default_value = "1..10")]
        seeds: String,
        /// Comma-separated methods; defaults to every method valid for the app.
        #[arg(long)]
        methods: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidArgument(format!("cannot parse seeds {spec:?}"));
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn parse_methods(spec: Option<&str>, cfg: &ExperimentConfig) -> Result<Vec<Method>> {
    let methods: Vec<Method> = match spec {
        Some(s) => s.split(',').map(|m| m.trim().parse()).collect::<Result<_>>()?,
        None => Method::ALL.into_iter().filter(|m| m.supports(cfg.app_type)).collect(),
    };
    if let Some(m) = methods.iter().find(|m| !m.supports(cfg.app_type)) {
        return Err(Error::Config(format!(
            "method {} is not available for {}",
            m.as_str(),
            cfg.app_type.as_str()
        )));
    }
    Ok(methods)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn cmd_run(root: &Path, config: &Path, seed: Option<u64>, out: Option<PathBuf>, smooth: Option<usize>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.validate()?;
    }
    let dir = out.unwrap_or_else(|| {
        root.join(format!("{}-{}-seed{}", cfg.app_type.as_str(), cfg.method.as_str(), cfg.seed))
    });
    let artifact = run(&cfg)?;
    artifact.write_dir(&dir, smooth)?;
    let rows = fairo_core::harness::run_metrics(&artifact.series(), cfg.window)?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "wrote {}", dir.display())?;
    write_metrics_table(&rows, &mut stdout)?;
    Ok(())
}

fn cmd_compare(runs: &[PathBuf], window: usize, out: Option<PathBuf>) -> Result<()> {
    let mut loaded: Vec<(String, RunSeries)> = Vec::with_capacity(runs.len());
    for dir in runs {
        let (cfg, series) = load_run_dir(dir)?;
        let mut label = cfg.method.as_str().to_string();
        if loaded.iter().any(|(l, _)| *l == label) {
            label = format!("{label}#{}", loaded.len());
        }
        loaded.push((label, series));
    }
    let cmp = compare(&loaded, window)?;
    if let Some(dir) = out {
        fs::create_dir_all(&dir)?;
        cmp.write_csv(create(&dir.join("comparison.csv"))?)?;
    }
    cmp.write_table(io::stdout().lock())?;
    Ok(())
}

fn cmd_sweep(root: &Path, config: &Path, seeds: &str, methods: Option<&str>, out: Option<PathBuf>) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let seeds = parse_seeds(seeds)?;
    let methods = parse_methods(methods, &cfg)?;
    let dir = out.unwrap_or_else(|| root.join(format!("sweep-{}", cfg.app_type.as_str())));
    let report = sweep(&cfg, &methods, &seeds, Some(&dir))?;
    for (seed, c) in report.seeds.iter().zip(&report.per_seed) {
        c.write_csv(create(&dir.join(format!("comparison-seed-{seed}.csv")))?)?;
    }
    report.write_aggregate_csv(create(&dir.join("aggregate.csv"))?)?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{} seeds x {} methods -> {}", seeds.len(), methods.len(), dir.display())?;
    writeln!(stdout, "{:<38} {:<18} {:>10} {:>10} {:>10}", "metric", "method", "mean", "min", "max")?;
    for r in report.aggregate.iter().filter(|r| r.scope == "group") {
        writeln!(
            stdout,
            "{:<38} {:<18} {:>10.4} {:>10.4} {:>10.4}",
            r.metric, r.label, r.mean, r.min, r.max
        )?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            smooth,
        } => cmd_run(&cli.out_root, &config, seed, out, smooth),
        Command::Compare { runs, window, out } => cmd_compare(&runs, window, out),
        Command::Sweep {
            config,
            seeds,
            methods,
            out,
        } => cmd_sweep(&cli.out_root, &config, &seeds, methods.as_deref(), out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
