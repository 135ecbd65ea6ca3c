use bachflow_core::cli_reports::{
    configure_threads, exit_code, list_suites, load_config, run_suite, validate_config, ExperimentConfig, SuiteReport,
    SUITES,
};
use bachflow_core::error::{Error, Result};
use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

/// Run a named experiment suite and write `report.json` plus CSV tables.
///
/// Pseudo-suites: `list` prints the registered suites, `validate` checks the
/// config given with `--config`.
///
/// Exit codes: 0 all checks pass, 1 a check failed or a numerical module
/// failed, 2 configuration or output error, 3 numerical blow-up.
/// `BACHFLOW_THREADS` caps the worker threads.
#[derive(Parser, Debug)]
#[command(name = "bachflow", version)]
struct Cli {
    /// Suite name (overrides the `suite` key of the config).
    suite: String,
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's `output_dir`, else `out/<suite>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// First seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of seeds.
    #[arg(long)]
    seeds: Option<usize>,
    /// Dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Grid points per active axis, comma separated.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::for_suite(&cli.suite),
    };
    cfg.suite = cli.suite.clone();
    if let Some(s) = cli.seed {
        cfg.seeds.start = s;
    }
    if cli.seeds.is_some() {
        cfg.seeds.count = cli.seeds;
    }
    if let Some(n) = cli.n {
        cfg.model.n = Some(n);
        cfg.model.n_values = None;
    }
    if cli.grid.is_some() {
        cfg.model.grid = cli.grid.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<SuiteReport> {
    let cfg = build_config(cli)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.suite));
    let run = run_suite(&cfg)?;
    run.write(&out)?;
    for c in &run.report.checks {
        println!(
            "{} {:<56} measured={:<12.6e} bound={:.6e} tol={:.1e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.id,
            c.measured,
            c.bound,
            c.tolerance
        );
    }
    let failed = run.report.failures().len();
    println!(
        "{}: {} checks, {} failed; report in {}",
        run.report.suite,
        run.report.checks.len(),
        failed,
        out.display()
    );
    Ok(run.report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match cli.suite.as_str() {
        "list" => {
            for s in SUITES {
                println!("{:<16} {}", s.name, s.description);
            }
            ExitCode::SUCCESS
        }
        "validate" => {
            let Some(path) = &cli.config else {
                eprintln!("validate needs --config <path>");
                return ExitCode::from(2);
            };
            match validate_config(path) {
                Ok(d) if d.is_empty() => {
                    println!("{}: valid", path.display());
                    ExitCode::SUCCESS
                }
                Ok(d) => {
                    for line in d {
                        eprintln!("{}: {line}", path.display());
                    }
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
            }
        }
        name => {
            if cli.config.is_none() && !list_suites().contains(&name) {
                let e = Error::Config(format!("unknown suite `{name}` (try `bachflow list`)"));
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            let result = run(&cli);
            if let Err(e) = &result {
                eprintln!("error: {e}");
            }
            ExitCode::from(exit_code(&result) as u8)
        }
    }
}
