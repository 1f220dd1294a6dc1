//! `amphisim` command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration or model
//! error, 3 numerical divergence, 4 I/O error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amphisim_core::cpg::{Behavior, REFERENCE_AMPLITUDE, REFERENCE_OMEGA};
use amphisim_core::sim::sweep::{parse_grid, run_sweep, write_summary};
use amphisim_core::sim::{run_scenario, ScenarioConfig, Summary};
use amphisim_core::validation::run_suite;
use amphisim_core::SimError;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "amphisim",
    version,
    about = "Hybrid aerial-aquatic vehicle simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trajectory CSV.
    Run {
        config: PathBuf,
        /// Output CSV; defaults to `output.path` of the config, else stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Dotted-key override, e.g. `cpg.R=0.2`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run a scenario over a parameter grid.
    Sweep {
        config: PathBuf,
        /// Grid spec `key=v1,v2;key2=a,b`.
        #[arg(long)]
        grid: String,
        /// Directory for per-point CSVs and summary.csv; summary goes to
        /// stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the flapping behavior presets.
    Presets,
    /// Run the invariant suite.
    Validate {
        /// Scenario whose vehicle and coefficient tables are checked;
        /// built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn exit_code(e: &SimError) -> u8 {
    match e {
        SimError::Io { .. } => 4,
        SimError::NumericalDivergence { .. } => 3,
        _ => 2,
    }
}

fn load(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, SimError> {
    ScenarioConfig::load(path, overrides)
}

fn run(config: &Path, output: Option<PathBuf>, overrides: &[String]) -> Result<(), SimError> {
    let cfg = load(config, overrides)?;
    let record = run_scenario(&cfg)?;
    match output.or_else(|| cfg.output.path.clone()) {
        Some(path) => {
            record.write_csv_path(&path)?;
            let s = Summary::from_record(&record, cfg.output.metrics_start);
            log::info!(
                "{}: {} samples -> {}; mean surge {:.4} m/s, pitch p-p {:.4} rad",
                cfg.name,
                record.samples.len(),
                path.display(),
                s.mean_surge,
                s.pitch_peak_to_peak
            );
        }
        None => record.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}

fn sweep(
    config: &Path,
    grid: &str,
    output: Option<PathBuf>,
    jobs: usize,
    overrides: &[String],
) -> Result<(), SimError> {
    let text = std::fs::read_to_string(config).map_err(|e| SimError::Io {
        path: config.display().to_string(),
        message: e.to_string(),
    })?;
    let axes = parse_grid(grid)?;
    // fail fast on a broken base config rather than once per point
    let base_dir = config.parent().unwrap_or(Path::new("."));
    ScenarioConfig::from_toml_str(&text, overrides, Some(base_dir))?;
    let points = run_sweep(
        &text,
        Some(base_dir),
        overrides,
        &axes,
        jobs,
        output.as_deref(),
    )?;
    for p in &points {
        if let Err(e) = &p.outcome {
            log::warn!("point {} ({}) failed: {e}", p.index, p.overrides.join(" "));
        }
    }
    match output {
        Some(dir) => {
            let path = dir.join("summary.csv");
            let file = std::fs::File::create(&path).map_err(|e| SimError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            write_summary(&points, &axes, std::io::BufWriter::new(file))
        }
        None => write_summary(&points, &axes, std::io::stdout().lock()),
    }
}

fn presets() {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "default power: 2*pi*f = {REFERENCE_OMEGA} rad/s, R = {REFERENCE_AMPLITUDE} rad; m = cpg.magnitude"
    );
    for b in Behavior::ALL {
        let _ = writeln!(out, "{:<18} {}", b.name(), b.description());
    }
}

fn validate(config: Option<PathBuf>, overrides: &[String]) -> Result<bool, SimError> {
    let cfg = match config {
        Some(path) => load(&path, overrides)?,
        None => ScenarioConfig::from_toml_str("", overrides, None)?,
    };
    let results = run_suite(&cfg);
    let mut out = std::io::stdout().lock();
    for r in &results {
        let _ = writeln!(out, "{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let _ = writeln!(out, "{} properties, {failed} failed", results.len());
    Ok(failed == 0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            output,
            overrides,
        } => run(&config, output, &overrides).map(|_| true),
        Command::Sweep {
            config,
            grid,
            output,
            jobs,
            overrides,
        } => sweep(&config, &grid, output, jobs, &overrides).map(|_| true),
        Command::Presets => {
            presets();
            Ok(true)
        }
        Command::Validate { config, overrides } => validate(config, &overrides),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
