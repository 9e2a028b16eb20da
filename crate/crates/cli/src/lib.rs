//! Command implementations behind the `vanet-sim` binary.
//!
//! Every command loads and validates its configuration first, computes all
//! outputs in memory and only then touches the output location, so a failed
//! invocation leaves nothing behind.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use vanet_core::engine::{run, sweep, theory_tables, MobilitySource, ScenarioConfig};
use vanet_core::mobility::{parse_fcd, write_trace};
use vanet_core::report;
use vanet_core::theory::{first_passage_pmf, predict_only_cov, qq_points};
use vanet_core::SimError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vanet-sim", version, about = "Slotted VANET beaconing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one seed; writes slots.csv, summary.json and intertx.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replaces the first configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Collision- and deferral-free channel.
        #[arg(long)]
        ideal: bool,
    },
    /// Average every sweep point over the seeds; writes sweep.csv and
    /// sweep_summary.json.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated seeds replacing the configured ones.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Adds the ideal-bound row.
        #[arg(long)]
        ideal: bool,
    },
    /// First-passage transmission pmf per threshold (pmf.csv) and, given an
    /// inter-transmission log, Q-Q pairs (qq.csv).
    Theory {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// intertx.csv written by `run`.
        #[arg(long)]
        empirical: Option<PathBuf>,
    },
    /// Converts an FCD XML export into the plain-text trace format.
    ConvertTrace {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Resampling step in seconds.
        #[arg(long, default_value_t = 0.1)]
        slot: f64,
    },
}

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn runtime(e: SimError) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Parses arguments, runs the command, reports failures on stderr and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, out, seed, ideal } => run_command(&config, &out, seed, ideal),
        Command::Sweep { config, out, seeds, ideal } => sweep_command(&config, &out, seeds, ideal),
        Command::Theory { config, out, empirical } => theory_command(&config, &out, empirical),
        Command::ConvertTrace { input, output, slot } => convert_command(&input, &output, slot),
    }
}

/// Reads and validates a scenario; relative paths inside it are taken
/// relative to the file's directory.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ScenarioConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    cfg.resolve_paths(base);
    if let MobilitySource::Fcd { path } | MobilitySource::Trace { path } = &cfg.mobility {
        if !path.is_file() {
            return Err(CliError::Config(format!("mobility trace not found: {}", path.display())));
        }
    }
    Ok(cfg)
}

fn write_outputs(dir: &Path, files: &[(&str, String)]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

pub fn run_command(config: &Path, out: &Path, seed: Option<u64>, ideal: bool) -> Result<(), CliError> {
    let mut cfg = load_config(config)?;
    cfg.channel.ideal |= ideal;
    let seed = seed.unwrap_or(cfg.seeds[0]);
    let result = run(&cfg, seed).map_err(runtime)?;
    let files = [
        ("slots.csv", report::slots_csv(&result.records)),
        ("summary.json", report::summary_json(&result.summary, &result.broadcast)),
        ("intertx.csv", report::intertx_csv(&result.tx_log, cfg.slot_s)),
    ];
    write_outputs(out, &files)?;
    let s = &result.summary;
    println!(
        "{} {} seed {}: mean error {} m, effective inter-tx {} s",
        s.policy,
        report::fmt_num(s.parameter),
        s.seed,
        report::fmt_num(s.mean_error_m),
        report::fmt_num(s.eff_intertx_s)
    );
    Ok(())
}

pub fn sweep_command(config: &Path, out: &Path, seeds: Option<Vec<u64>>, ideal: bool) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let seeds = seeds.unwrap_or_else(|| cfg.seeds.clone());
    if seeds.is_empty() {
        return Err(CliError::Config("at least one seed is required".into()));
    }
    let points = cfg.sweep.points();
    let table = sweep(&cfg, &points, &seeds, cfg.sweep.ideal || ideal).map_err(runtime)?;
    write_outputs(
        out,
        &[
            ("sweep.csv", report::sweep_csv(&table)),
            ("sweep_summary.json", report::sweep_summary_json(&table)),
        ],
    )?;
    for (policy, row) in &table.argmin {
        println!(
            "arg-min {policy}: parameter {} -> mean error {} m at {} s",
            report::fmt_num(row.parameter),
            report::fmt_num(row.mean_error_m),
            report::fmt_num(row.eff_intertx_s)
        );
    }
    Ok(())
}

pub fn theory_command(config: &Path, out: &Path, empirical: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let empirical = empirical.or_else(|| cfg.theory.empirical_log.clone());
    let gaps = match &empirical {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let gaps = report::parse_intertx_csv(&text, cfg.slot_s)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            Some(gaps)
        }
        None => None,
    };
    let initial = cfg.theory.initial();
    let tables = theory_tables(&cfg, &initial).map_err(runtime)?;
    let mut files = vec![("pmf.csv", report::pmf_csv(&tables))];
    if let Some(gaps) = gaps {
        let e = cfg
            .theory
            .qq_e_thr_m
            .or_else(|| cfg.theory.e_thr_m.first().copied())
            .ok_or_else(|| CliError::Config("theory needs a threshold for the Q-Q comparison".into()))?;
        // The empirical gaps can exceed any horizon, so extend it to cover them.
        let horizon = cfg
            .theory
            .steps
            .unwrap_or(cfg.policy_config().max_period_slots() as usize)
            .max(gaps.iter().copied().max().unwrap_or(0) as usize)
            .max(1);
        let seq = predict_only_cov(&initial, horizon, &cfg.ctra_config(), &cfg.ukf).map_err(runtime)?;
        let pmf = first_passage_pmf(&seq, e).map_err(runtime)?;
        let points = qq_points(&pmf, &gaps, cfg.slot_s).map_err(runtime)?;
        files.push(("qq.csv", report::qq_csv(&points)));
    }
    write_outputs(out, &files)
}

pub fn convert_command(input: &Path, output: &Path, slot: f64) -> Result<(), CliError> {
    if !(slot > 0.0 && slot.is_finite()) {
        return Err(CliError::Config("--slot must be positive".into()));
    }
    let text = fs::read_to_string(input).map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
    let fcd = parse_fcd(&text, slot).map_err(|e| CliError::Runtime(format!("{}: {e}", input.display())))?;
    let body = write_trace(&fcd.trajectories);
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(output, body).map_err(|e| CliError::Runtime(format!("{}: {e}", output.display())))?;
    println!("{} vehicles", fcd.trajectories.len());
    Ok(())
}
