//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use panelinfer::inference::GainMode;
use panelinfer::metrics::ScenarioReport;
use serde::Serialize;

use crate::config::{load_config, ConfigError, ScenarioConfig};
use crate::dataset::{ingest_mpc_csv, save_mpc_csv, DatasetError};
use crate::matching::{match_shared_scatterers, pairing_fraction};
use crate::report::{emit_report, read_report_csv, write_comparison, write_summary_json, ReportError};
use crate::run::{compare_free_space, run_scenario, synth_dataset, RunError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "panelinfer", version, about = "Cross-panel channel inference experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic MPC dataset from the configured scene.
    Synth(Common),
    /// Run one scenario and write its report.
    Infer(Common),
    /// Run the scenario once per Panel-2 height in `[sweep] d2`.
    Sweep(Common),
    /// Validate an MPC CSV and print its counts.
    Ingest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Re-aggregate an existing report.csv.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<GainMode>,
}

fn parse_mode(s: &str) -> Result<GainMode, String> {
    s.parse()
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Run(RunError),
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => CliError::Config(c),
            RunError::Dataset(d) => CliError::Dataset(d),
            other => CliError::Run(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        }
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Synth(c) => {
            let cfg = c.config()?;
            let ds = synth_dataset(&cfg)?;
            let dir = &cfg.output.dir;
            mkdir(dir)?;
            let path = dir.join("mpc.csv");
            save_mpc_csv(&ds, &path)?;
            println!("wrote {} rows for {} UEs to {}", ds.len(), ds.ue_count(), path.display());
        }
        Command::Infer(c) => {
            let cfg = c.config()?;
            let report = run_scenario(&cfg)?;
            emit_report(&report, &cfg.output.dir)?;
            print_summary(&report)?;
        }
        Command::Sweep(c) => {
            let cfg = c.config()?;
            let mut all = Vec::new();
            for &d2 in &cfg.sweep.d2 {
                let mut point = cfg.clone();
                point.layout.d2 = d2;
                point.validate()?;
                let dir = cfg.output.dir.join(format!("d2_{d2}"));
                let report = run_scenario(&point)?;
                emit_report(&report, &dir)?;
                if cfg.scenario.is_free_space() && cfg.dataset.is_none() {
                    write_comparison(&compare_free_space(&point)?, &dir.join("comparison.csv"))?;
                }
                all.push(SweepEntry {
                    d2,
                    summary: report.summary(),
                });
            }
            mkdir(&cfg.output.dir)?;
            let path = cfg.output.dir.join("sweep_summary.json");
            let text = serde_json::to_string_pretty(&all).map_err(ReportError::from)?;
            std::fs::write(&path, text + "\n").map_err(|source| ReportError::Write { path, source })?;
            println!("swept {} heights into {}", all.len(), cfg.output.dir.display());
        }
        Command::Ingest { common, input } => {
            let cfg = common.config()?;
            let ds = ingest_mpc_csv(&input)?;
            let matches = match_shared_scatterers(&ds, cfg.scatterers.epsilon);
            let summary = IngestSummary {
                rows: ds.len(),
                ues: ds.ue_count(),
                panel1_paths: ds.rows.iter().filter(|r| r.panel_id == 1).count(),
                panel2_paths: ds.rows.iter().filter(|r| r.panel_id == 2).count(),
                epsilon: cfg.scatterers.epsilon,
                pairs: matches.iter().map(|m| m.pairs.len()).sum(),
                pairing_fraction: pairing_fraction(&matches),
            };
            let text = serde_json::to_string_pretty(&summary).map_err(ReportError::from)?;
            println!("{text}");
            if let Some(dir) = &common.out {
                mkdir(dir)?;
                let path = dir.join("ingest.json");
                std::fs::write(&path, text + "\n").map_err(|source| ReportError::Write { path, source })?;
            }
        }
        Command::Report { common, input } => {
            let cfg = common.config()?;
            let records = read_report_csv(&input)?;
            let scenario = records.first().map_or(cfg.scenario, |r| r.scenario);
            let report = ScenarioReport::new(scenario, records);
            let dir = match &common.out {
                Some(d) => d.clone(),
                None => input.parent().unwrap_or(Path::new(".")).to_path_buf(),
            };
            mkdir(&dir)?;
            write_summary_json(&report, &dir.join("summary.json"))?;
            print_summary(&report)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepEntry {
    d2: f64,
    summary: panelinfer::metrics::ReportSummary,
}

#[derive(Serialize)]
struct IngestSummary {
    rows: usize,
    ues: usize,
    panel1_paths: usize,
    panel2_paths: usize,
    epsilon: f64,
    pairs: usize,
    pairing_fraction: Option<f64>,
}

fn mkdir(dir: &Path) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

fn print_summary(report: &ScenarioReport) -> Result<(), ReportError> {
    println!("{}", serde_json::to_string_pretty(&report.summary())?);
    Ok(())
}
