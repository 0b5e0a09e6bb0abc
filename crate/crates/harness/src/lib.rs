//! Scenario runner for two-panel channel inference: configuration, MPC
//! dataset ingestion, cross-panel path matching, per-UE pipelines, report
//! files and the `panelinfer` CLI.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod matching;
pub mod report;
pub mod run;

pub use config::{load_config, parse_config, ScenarioConfig};
pub use dataset::{ingest_mpc_csv, MpcDataset, MpcRow};
pub use matching::match_shared_scatterers;
pub use report::emit_report;
pub use run::run_scenario;
