//! Front end for the `sazf` binary: scenario files, CSV and summary output,
//! run manifests and the invariant suite.

pub mod config;
pub mod manifest;
pub mod output;
pub mod verify;

pub use config::{parse_scenario, parse_scenario_str, scenario_to_toml, ConfigError};
pub use manifest::RunManifest;
pub use output::{csv_string, emit_csv, emit_summary};
