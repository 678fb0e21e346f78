use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Record of one invocation, written next to the files it produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub master_seed: u64,
    pub started: String,
    pub finished: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<PathBuf>,
    /// Scenario file text that reproduces the run.
    pub scenario: String,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: u64, scenario: String, started: DateTime<Utc>) -> Self {
        let now = Utc::now();
        Self {
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            master_seed,
            started: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished: now.to_rfc3339_opts(SecondsFormat::Millis, true),
            wall_clock_seconds: (now - started).num_milliseconds() as f64 / 1e3,
            outputs: Vec::new(),
            scenario,
        }
    }

    pub fn to_toml(&self) -> String {
        // Seeds above i64::MAX do not fit a TOML integer.
        #[derive(Serialize)]
        struct Repr<'a> {
            tool_version: &'a str,
            command: &'a str,
            master_seed: String,
            started: &'a str,
            finished: &'a str,
            wall_clock_seconds: f64,
            outputs: Vec<String>,
            scenario: &'a str,
        }
        toml::to_string(&Repr {
            tool_version: &self.tool_version,
            command: &self.command,
            master_seed: self.master_seed.to_string(),
            started: &self.started,
            finished: &self.finished,
            wall_clock_seconds: self.wall_clock_seconds,
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
            scenario: &self.scenario,
        })
        .expect("manifest fields are representable in TOML")
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_toml())
    }
}

/// `out.csv` -> `out.manifest.toml`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    output.with_extension("manifest.toml")
}
