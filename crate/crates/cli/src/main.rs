use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use sazf_cli::manifest::manifest_path_for;
use sazf_cli::{emit_csv, emit_summary, parse_scenario, scenario_to_toml, verify, RunManifest};
use sazf_core::experiments::{efficiency_sweep, relay_sweep, theta_sweep, user_sweep, DEFAULT_SEED};
use sazf_core::{sweep, Scenario, SweepAxis};

#[derive(Parser)]
#[command(
    name = "sazf",
    version,
    about = "Two-way relay simulator with signal-space alignment and zero-forcing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the base point of a scenario.
    Run(Common),
    /// Evaluate every point of a scenario sweep.
    Sweep(Common),
    /// Check the protocol identities, power constraints and the Wishart identity.
    Verify(Common),
    /// Write the four reference sweep scenarios as config files.
    Figures(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML). Omitted keys take the reference values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed. Defaults to a fixed value, so repeated runs agree.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per point (realizations for `verify`).
    #[arg(long)]
    trials: Option<usize>,
    /// Output file (`run`, `sweep`, `verify`) or directory (`figures`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(c) => evaluate(c, true),
        Command::Sweep(c) => evaluate(c, false),
        Command::Verify(c) => run_verify(c),
        Command::Figures(c) => write_figures(c),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(common: &Common) -> Result<Scenario> {
    let mut scenario = match &common.config {
        Some(path) => parse_scenario(path)?,
        None => sazf_cli::parse_scenario_str("")?,
    };
    if let Some(seed) = common.seed {
        scenario.master_seed = seed;
    }
    if let Some(trials) = common.trials {
        scenario.trials = trials;
    }
    Ok(scenario)
}

fn evaluate(common: Common, single_point: bool) -> Result<bool> {
    let started = Utc::now();
    let mut scenario = load(&common)?;
    if single_point {
        scenario.axis = SweepAxis::ThetaBr;
        scenario.values = vec![scenario.base.theta_br];
    } else if common.config.is_none() {
        bail!("sweep needs --config; `sazf figures` writes ready-made sweep configs");
    }
    let default_out = if single_point { "sazf_run.csv" } else { "sazf_sweep.csv" };
    let csv = common.out.unwrap_or_else(|| PathBuf::from(default_out));

    let result = sweep(&scenario)?;
    let summary = emit_summary(&result, &scenario);
    print!("{summary}");

    let summary_path = csv.with_extension("summary.txt");
    emit_csv(&result, &csv).with_context(|| format!("writing {}", csv.display()))?;
    write(&summary_path, &summary)?;

    let command = if single_point { "run" } else { "sweep" };
    let mut manifest = RunManifest::new(command, scenario.master_seed, scenario_to_toml(&scenario), started);
    manifest.outputs = vec![csv.clone(), summary_path];
    write(&manifest_path_for(&csv), &manifest.to_toml())?;
    eprintln!(
        "{} points in {:.1}s, results in {}",
        result.points.len(),
        result.wall_clock.as_secs_f64(),
        csv.display()
    );
    Ok(true)
}

fn run_verify(common: Common) -> Result<bool> {
    if common.config.is_some() {
        bail!("verify uses a fixed reference setting and takes no --config");
    }
    let seed = common.seed.unwrap_or(DEFAULT_SEED);
    let realizations = common.trials.unwrap_or(100);
    let checks = verify::run_checks(seed, realizations)?;
    let report: String = checks.iter().map(|c| format!("{c}\n")).collect();
    print!("{report}");
    if let Some(out) = common.out {
        let started = Utc::now();
        write(&out, &report)?;
        let mut manifest = RunManifest::new("verify", seed, String::new(), started);
        manifest.outputs = vec![out.clone()];
        write(&manifest_path_for(&out), &manifest.to_toml())?;
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn write_figures(common: Common) -> Result<bool> {
    let started = Utc::now();
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("figures"));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let seed = common.seed.unwrap_or(DEFAULT_SEED);
    let mut outputs = Vec::new();
    let mut echo = String::new();
    for (name, mut scenario) in [
        ("theta_sweep", theta_sweep()),
        ("relay_sweep", relay_sweep()),
        ("user_sweep", user_sweep()),
        ("efficiency_sweep", efficiency_sweep()),
    ] {
        scenario.master_seed = seed;
        if let Some(trials) = common.trials {
            scenario.trials = trials;
        }
        let path = dir.join(format!("{name}.toml"));
        let text = scenario_to_toml(&scenario);
        write(&path, &text)?;
        echo.push_str(&format!("# {name}.toml\n{text}\n"));
        println!("{}", path.display());
        outputs.push(path);
    }
    let mut manifest = RunManifest::new("figures", seed, echo, started);
    manifest.outputs = outputs;
    write(&dir.join("figures.manifest.toml"), &manifest.to_toml())?;
    Ok(true)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
