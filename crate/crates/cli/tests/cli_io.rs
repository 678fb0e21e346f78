use std::collections::BTreeMap;
use std::process::Command;
use std::time::Duration;

use sazf_cli::output::{csv_string, CSV_HEADER};
use sazf_cli::{emit_csv, emit_summary, parse_scenario, parse_scenario_str, scenario_to_toml, ConfigError};
use sazf_core::experiments::{efficiency_sweep, relay_sweep, theta_sweep, user_sweep, RATE_CONVENTION};
use sazf_core::{
    sweep, NetworkConfig, PointResult, PowerPolicy, Scenario, SeriesKind, SeriesStats, SweepAxis, SweepResult,
};

fn quick(mut s: Scenario) -> Scenario {
    s.trials = 4;
    s
}

fn fake_result(mc_mean: f64, closed: f64) -> (Scenario, SweepResult) {
    let base = NetworkConfig::reference(3, 200, 5.0);
    let scenario = Scenario::single_point(base.clone());
    let series: BTreeMap<_, _> = [
        (
            SeriesKind::MonteCarloSazf,
            SeriesStats {
                mean: mc_mean,
                stderr: 0.01,
                trials: 10,
            },
        ),
        (SeriesKind::ClosedFormSazf, SeriesStats::exact(closed)),
    ]
    .into();
    let point = PointResult {
        axis_value: 5.0,
        policy: PowerPolicy::Fixed,
        config: base.clone(),
        series,
        closed_form: closed,
        cutset_high_snr: closed + 0.8,
        gap_per_user: 0.27,
        energy_efficiency: 0.3,
    };
    let result = SweepResult {
        axis: SweepAxis::ThetaBr,
        values: vec![5.0],
        points: vec![point],
        master_seed: 1,
        base,
        wall_clock: Duration::ZERO,
        rate_convention: RATE_CONVENTION,
    };
    (scenario, result)
}

#[test]
fn single_series_single_point_is_two_lines() {
    let mut s = quick(Scenario::single_point(NetworkConfig::reference(3, 32, 3.0)));
    s.series = [SeriesKind::ClosedFormSazf].into();
    let csv = csv_string(&sweep(&s).unwrap());
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], CSV_HEADER);
    assert!(lines[1].starts_with("3,closed_form_sazf,fixed,"), "{}", lines[1]);
}

#[test]
fn csv_is_byte_deterministic_and_ordered() {
    let mut s = quick(theta_sweep());
    s.base.relay_antennas = 40;
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    emit_csv(&sweep(&s).unwrap(), &a).unwrap();
    emit_csv(&sweep(&s).unwrap(), &b).unwrap();
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());

    let text = String::from_utf8(bytes).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4 * s.series.len());
    let keys: Vec<(f64, &str)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[1])).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(y.1)));
    assert_eq!(keys, sorted);
    assert!(text.is_ascii() && !text.contains(' '));
}

#[test]
fn multiple_policies_sort_by_name_within_a_series() {
    let mut s = quick(user_sweep());
    s.values = vec![10.0];
    s.series = [SeriesKind::ClosedFormSazf].into();
    s.policies = vec![PowerPolicy::Fixed, PowerPolicy::CaseII, PowerPolicy::CaseI];
    let csv = csv_string(&sweep(&s).unwrap());
    let policies: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(policies, ["case1", "case2", "fixed"]);
}

#[test]
fn summary_shows_reference_gap() {
    let mut s = theta_sweep();
    s.series = [SeriesKind::ClosedFormSazf, SeriesKind::CutsetHighSnr].into();
    let summary = emit_summary(&sweep(&s).unwrap(), &s);
    let line = summary.lines().find(|l| l.trim_start().starts_with("5 ")).unwrap();
    assert!(line.contains("0.2703"), "{line}");
    assert!(!line.contains("!!"));
}

#[test]
fn summary_for_empty_series_is_header_only() {
    let mut s = Scenario::single_point(NetworkConfig::reference(3, 32, 3.0));
    s.series.clear();
    let summary = emit_summary(&sweep(&s).unwrap(), &s);
    assert_eq!(summary.lines().count(), 1);
}

#[test]
fn summary_flags_large_monte_carlo_deviation() {
    let (s, r) = fake_result(42.4, 40.0);
    assert!(emit_summary(&r, &s).lines().nth(1).unwrap().contains("!!"));
    let (s, r) = fake_result(41.6, 40.0);
    assert!(!emit_summary(&r, &s).contains("!!"));
}

#[test]
fn reference_sweeps_round_trip() {
    for s in [theta_sweep(), relay_sweep(), user_sweep(), efficiency_sweep()] {
        let text = scenario_to_toml(&s);
        assert_eq!(parse_scenario_str(&text).unwrap(), s, "{text}");
    }
}

#[test]
fn parse_from_disk_and_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(&path, "users = 4\npolicy = \"case1\"\n").unwrap();
    let s = parse_scenario(&path).unwrap();
    assert_eq!((s.base.users, s.policies.clone()), (4, vec![PowerPolicy::CaseI]));
    assert!(matches!(
        parse_scenario(&dir.path().join("absent.toml")),
        Err(ConfigError::Io { .. })
    ));
}

fn sazf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sazf"))
}

#[test]
fn run_writes_csv_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("point.toml");
    std::fs::write(&config, "relay_antennas = 32\ntheta_br = 3\n").unwrap();
    let out = dir.path().join("point.csv");
    let status = sazf()
        .args(["run", "--trials", "3", "--seed", "9", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));

    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1 + SeriesKind::ALL.len());
    let manifest = std::fs::read_to_string(dir.path().join("point.manifest.toml")).unwrap();
    let parsed: toml::Table = manifest.parse().unwrap();
    assert_eq!(parsed["master_seed"].as_str(), Some("9"));
    let outputs: Vec<&str> = parsed["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(outputs.contains(&out.to_str().unwrap()));
    assert!(dir.path().join("point.summary.txt").exists());
    let echoed = parse_scenario_str(parsed["scenario"].as_str().unwrap()).unwrap();
    assert_eq!((echoed.master_seed, echoed.trials), (9, 3));
}

#[test]
fn figures_emit_parseable_configs() {
    let dir = tempfile::tempdir().unwrap();
    let out = sazf().arg("figures").arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    for (name, expected) in [
        ("theta_sweep", theta_sweep()),
        ("relay_sweep", relay_sweep()),
        ("user_sweep", user_sweep()),
        ("efficiency_sweep", efficiency_sweep()),
    ] {
        let s = parse_scenario(&dir.path().join(format!("{name}.toml"))).unwrap();
        assert_eq!(s, expected);
    }
    assert!(dir.path().join("figures.manifest.toml").exists());
}

#[test]
fn verify_passes_and_sweep_requires_config() {
    let out = sazf().args(["verify", "--trials", "12"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 4, "{text}");

    let out = sazf().arg("sweep").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "users = 3\ntheta_br = \"wide\"\n").unwrap();
    let out = sazf().arg("run").arg("--config").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2") && err.contains("theta_br"), "{err}");
}
