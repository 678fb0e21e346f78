//! Scenario files.
//!
//! A scenario is a TOML document. Every key is optional; omitted keys take the
//! reference values (`E_B = 10 dBm`, `E_R = 20 dBm`, `E_U = 0 dBm`,
//! `σ² = −20 dBm`, `ℓ_B = 1`, `ℓ_U = 0.125`, `K = 3`, `N_R = 200`,
//! `θ_BR = 5`). Without a `[sweep]` table the file describes a single point.
//!
//! ```toml
//! users = 3
//! relay_antennas = 200
//! policy = ["fixed", "case1"]
//! trials = 200
//! seed = 42
//!
//! [sweep]
//! axis = "theta_br"
//! values = [2, 3, 4, 5]
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use sazf_core::experiments::DEFAULT_SEED;
use sazf_core::{dbm_to_mw, mw_to_dbm, NetworkConfig, NormalizationMode, PowerPolicy, Scenario, SeriesKind, SweepAxis};
use serde::{Deserialize, Serialize};

pub const DEFAULT_USERS: usize = 3;
pub const DEFAULT_RELAY_ANTENNAS: usize = 200;
pub const DEFAULT_THETA_BR: f64 = 5.0;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}{}: {message}", key.as_ref().map(|k| format!(", key `{k}`")).unwrap_or_default())]
    Parse {
        line: usize,
        key: Option<String>,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

// TOML integers are signed, so seeds above i64::MAX travel as strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum SeedValue {
    Int(i64),
    Text(String),
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    users: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relay_antennas: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_br: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    power_bs_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    power_rs_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    power_user_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pathloss_bs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pathloss_user: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    policy: Option<OneOrMany>,
    #[serde(skip_serializing_if = "Option::is_none")]
    normalization: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    series: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    finite_correction: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<SeedValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepTable>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepTable {
    axis: String,
    values: Vec<f64>,
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&text)
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario, ConfigError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    let scenario = build(file)?;
    scenario
        .validate()
        .map_err(|e| ConfigError::Validation(e.to_string()))?;
    Ok(scenario)
}

fn parse_error(text: &str, err: &toml::de::Error) -> ConfigError {
    let offset = err.span().map(|s| s.start).unwrap_or(0).min(text.len());
    let line = text[..offset].matches('\n').count() + 1;
    let key = text
        .lines()
        .nth(line - 1)
        .and_then(|l| l.split_once('='))
        .map(|(k, _)| k.trim().to_string())
        .filter(|k| !k.is_empty() && !k.starts_with('['));
    ConfigError::Parse {
        line,
        key,
        message: err.message().to_string(),
    }
}

fn invalid(msg: String) -> ConfigError {
    ConfigError::Validation(msg)
}

fn build(file: ScenarioFile) -> Result<Scenario, ConfigError> {
    let mut base = NetworkConfig::reference(
        file.users.unwrap_or(DEFAULT_USERS),
        file.relay_antennas.unwrap_or(DEFAULT_RELAY_ANTENNAS),
        file.theta_br.unwrap_or(DEFAULT_THETA_BR),
    );
    if let Some(v) = file.power_bs_dbm {
        base.bs_power = dbm_to_mw(v);
    }
    if let Some(v) = file.power_rs_dbm {
        base.relay_power = dbm_to_mw(v);
    }
    if let Some(v) = file.power_user_dbm {
        base.user_power = dbm_to_mw(v);
    }
    if let Some(v) = file.noise_dbm {
        base.noise = dbm_to_mw(v);
    }
    if let Some(v) = file.pathloss_bs {
        base.pathloss_bs = v;
    }
    if let Some(v) = file.pathloss_user {
        base.pathloss_user = v;
    }
    if let Some(name) = &file.normalization {
        base.normalization = NormalizationMode::from_name(name)
            .ok_or_else(|| invalid(format!("unknown normalization `{name}` (statistical, instantaneous)")))?;
    }

    let names = match file.policy {
        None => vec![PowerPolicy::Fixed.name().to_string()],
        Some(OneOrMany::One(p)) => vec![p],
        Some(OneOrMany::Many(ps)) => ps,
    };
    let mut policies = Vec::with_capacity(names.len());
    for name in &names {
        let p = PowerPolicy::from_name(name)
            .ok_or_else(|| invalid(format!("unknown policy `{name}` (fixed, case1, case2)")))?;
        if policies.contains(&p) {
            return Err(invalid(format!("policy `{name}` listed twice")));
        }
        policies.push(p);
    }
    base.power_policy = policies.first().copied().unwrap_or(PowerPolicy::Fixed);

    let mut scenario = Scenario::single_point(base);
    scenario.policies = policies;
    if let Some(sweep) = file.sweep {
        scenario.axis = SweepAxis::from_name(&sweep.axis).ok_or_else(|| {
            invalid(format!(
                "unknown sweep axis `{}` (theta_br, relay_antennas, users)",
                sweep.axis
            ))
        })?;
        scenario.values = sweep.values;
    }
    if let Some(series) = file.series {
        scenario.series = series
            .iter()
            .map(|s| SeriesKind::from_name(s).ok_or_else(|| invalid(format!("unknown series `{s}`"))))
            .collect::<Result<BTreeSet<_>, _>>()?;
    }
    if let Some(t) = file.trials {
        scenario.trials = t;
    }
    scenario.master_seed = match file.seed {
        None => DEFAULT_SEED,
        Some(SeedValue::Int(s)) => {
            u64::try_from(s).map_err(|_| invalid(format!("seed must be non-negative, got {s}")))?
        }
        Some(SeedValue::Text(s)) => s
            .parse()
            .map_err(|_| invalid(format!("seed `{s}` is not an unsigned 64-bit integer")))?,
    };
    scenario.finite_correction = file.finite_correction.unwrap_or(false);
    Ok(scenario)
}

/// Serializes `scenario` so that parsing the text yields an equal scenario.
///
/// The base policy is taken from the policy list and the condition threshold
/// is not represented, so both must hold their defaults for an exact round trip.
pub fn scenario_to_toml(scenario: &Scenario) -> String {
    let base = &scenario.base;
    let file = ScenarioFile {
        users: Some(base.users),
        relay_antennas: Some(base.relay_antennas),
        theta_br: Some(base.theta_br),
        power_bs_dbm: Some(exact_dbm(base.bs_power)),
        power_rs_dbm: Some(exact_dbm(base.relay_power)),
        power_user_dbm: Some(exact_dbm(base.user_power)),
        noise_dbm: Some(exact_dbm(base.noise)),
        pathloss_bs: Some(base.pathloss_bs),
        pathloss_user: Some(base.pathloss_user),
        policy: Some(OneOrMany::Many(
            scenario.policies.iter().map(|p| p.name().to_string()).collect(),
        )),
        normalization: Some(base.normalization.name().to_string()),
        series: Some(scenario.series.iter().map(|s| s.name().to_string()).collect()),
        finite_correction: Some(scenario.finite_correction),
        trials: Some(scenario.trials),
        seed: Some(match i64::try_from(scenario.master_seed) {
            Ok(s) => SeedValue::Int(s),
            Err(_) => SeedValue::Text(scenario.master_seed.to_string()),
        }),
        sweep: Some(SweepTable {
            axis: scenario.axis.name().to_string(),
            values: scenario.values.clone(),
        }),
    };
    toml::to_string(&file).expect("scenario fields are always representable in TOML")
}

/// A dBm value that converts back to exactly `mw`.
///
/// Every milliwatt value obtained from a dBm value has such a preimage; other
/// values may not, and then the nearest conversion is returned.
fn exact_dbm(mw: f64) -> f64 {
    let direct = mw_to_dbm(mw);
    // Prefer short decimal forms such as 10 or -20 when they are exact.
    let rounded = (direct * 1e9).round() / 1e9;
    if dbm_to_mw(rounded) == mw {
        return rounded;
    }
    // dbm_to_mw is monotone: bisect to the pair of adjacent floats around mw.
    let width = 1e-9 * direct.abs().max(1.0);
    let (mut lo, mut hi) = (direct - width, direct + width);
    if !(dbm_to_mw(lo) <= mw && dbm_to_mw(hi) >= mw) {
        return direct;
    }
    loop {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if dbm_to_mw(mid) < mw {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    [hi, lo, hi.next_up(), lo.next_down()]
        .into_iter()
        .find(|&d| dbm_to_mw(d) == mw)
        .unwrap_or(direct)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_point() {
        let s = parse_scenario_str("").unwrap();
        assert_eq!(s.base, NetworkConfig::reference(3, 200, 5.0));
        assert_eq!(s.values, vec![5.0]);
        assert_eq!(s.policies, vec![PowerPolicy::Fixed]);
        assert_eq!(s.master_seed, DEFAULT_SEED);
        assert_eq!(s.series, SeriesKind::ALL.into_iter().collect());
    }

    #[test]
    fn dbm_keys_convert_to_milliwatts() {
        let s = parse_scenario_str("power_bs_dbm = 10\nnoise_dbm = -30.0").unwrap();
        assert_eq!(s.base.bs_power, 10.0);
        assert!((s.base.noise - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn too_few_relay_antennas_is_a_validation_error() {
        let err = parse_scenario_str("users = 5\nrelay_antennas = 4").unwrap_err();
        assert!(
            matches!(err, ConfigError::Validation(ref m) if m.contains("relay antennas")),
            "{err}"
        );
    }

    #[test]
    fn theta_at_most_one_is_rejected() {
        let err = parse_scenario_str("theta_br = 1.0").unwrap_err();
        assert!(
            matches!(err, ConfigError::Validation(ref m) if m.contains("theta_br")),
            "{err}"
        );
    }

    #[test]
    fn parse_errors_carry_line_and_key() {
        match parse_scenario_str("users = 3\nrelay_antennas = \"many\"\n").unwrap_err() {
            ConfigError::Parse { line, key, .. } => {
                assert_eq!(line, 2);
                assert_eq!(key.as_deref(), Some("relay_antennas"));
            }
            other => panic!("expected parse error, got {other}"),
        }
        match parse_scenario_str("\n\nantennas = 3\n").unwrap_err() {
            ConfigError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("antennas"), "{message}");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn policy_accepts_string_or_list() {
        assert_eq!(
            parse_scenario_str("policy = \"case2\"").unwrap().policies,
            vec![PowerPolicy::CaseII]
        );
        let s = parse_scenario_str("policy = [\"case1\", \"fixed\"]").unwrap();
        assert_eq!(s.policies, vec![PowerPolicy::CaseI, PowerPolicy::Fixed]);
        assert!(parse_scenario_str("policy = [\"fixed\", \"fixed\"]").is_err());
        assert!(parse_scenario_str("policy = \"maximal\"").is_err());
    }

    #[test]
    fn sweep_table_sets_axis_and_values() {
        let s = parse_scenario_str("[sweep]\naxis = \"users\"\nvalues = [10, 20]\n").unwrap();
        assert_eq!(s.axis, SweepAxis::Users);
        assert_eq!(s.values, vec![10.0, 20.0]);
        assert!(parse_scenario_str("[sweep]\naxis = \"users\"\nvalues = [2.5]\n").is_err());
        assert!(parse_scenario_str("[sweep]\naxis = \"users\"\nvalues = [20, 10]\n").is_err());
    }

    #[test]
    fn large_seeds_round_trip_as_text() {
        let mut s = parse_scenario_str("").unwrap();
        s.master_seed = u64::MAX;
        assert_eq!(parse_scenario_str(&scenario_to_toml(&s)).unwrap(), s);
        assert!(parse_scenario_str("seed = -1").is_err());
    }

    #[test]
    fn awkward_powers_round_trip_exactly() {
        for dbm in [3.7, -13.01, 1e-3, -0.3, 27.123456789, -47.5, 0.1 + 0.2] {
            let s = parse_scenario_str(&format!("power_user_dbm = {dbm}\nnoise_dbm = {}", dbm - 30.0)).unwrap();
            let back = parse_scenario_str(&scenario_to_toml(&s)).unwrap();
            assert_eq!(back, s, "{dbm}");
        }
    }
}
