//! Monte Carlo harness and reference sweep scenarios.
//!
//! Trials draw their randomness from per-trial streams derived from a single
//! seed, and per-trial results are reduced in trial order with compensated
//! summation, so serial and parallel execution agree bit for bit.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::asymptotics::{asymptotic_snrs, cutset_exact, cutset_high_snr, energy_efficiency, sum_spectral_efficiency};
use crate::channel::{derive_seed, draw_realization, sample_small_scale, trial_rng, NetworkConfig, PowerPolicy};
use crate::error::{Error, Result};
use crate::linalg::trace_of_inverse_gram;
use crate::protocol::{build_protocol, instantaneous_snrs};

/// Default Monte Carlo trials per sweep point.
pub const DEFAULT_TRIALS: usize = 200;

/// Rates are computed per realization, then averaged.
pub const RATE_CONVENTION: &str = "ergodic: per-realization rate from instantaneous SNRs, averaged over trials";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Sample mean and standard error of one series at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesStats {
    pub mean: f64,
    pub stderr: f64,
    /// Monte Carlo trials behind the estimate; zero for closed forms.
    pub trials: usize,
}

impl SeriesStats {
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            trials: 0,
        }
    }

    /// Mean and standard error of `samples`, summed in order.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                trials: 0,
            };
        }
        let mean = compensated_sum(samples.iter().copied()) / n as f64;
        let stderr = if n > 1 {
            let ss = compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean)));
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            trials: n,
        }
    }
}

/// Neumaier summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Monte Carlo and closed-form results at one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    /// Ergodic SA-ZF sum rate.
    pub monte_carlo: SeriesStats,
    /// Realization-level cut-set bound.
    pub cutset_exact: SeriesStats,
    /// Closed-form SA-ZF sum rate.
    pub closed_form: f64,
    pub cutset_high_snr: f64,
    /// `(cutset_high_snr − closed_form) / K`.
    pub gap_per_user: f64,
    /// Closed-form rate over total consumed power.
    pub energy_efficiency: f64,
}

struct TrialOutcome {
    sum_rate: f64,
    cutset: f64,
}

fn run_trial(config: &NetworkConfig, seed: u64, trial: u64) -> Result<TrialOutcome> {
    let mut rng = trial_rng(seed, trial);
    let realization = draw_realization(config, &mut rng)?;
    let protocol = build_protocol(config, &realization)?;
    let snrs = instantaneous_snrs(config, &protocol);
    Ok(TrialOutcome {
        sum_rate: sum_spectral_efficiency(&snrs),
        cutset: cutset_exact(config, &realization)?,
    })
}

fn map_trials<T: Send>(
    trials: usize,
    execution: Execution,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    match execution {
        Execution::Serial => (0..trials as u64).map(f).collect(),
        Execution::Parallel => (0..trials as u64).into_par_iter().map(f).collect(),
    }
}

fn closed_form(config: &NetworkConfig, finite_correction: bool) -> Result<(f64, f64, f64, f64)> {
    let rate = sum_spectral_efficiency(&asymptotic_snrs(config, finite_correction)?);
    let cutset = cutset_high_snr(config);
    Ok((
        rate,
        cutset,
        (cutset - rate) / config.users as f64,
        energy_efficiency(rate, config),
    ))
}

/// Runs `trials` Monte Carlo trials at `config` in parallel.
pub fn run_point(config: &NetworkConfig, trials: usize, seed: u64) -> Result<PointStats> {
    run_point_with(config, trials, seed, false, Execution::Parallel)
}

pub fn run_point_with(
    config: &NetworkConfig,
    trials: usize,
    seed: u64,
    finite_correction: bool,
    execution: Execution,
) -> Result<PointStats> {
    config.validate()?;
    if trials == 0 {
        return Err(Error::Precondition("at least one trial is required".into()));
    }
    let outcomes = map_trials(trials, execution, |t| run_trial(config, seed, t))?;
    let rates: Vec<f64> = outcomes.iter().map(|o| o.sum_rate).collect();
    let cutsets: Vec<f64> = outcomes.iter().map(|o| o.cutset).collect();
    let (rate, cutset, gap, ee) = closed_form(config, finite_correction)?;
    Ok(PointStats {
        monte_carlo: SeriesStats::from_samples(&rates),
        cutset_exact: SeriesStats::from_samples(&cutsets),
        closed_form: rate,
        cutset_high_snr: cutset,
        gap_per_user: gap,
        energy_efficiency: ee,
    })
}

/// The parameter varied across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    ThetaBr,
    RelayAntennas,
    Users,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::ThetaBr => "theta_br",
            SweepAxis::RelayAntennas => "relay_antennas",
            SweepAxis::Users => "users",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [SweepAxis::ThetaBr, SweepAxis::RelayAntennas, SweepAxis::Users]
            .into_iter()
            .find(|a| a.name() == name)
    }

    pub fn value_of(self, config: &NetworkConfig) -> f64 {
        match self {
            SweepAxis::ThetaBr => config.theta_br,
            SweepAxis::RelayAntennas => config.relay_antennas as f64,
            SweepAxis::Users => config.users as f64,
        }
    }

    fn is_integral(self) -> bool {
        !matches!(self, SweepAxis::ThetaBr)
    }
}

/// Output series. Variants are declared in name order so that the derived
/// ordering matches the CSV row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeriesKind {
    /// Closed-form SA-ZF sum rate.
    ClosedFormSazf,
    /// Monte Carlo mean of the realization-level cut-set bound.
    CutsetExact,
    /// High-SNR closed-form cut-set bound.
    CutsetHighSnr,
    /// Closed-form sum rate per milliwatt of total consumed power.
    EnergyEfficiency,
    /// Monte Carlo ergodic SA-ZF sum rate.
    MonteCarloSazf,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 5] = [
        SeriesKind::ClosedFormSazf,
        SeriesKind::CutsetExact,
        SeriesKind::CutsetHighSnr,
        SeriesKind::EnergyEfficiency,
        SeriesKind::MonteCarloSazf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::ClosedFormSazf => "closed_form_sazf",
            SeriesKind::CutsetExact => "cutset_exact",
            SeriesKind::CutsetHighSnr => "cutset_high_snr",
            SeriesKind::EnergyEfficiency => "energy_efficiency",
            SeriesKind::MonteCarloSazf => "monte_carlo_sazf",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn needs_monte_carlo(self) -> bool {
        matches!(self, SeriesKind::MonteCarloSazf | SeriesKind::CutsetExact)
    }
}

/// A sweep over one axis for one or more power policies.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub base: NetworkConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub policies: Vec<PowerPolicy>,
    pub series: BTreeSet<SeriesKind>,
    /// Closed-form series use the finite-array SNR forms.
    pub finite_correction: bool,
}

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5A2F_2015;

impl Scenario {
    /// A one-point scenario at `base`, every series, the base policy.
    pub fn single_point(base: NetworkConfig) -> Self {
        Self {
            axis: SweepAxis::ThetaBr,
            values: vec![base.theta_br],
            trials: DEFAULT_TRIALS,
            master_seed: DEFAULT_SEED,
            policies: vec![base.power_policy],
            series: SeriesKind::ALL.into_iter().collect(),
            finite_correction: false,
            base,
        }
    }

    /// The configuration at `value` on the sweep axis under `policy`.
    pub fn config_at(&self, value: f64, policy: PowerPolicy) -> Result<NetworkConfig> {
        let mut cfg = self.base.clone().with_policy(policy);
        if self.axis.is_integral() && (value.fract() != 0.0 || value < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "{} must be a non-negative integer, got {value}",
                self.axis.name()
            )));
        }
        match self.axis {
            SweepAxis::ThetaBr => cfg.theta_br = value,
            SweepAxis::RelayAntennas => cfg.relay_antennas = value as usize,
            SweepAxis::Users => cfg.users = value as usize,
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep values must not be empty".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig("sweep values must be strictly increasing".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidConfig("at least one power policy is required".into()));
        }
        for &v in &self.values {
            for &p in &self.policies {
                self.config_at(v, p)?.validate()?;
            }
        }
        Ok(())
    }

    fn needs_monte_carlo(&self) -> bool {
        self.series.iter().any(|s| s.needs_monte_carlo())
    }
}

/// Results for one (axis value, policy) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub axis_value: f64,
    pub policy: PowerPolicy,
    pub config: NetworkConfig,
    pub series: BTreeMap<SeriesKind, SeriesStats>,
    pub closed_form: f64,
    pub cutset_high_snr: f64,
    pub gap_per_user: f64,
    pub energy_efficiency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Ordered by axis value, then by policy order in the scenario.
    pub points: Vec<PointResult>,
    pub master_seed: u64,
    pub base: NetworkConfig,
    pub wall_clock: Duration,
    pub rate_convention: &'static str,
}

/// Runs every (point, policy) of `scenario`.
///
/// Point `i` draws from `derive_seed(master_seed, i)`; all policies at that
/// point see the same channel realizations.
pub fn sweep(scenario: &Scenario) -> Result<SweepResult> {
    sweep_with(scenario, Execution::Parallel)
}

pub fn sweep_with(scenario: &Scenario, execution: Execution) -> Result<SweepResult> {
    scenario.validate()?;
    let started = Instant::now();
    let mut points = Vec::with_capacity(scenario.values.len() * scenario.policies.len());
    for (i, &value) in scenario.values.iter().enumerate() {
        let seed = derive_seed(scenario.master_seed, i as u64);
        for &policy in &scenario.policies {
            let config = scenario.config_at(value, policy)?;
            points.push(evaluate_point(scenario, config, value, seed, execution)?);
        }
    }
    Ok(SweepResult {
        axis: scenario.axis,
        values: scenario.values.clone(),
        points,
        master_seed: scenario.master_seed,
        base: scenario.base.clone(),
        wall_clock: started.elapsed(),
        rate_convention: RATE_CONVENTION,
    })
}

fn evaluate_point(
    scenario: &Scenario,
    config: NetworkConfig,
    value: f64,
    seed: u64,
    execution: Execution,
) -> Result<PointResult> {
    let (closed, cutset, gap, ee, mc) = if scenario.needs_monte_carlo() {
        let stats = run_point_with(&config, scenario.trials, seed, scenario.finite_correction, execution)?;
        (
            stats.closed_form,
            stats.cutset_high_snr,
            stats.gap_per_user,
            stats.energy_efficiency,
            Some((stats.monte_carlo, stats.cutset_exact)),
        )
    } else {
        let (r, c, g, e) = closed_form(&config, scenario.finite_correction)?;
        (r, c, g, e, None)
    };
    let series = scenario
        .series
        .iter()
        .map(|&kind| {
            let stats = match (kind, mc) {
                (SeriesKind::ClosedFormSazf, _) => SeriesStats::exact(closed),
                (SeriesKind::CutsetHighSnr, _) => SeriesStats::exact(cutset),
                (SeriesKind::EnergyEfficiency, _) => SeriesStats::exact(ee),
                (SeriesKind::MonteCarloSazf, Some((m, _))) => m,
                (SeriesKind::CutsetExact, Some((_, c))) => c,
                (_, None) => unreachable!("Monte Carlo series requested without trials"),
            };
            (kind, stats)
        })
        .collect();
    Ok(PointResult {
        axis_value: value,
        policy: config.power_policy,
        config,
        series,
        closed_form: closed,
        cutset_high_snr: cutset,
        gap_per_user: gap,
        energy_efficiency: ee,
    })
}

/// Sweep over the BS-to-relay antenna ratio, `K = 3`, `N_R = 200`.
pub fn theta_sweep() -> Scenario {
    let mut s = Scenario::single_point(NetworkConfig::reference(3, 200, 5.0));
    s.values = vec![2.0, 3.0, 4.0, 5.0];
    s.series = [
        SeriesKind::ClosedFormSazf,
        SeriesKind::CutsetExact,
        SeriesKind::CutsetHighSnr,
        SeriesKind::MonteCarloSazf,
    ]
    .into();
    s
}

/// Sweep over the relay array size, `K = 3`, `θ_BR = 10`, every policy.
pub fn relay_sweep() -> Scenario {
    let mut s = Scenario::single_point(NetworkConfig::reference(3, 200, 10.0));
    s.axis = SweepAxis::RelayAntennas;
    s.values = vec![50.0, 100.0, 150.0, 200.0, 250.0, 300.0];
    s.policies = PowerPolicy::ALL.to_vec();
    s.series = [
        SeriesKind::ClosedFormSazf,
        SeriesKind::CutsetHighSnr,
        SeriesKind::MonteCarloSazf,
    ]
    .into();
    s
}

/// Sweep over the user count, `N_R = 200`, `θ_BR = 10`, every policy.
pub fn user_sweep() -> Scenario {
    let mut s = Scenario::single_point(NetworkConfig::reference(10, 200, 10.0));
    s.axis = SweepAxis::Users;
    s.values = (1..=8).map(|k| 10.0 * k as f64).collect();
    s.policies = PowerPolicy::ALL.to_vec();
    s.series = [SeriesKind::ClosedFormSazf, SeriesKind::MonteCarloSazf].into();
    s
}

/// Energy efficiency over the user count, `N_R = 200`, `θ_BR = 10`.
pub fn efficiency_sweep() -> Scenario {
    let mut s = user_sweep();
    s.series = [SeriesKind::EnergyEfficiency].into();
    s
}

/// Empirical check of `E[tr((XᴴX)⁻¹)] = M/(N − M)` for `N×M` i.i.d.
/// `CN(0,1)` matrices `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct WishartReport {
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub sample_mean: f64,
    pub stderr: f64,
    pub expected: f64,
    pub relative_error: f64,
}

pub fn wishart_identity_check(m: usize, n: usize, trials: usize, seed: u64) -> Result<WishartReport> {
    wishart_identity_check_with(m, n, trials, seed, Execution::Parallel)
}

pub fn wishart_identity_check_with(
    m: usize,
    n: usize,
    trials: usize,
    seed: u64,
    execution: Execution,
) -> Result<WishartReport> {
    if m < 1 || n <= m {
        return Err(Error::Precondition(format!("need N > M >= 1, got M = {m}, N = {n}")));
    }
    if trials == 0 {
        return Err(Error::Precondition("at least one trial is required".into()));
    }
    let samples = map_trials(trials, execution, |t| {
        let x = sample_small_scale(n, m, &mut trial_rng(seed, t));
        Ok(trace_of_inverse_gram(&x)?)
    })?;
    let stats = SeriesStats::from_samples(&samples);
    let expected = m as f64 / (n - m) as f64;
    Ok(WishartReport {
        m,
        n,
        trials,
        sample_mean: stats.mean,
        stderr: stats.stderr,
        expected,
        relative_error: (stats.mean - expected).abs() / expected,
    })
}
