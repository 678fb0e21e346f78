//! Network configuration and random channel realizations.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, ComplexMatrix, LinalgError};

/// Consecutive ill-conditioned draws tolerated before giving up.
pub const MAX_REJECTIONS: usize = 100;

/// How transmit powers scale with the relay array size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PowerPolicy {
    /// Every node transmits at its full budget.
    Fixed,
    /// Users transmit at `E_U / N_R`.
    CaseI,
    /// Users and the base station transmit at `E / N_R`.
    CaseII,
}

impl PowerPolicy {
    pub const ALL: [PowerPolicy; 3] = [PowerPolicy::Fixed, PowerPolicy::CaseI, PowerPolicy::CaseII];

    pub fn name(self) -> &'static str {
        match self {
            PowerPolicy::Fixed => "fixed",
            PowerPolicy::CaseI => "case1",
            PowerPolicy::CaseII => "case2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// How the precoder scaling constants are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NormalizationMode {
    /// Expectation-based closed forms; meets the power budgets on average
    /// over channel draws.
    #[default]
    Statistical,
    /// Per-realization scaling; meets the power budgets exactly for every
    /// draw.
    Instantaneous,
}

impl NormalizationMode {
    pub fn name(self) -> &'static str {
        match self {
            NormalizationMode::Statistical => "statistical",
            NormalizationMode::Instantaneous => "instantaneous",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "statistical" => Some(NormalizationMode::Statistical),
            "instantaneous" => Some(NormalizationMode::Instantaneous),
            _ => None,
        }
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Scenario parameters. Powers and noise are linear milliwatts.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Number of single-antenna users `K`.
    pub users: usize,
    /// Relay array size `N_R`.
    pub relay_antennas: usize,
    /// Base-station to relay antenna ratio; `N_B = round(theta_br · N_R)`.
    pub theta_br: f64,
    /// Base-station power budget `E_B`.
    pub bs_power: f64,
    /// Relay power budget `E_R`.
    pub relay_power: f64,
    /// Per-user power budget `E_U`.
    pub user_power: f64,
    /// Noise variance `σ²`.
    pub noise: f64,
    /// Large-scale gain of the BS–relay link `ℓ_B`.
    pub pathloss_bs: f64,
    /// Large-scale gain of the user–relay links `ℓ_U`.
    pub pathloss_user: f64,
    pub power_policy: PowerPolicy,
    pub normalization: NormalizationMode,
    /// Gram condition estimates above this reject the draw.
    pub condition_threshold: f64,
}

/// Per-node transmit powers after applying the power policy, in milliwatts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectivePowers {
    pub bs: f64,
    pub relay: f64,
    pub user: f64,
}

impl NetworkConfig {
    /// The evaluation setting used throughout: `E_B = 10 dBm`, `E_R = 20 dBm`,
    /// `E_U = 0 dBm`, `σ² = −20 dBm`, `ℓ_B = 1`, `ℓ_U = 2⁻³`, fixed powers.
    pub fn reference(users: usize, relay_antennas: usize, theta_br: f64) -> Self {
        Self {
            users,
            relay_antennas,
            theta_br,
            bs_power: dbm_to_mw(10.0),
            relay_power: dbm_to_mw(20.0),
            user_power: dbm_to_mw(0.0),
            noise: dbm_to_mw(-20.0),
            pathloss_bs: 1.0,
            pathloss_user: 0.125,
            power_policy: PowerPolicy::Fixed,
            normalization: NormalizationMode::Statistical,
            condition_threshold: 1e12,
        }
    }

    pub fn with_policy(mut self, policy: PowerPolicy) -> Self {
        self.power_policy = policy;
        self
    }

    pub fn with_normalization(mut self, mode: NormalizationMode) -> Self {
        self.normalization = mode;
        self
    }

    /// `N_B`, the base-station array size.
    pub fn bs_antennas(&self) -> usize {
        (self.theta_br * self.relay_antennas as f64).round() as usize
    }

    /// `λ = ℓ_U / ℓ_B`.
    pub fn pathloss_ratio(&self) -> f64 {
        self.pathloss_user / self.pathloss_bs
    }

    pub fn effective_powers(&self) -> EffectivePowers {
        let n = self.relay_antennas as f64;
        match self.power_policy {
            PowerPolicy::Fixed => EffectivePowers {
                bs: self.bs_power,
                relay: self.relay_power,
                user: self.user_power,
            },
            PowerPolicy::CaseI => EffectivePowers {
                bs: self.bs_power,
                relay: self.relay_power,
                user: self.user_power / n,
            },
            PowerPolicy::CaseII => EffectivePowers {
                bs: self.bs_power / n,
                relay: self.relay_power,
                user: self.user_power / n,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidConfig(msg));
        if self.users < 1 {
            return invalid("at least one user is required".into());
        }
        if !(self.theta_br > 1.0) || !self.theta_br.is_finite() {
            return invalid(format!("theta_br must exceed 1, got {}", self.theta_br));
        }
        if self.relay_antennas <= self.users {
            return invalid(format!(
                "relay antennas ({}) must exceed users ({})",
                self.relay_antennas, self.users
            ));
        }
        let n_b = self.bs_antennas();
        if n_b <= self.relay_antennas {
            return invalid(format!(
                "base-station antennas ({n_b}) must exceed relay antennas ({})",
                self.relay_antennas
            ));
        }
        for (name, v) in [
            ("bs_power", self.bs_power),
            ("relay_power", self.relay_power),
            ("user_power", self.user_power),
            ("noise", self.noise),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("pathloss_bs", self.pathloss_bs), ("pathloss_user", self.pathloss_user)] {
            if !(v > 0.0 && v <= 1.0) {
                return invalid(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if !(self.condition_threshold >= 1.0) {
            return invalid(format!(
                "condition_threshold must be at least 1, got {}",
                self.condition_threshold
            ));
        }
        let realized = n_b as f64 / self.relay_antennas as f64;
        if ((realized - self.theta_br) / self.theta_br).abs() > 1e-3 {
            log::warn!(
                "theta_br {} realized as {n_b}/{} = {realized:.6}",
                self.theta_br,
                self.relay_antennas
            );
        }
        Ok(())
    }
}

/// Draws a matrix of i.i.d. `CN(0, 1)` entries.
pub fn sample_small_scale<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let half = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * half, im * half)
    })
}

/// Draws `n` i.i.d. `CN(0, variance)` samples.
pub fn sample_complex_normal<R: Rng + ?Sized>(n: usize, variance: f64, rng: &mut R) -> Vec<Complex64> {
    let s = (variance / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * s, im * s)
        })
        .collect()
}

/// One draw of every channel in the network, with reciprocity applied.
///
/// The downlink channels are stored explicitly: `H_RB = H_BRᵀ` and
/// `H_RU = H_URᵀ` (plain transposes).
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    h_br: ComplexMatrix,
    h_ur: ComplexMatrix,
    h_rb: ComplexMatrix,
    h_ru: ComplexMatrix,
    bs_gram: Option<Arc<Cholesky>>,
}

impl ChannelRealization {
    /// Builds a realization from uplink channels `H_BR` (`N_R×N_B`) and
    /// `H_UR` (`N_R×K`).
    pub fn from_channels(h_br: ComplexMatrix, h_ur: ComplexMatrix) -> Result<Self> {
        if h_br.rows() != h_ur.rows() {
            return Err(Error::Shape(format!(
                "H_BR has {} rows but H_UR has {}",
                h_br.rows(),
                h_ur.rows()
            )));
        }
        Ok(Self {
            h_rb: h_br.transpose(),
            h_ru: h_ur.transpose(),
            h_br,
            h_ur,
            bs_gram: None,
        })
    }

    pub fn h_br(&self) -> &ComplexMatrix {
        &self.h_br
    }

    pub fn h_ur(&self) -> &ComplexMatrix {
        &self.h_ur
    }

    pub fn h_rb(&self) -> &ComplexMatrix {
        &self.h_rb
    }

    pub fn h_ru(&self) -> &ComplexMatrix {
        &self.h_ru
    }

    pub fn users(&self) -> usize {
        self.h_ur.cols()
    }

    pub fn relay_antennas(&self) -> usize {
        self.h_br.rows()
    }

    pub fn bs_antennas(&self) -> usize {
        self.h_br.cols()
    }

    /// Cholesky factor of `H_BR·H_BRᴴ`, cached when the realization came from
    /// [`draw_realization`].
    pub fn bs_gram_factor(&self, threshold: f64) -> Result<Arc<Cholesky>, LinalgError> {
        match &self.bs_gram {
            Some(f) => Ok(Arc::clone(f)),
            None => Cholesky::factor_checked(&self.h_br.gram_rows(), threshold).map(Arc::new),
        }
    }
}

/// Draws a realization, resampling while either Gram matrix exceeds the
/// configured condition threshold.
pub fn draw_realization<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> Result<ChannelRealization> {
    config.validate()?;
    let (k, n_r, n_b) = (config.users, config.relay_antennas, config.bs_antennas());
    let (sb, su) = (config.pathloss_bs.sqrt(), config.pathloss_user.sqrt());
    for attempt in 1..=MAX_REJECTIONS {
        let h_br = sample_small_scale(n_r, n_b, rng).scale(sb);
        let h_ur = sample_small_scale(n_r, k, rng).scale(su);
        let bs = Cholesky::factor_checked(&h_br.gram_rows(), config.condition_threshold);
        let user = Cholesky::factor_checked(&h_ur.gram_cols(), config.condition_threshold);
        match (bs, user) {
            (Ok(bs), Ok(_)) => {
                let mut realization = ChannelRealization::from_channels(h_br, h_ur)?;
                realization.bs_gram = Some(Arc::new(bs));
                return Ok(realization);
            }
            (bs, user) => {
                let reason = bs.err().or(user.err());
                log::warn!("rejected channel draw {attempt}: {reason:?}");
            }
        }
    }
    Err(Error::DegenerateChannel {
        attempts: MAX_REJECTIONS,
    })
}

/// SplitMix64 finalizer over `(master, index)`; used to give every sweep
/// point its own seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The random stream for trial `trial` under `seed`. Streams are
/// independent, so trials can be evaluated in any order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
