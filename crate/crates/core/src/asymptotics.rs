//! Large-array closed forms: SNRs, sum spectral efficiency, cut-set bounds,
//! the gap between them, and energy efficiency.

use crate::channel::{ChannelRealization, NetworkConfig, PowerPolicy};
use crate::error::{Error, Result};
use crate::linalg::log_det_capacity;
use crate::protocol::LinkSnrs;

/// `C(x) = ½·log₂(1 + x)`; half-duplex operation splits each exchange over
/// two phases.
pub fn capacity(snr: f64) -> f64 {
    0.5 * snr.ln_1p() / std::f64::consts::LN_2
}

fn check_ratio(config: &NetworkConfig) -> Result<f64> {
    if !(config.theta_br > 1.0) {
        return Err(Error::InvalidConfig(format!(
            "theta_br must exceed 1, got {}",
            config.theta_br
        )));
    }
    Ok(config.theta_br - 1.0)
}

/// Asymptotic per-stream SNRs for the configured power policy.
///
/// With `finite_correction` off the large-`N_R` limits are returned
/// verbatim. With it on, the expressions keep the `(N_R − K)` and
/// `(N_R/K − 1)` factors from the Wishart means, evaluated with the
/// policy's effective powers; this is the more accurate form at moderate
/// array sizes.
pub fn asymptotic_snrs(config: &NetworkConfig, finite_correction: bool) -> Result<LinkSnrs> {
    let t = check_ratio(config)?;
    let k = config.users as f64;
    let n = config.relay_antennas as f64;
    let (lb, lu, s2) = (config.pathloss_bs, config.pathloss_user, config.noise);
    let (eb, er, eu) = (config.bs_power, config.relay_power, config.user_power);

    let (gamma_u, gamma_b) = if finite_correction {
        let p = config.effective_powers();
        let gu = (n / k - 1.0) * t * lu * lb * p.bs * p.relay / ((lu * (p.relay + k * p.user) + t * lb * p.bs) * s2);
        let gb = (n - k) * t * lb * lu * p.relay * p.user / ((t * lb * (p.relay + p.bs) + lu * k * p.user) * s2);
        (gu, gb)
    } else {
        match config.power_policy {
            PowerPolicy::Fixed => (
                n * t * lu * lb * eb * er / (k * (lu * (er + k * eu) + t * lb * eb) * s2),
                n * t * lb * lu * er * eu / ((t * lb * (er + eb) + lu * k * eu) * s2),
            ),
            PowerPolicy::CaseI => (
                n * t * lu * lb * eb * er / (k * (lu * er + t * lb * eb) * s2),
                lu * er * eu / ((er + eb) * s2),
            ),
            PowerPolicy::CaseII => (t * lb * eb / (k * s2), lu * eu / s2),
        }
    };
    let sigma_tilde = lu * s2 / (t * lb);
    let users = config.users;
    Ok(LinkSnrs {
        gamma_b: vec![gamma_b; users],
        gamma_u: vec![gamma_u; users],
        sigma_tilde_b: vec![sigma_tilde; users],
    })
}

/// `Σ_k [C(γ_B,k) + C(γ_U,k)]` in bps/Hz.
pub fn sum_spectral_efficiency(snrs: &LinkSnrs) -> f64 {
    snrs.gamma_b.iter().chain(&snrs.gamma_u).map(|&g| capacity(g)).sum()
}

/// High-SNR cut-set bound with equal relay power allocation:
/// `(K/2)·log₂(N_R ℓ_U P_U/σ²) + (K/2)·log₂(N_R ℓ_U P_R/(Kσ²))`.
///
/// Uses the policy's effective powers. Logs a warning when either log
/// argument is at most one, where the high-SNR form stops being meaningful.
pub fn cutset_high_snr(config: &NetworkConfig) -> f64 {
    let k = config.users as f64;
    let n = config.relay_antennas as f64;
    let p = config.effective_powers();
    let user_arg = n * config.pathloss_user * p.user / config.noise;
    let relay_arg = n * config.pathloss_user * p.relay / (k * config.noise);
    if user_arg <= 1.0 || relay_arg <= 1.0 {
        log::warn!("cut-set high-SNR form outside its regime (arguments {user_arg:.3e}, {relay_arg:.3e})");
    }
    0.5 * k * (user_arg.log2() + relay_arg.log2())
}

/// Cut-set bound for one realization with `Q_R = (P_R/K)·I` and
/// `Q_U = P_U·I`, evaluated through the `K×K` determinants
/// `det(I + H_RU H_RUᴴ·P_R/(Kσ²))` and `det(I + H_URᴴ H_UR·P_U/σ²)`.
pub fn cutset_exact(config: &NetworkConfig, realization: &ChannelRealization) -> Result<f64> {
    let k = realization.users() as f64;
    let p = config.effective_powers();
    let downlink = log_det_capacity(&realization.h_ru().gram_rows(), p.relay / (k * config.noise))?;
    let uplink = log_det_capacity(&realization.h_ur().gram_cols(), p.user / config.noise)?;
    Ok(0.5 * (downlink + uplink))
}

/// High-SNR gap to the cut-set bound, whole network and per user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub total: f64,
    pub per_user: f64,
}

/// Closed-form high-SNR gap between SA-ZF and the cut-set bound for the
/// configured power policy.
pub fn gap_high_snr(config: &NetworkConfig) -> Result<Gap> {
    let t = check_ratio(config)?;
    let k = config.users as f64;
    let n = config.relay_antennas as f64;
    let lambda = config.pathloss_ratio();
    let (eb, er, eu) = (config.bs_power, config.relay_power, config.user_power);
    let total = match config.power_policy {
        PowerPolicy::Fixed => {
            0.5 * k * (1.0 + lambda * (er + k * eu) / (t * eb)).log2()
                + 0.5 * k * (1.0 + eb / er + lambda * k * eu / (t * er)).log2()
        }
        PowerPolicy::CaseI => 0.5 * k * (1.0 + eb / er).log2() + 0.5 * k * (1.0 + lambda * er / (t * eb)).log2(),
        PowerPolicy::CaseII => 0.5 * k * (lambda * n * er / (t * eb)).log2(),
    };
    Ok(Gap {
        total,
        per_user: total / k,
    })
}

/// Total consumed power `P_B + P_R + K·P_U` in milliwatts.
pub fn total_power(config: &NetworkConfig) -> f64 {
    let p = config.effective_powers();
    p.bs + p.relay + config.users as f64 * p.user
}

/// Spectral efficiency per milliwatt of consumed power.
pub fn energy_efficiency(rate: f64, config: &NetworkConfig) -> f64 {
    rate / total_power(config)
}

/// Closed-form figures of merit for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub per_link_rates_b: Vec<f64>,
    pub per_link_rates_u: Vec<f64>,
    pub sum_rate: f64,
    /// Present when a realization was supplied.
    pub cutset_exact: Option<f64>,
    pub cutset_high_snr: f64,
    pub gap: Gap,
    pub energy_efficiency: f64,
}

pub fn rate_report(
    config: &NetworkConfig,
    finite_correction: bool,
    realization: Option<&ChannelRealization>,
) -> Result<RateReport> {
    let snrs = asymptotic_snrs(config, finite_correction)?;
    let sum_rate = sum_spectral_efficiency(&snrs);
    Ok(RateReport {
        per_link_rates_b: snrs.gamma_b.iter().map(|&g| capacity(g)).collect(),
        per_link_rates_u: snrs.gamma_u.iter().map(|&g| capacity(g)).collect(),
        sum_rate,
        cutset_exact: realization.map(|r| cutset_exact(config, r)).transpose()?,
        cutset_high_snr: cutset_high_snr(config),
        gap: gap_high_snr(config)?,
        energy_efficiency: energy_efficiency(sum_rate, config),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;

    fn reference() -> NetworkConfig {
        NetworkConfig::reference(3, 200, 5.0)
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn fixed_snrs_reference_values() {
        let s = asymptotic_snrs(&reference(), false).unwrap();
        // 200·4·0.125·10·100 / (3·(0.125·103 + 40)·0.01)
        let gu = 100_000.0 / (3.0 * (0.125 * 103.0 + 40.0) * 0.01);
        // 200·4·0.125·100·1 / ((4·110 + 0.375)·0.01)
        let gb = 10_000.0 / ((440.0 + 0.375) * 0.01);
        assert!(close(s.gamma_u[0], gu, 1e-12));
        assert!(close(s.gamma_b[2], gb, 1e-12));
        assert!(close(s.gamma_u[0], 6.304e4, 1e-3));
        assert!(close(s.gamma_b[0], 2.271e3, 1e-3));
    }

    #[test]
    fn case_two_snrs_do_not_depend_on_array_size() {
        let cfg = reference().with_policy(PowerPolicy::CaseII);
        let s = asymptotic_snrs(&cfg, false).unwrap();
        assert!(close(s.gamma_u[0], 4.0 * 10.0 / (3.0 * 0.01), 1e-12));
        assert!(close(s.gamma_b[0], 12.5, 1e-12));
        let mut a = cfg.clone();
        a.relay_antennas = 100;
        let mut b = cfg;
        b.relay_antennas = 400;
        assert_eq!(asymptotic_snrs(&a, false).unwrap(), asymptotic_snrs(&b, false).unwrap());
    }

    #[test]
    fn finite_correction_reduces_to_limit() {
        for policy in PowerPolicy::ALL {
            let mut cfg = reference().with_policy(policy);
            cfg.relay_antennas = 1_000_000;
            let exact = asymptotic_snrs(&cfg, true).unwrap();
            let limit = asymptotic_snrs(&cfg, false).unwrap();
            assert!(close(exact.gamma_u[0], limit.gamma_u[0], 1e-5), "{policy:?}");
            assert!(close(exact.gamma_b[0], limit.gamma_b[0], 1e-5), "{policy:?}");
        }
    }

    #[test]
    fn finite_correction_fixed_matches_wishart_forms() {
        let cfg = reference();
        let s = asymptotic_snrs(&cfg, true).unwrap();
        let gu = (200.0 / 3.0 - 1.0) * 4.0 * 0.125 * 10.0 * 100.0 / ((0.125 * 103.0 + 40.0) * 0.01);
        let gb = 197.0 * 4.0 * 0.125 * 100.0 / ((440.0 + 0.375) * 0.01);
        assert!(close(s.gamma_u[0], gu, 1e-12));
        assert!(close(s.gamma_b[0], gb, 1e-12));
    }

    #[test]
    fn snrs_reject_bad_ratio() {
        let mut cfg = reference();
        cfg.theta_br = 1.0;
        assert!(matches!(asymptotic_snrs(&cfg, false), Err(Error::InvalidConfig(_))));
        assert!(matches!(gap_high_snr(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn fixed_snrs_scale_linearly_with_relay_array() {
        let a = asymptotic_snrs(&reference(), false).unwrap();
        let mut cfg = reference();
        cfg.relay_antennas = 400;
        let b = asymptotic_snrs(&cfg, false).unwrap();
        assert_eq!(b.gamma_u[0] / a.gamma_u[0], 2.0);
        assert_eq!(b.gamma_b[0] / a.gamma_b[0], 2.0);
    }

    #[test]
    fn sum_rate_values() {
        let unit = LinkSnrs {
            gamma_b: vec![1.0],
            gamma_u: vec![1.0],
            sigma_tilde_b: vec![1.0],
        };
        assert_eq!(sum_spectral_efficiency(&unit), 1.0);
        let zero = LinkSnrs {
            gamma_b: vec![0.0; 3],
            gamma_u: vec![0.0; 3],
            sigma_tilde_b: vec![1.0; 3],
        };
        assert_eq!(sum_spectral_efficiency(&zero), 0.0);
        let r = sum_spectral_efficiency(&asymptotic_snrs(&reference(), false).unwrap());
        assert!((r - 40.64).abs() < 0.005, "{r}");
    }

    #[test]
    fn cutset_high_snr_values() {
        let v = cutset_high_snr(&reference());
        let want = 1.5 * 2500f64.log2() + 1.5 * (250_000.0f64 / 3.0).log2();
        assert!(close(v, want, 1e-12));
        assert!((v - 41.45).abs() < 0.005);

        let mut wide = reference();
        wide.theta_br = 17.0;
        assert_eq!(cutset_high_snr(&wide), v);

        let mut doubled = reference();
        doubled.relay_antennas = 400;
        assert!((cutset_high_snr(&doubled) - v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cutset_exact_edge_cases() {
        let cfg = reference();
        let zero = ChannelRealization::from_channels(ComplexMatrix::zeros(4, 8), ComplexMatrix::zeros(4, 2)).unwrap();
        assert_eq!(cutset_exact(&cfg, &zero).unwrap(), 0.0);

        let mut scalar = NetworkConfig::reference(1, 1, 2.0);
        scalar.relay_power = 1.0;
        scalar.user_power = 1.0;
        scalar.noise = 1.0;
        scalar.pathloss_user = 1.0;
        let h = ComplexMatrix::new(1, 1, vec![num_complex::Complex64::new(0.6, 0.8)]).unwrap();
        let r = ChannelRealization::from_channels(ComplexMatrix::identity(1), h).unwrap();
        assert!((cutset_exact(&scalar, &r).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gap_reference_values() {
        let g = gap_high_snr(&reference()).unwrap();
        assert!((g.per_user - 0.271).abs() < 0.001, "{g:?}");
        assert!((g.total - 3.0 * g.per_user).abs() < 1e-15);

        let mut case1 = reference().with_policy(PowerPolicy::CaseI);
        case1.theta_br = 10.0;
        let g1 = gap_high_snr(&case1).unwrap();
        assert!((g1.per_user - 0.163).abs() < 0.001, "{g1:?}");
    }

    #[test]
    fn gap_large_ratio_limit() {
        let mut cfg = reference();
        cfg.theta_br = 1e12;
        let g = gap_high_snr(&cfg).unwrap();
        assert!((g.total - 1.5 * 1.1f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn case_two_gap_grows_with_array() {
        let mut cfg = reference().with_policy(PowerPolicy::CaseII);
        let a = gap_high_snr(&cfg).unwrap().total;
        cfg.relay_antennas *= 2;
        let b = gap_high_snr(&cfg).unwrap().total;
        assert!((b - a - 1.5).abs() < 1e-12);
    }

    #[test]
    fn energy_efficiency_values() {
        let cfg = reference();
        assert!((energy_efficiency(40.64, &cfg) - 40.64 / 113.0).abs() < 1e-15);
        assert!((energy_efficiency(40.64, &cfg) - 0.3596).abs() < 1e-4);
        assert_eq!(energy_efficiency(0.0, &cfg), 0.0);
        let case1 = cfg.with_policy(PowerPolicy::CaseI);
        assert!((total_power(&case1) - 110.015).abs() < 1e-12);
    }

    #[test]
    fn gap_formula_matches_direct_difference_at_high_snr() {
        let mut cfg = reference();
        let residual = |cfg: &NetworkConfig| {
            let direct = cutset_high_snr(cfg) - sum_spectral_efficiency(&asymptotic_snrs(cfg, false).unwrap());
            (direct - gap_high_snr(cfg).unwrap().total).abs()
        };
        let base = residual(&cfg);
        cfg.bs_power *= 1e3;
        cfg.relay_power *= 1e3;
        cfg.user_power *= 1e3;
        let scaled = residual(&cfg);
        assert!(base < 0.05);
        assert!(scaled < 0.01 && scaled < base);
    }

    #[test]
    fn report_collects_everything() {
        let r = rate_report(&reference(), false, None).unwrap();
        assert_eq!(r.per_link_rates_b.len(), 3);
        assert!(r.cutset_exact.is_none());
        let per_link: f64 = r.per_link_rates_b.iter().chain(&r.per_link_rates_u).sum();
        assert!((per_link - r.sum_rate).abs() < 1e-12);
        assert!(r.gap.total > 0.0);
    }
}
