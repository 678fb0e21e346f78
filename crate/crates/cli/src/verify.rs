//! Invariant suite behind `sazf verify`.

use sazf_core::{
    build_protocol, draw_realization, trial_rng, wishart_identity_check, zf_residuals, ChannelRealization,
    NetworkConfig, NormalizationMode, PowerPolicy, ProtocolMatrices, Result,
};

pub const IDENTITY_TOLERANCE: f64 = 1e-9;
pub const SELF_INTERFERENCE_TOLERANCE: f64 = 1e-18;
pub const POWER_TOLERANCE: f64 = 1e-9;
pub const WISHART_TOLERANCE: f64 = 0.02;
pub const WISHART_TRIALS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

/// Expected transmit powers `(E‖x_B‖², E‖x_R‖²)` over symbols and noise for a
/// fixed realization.
pub fn expected_powers(
    config: &NetworkConfig,
    realization: &ChannelRealization,
    protocol: &ProtocolMatrices,
) -> (f64, f64) {
    let sq = |m: &sazf_core::ComplexMatrix| m.frobenius_norm().powi(2);
    let bs = sq(&protocol.f_b);
    let from_bs = realization.h_br().matmul(&protocol.f_b);
    let relay = sq(&protocol.w_r.apply_matrix(&from_bs))
        + config.effective_powers().user * sq(&protocol.w_r.apply_matrix(realization.h_ur()))
        + config.noise * sq(&protocol.w_r.to_dense());
    (bs, relay)
}

/// Runs the protocol identities and power checks over `realizations` channel
/// draws at `K = 3`, `N_R = 32`, `N_B = 96`, plus the Wishart identity.
pub fn run_checks(seed: u64, realizations: usize) -> Result<Vec<CheckOutcome>> {
    let mut worst_identity = 0.0_f64;
    let mut worst_si = 0.0_f64;
    let mut worst_power = 0.0_f64;
    for t in 0..realizations {
        let mode = if t % 2 == 0 {
            NormalizationMode::Statistical
        } else {
            NormalizationMode::Instantaneous
        };
        let cfg = NetworkConfig::reference(3, 32, 3.0)
            .with_policy(PowerPolicy::ALL[t % 3])
            .with_normalization(mode);
        let mut rng = trial_rng(seed, t as u64);
        let r = draw_realization(&cfg, &mut rng)?;
        let p = build_protocol(&cfg, &r)?;
        let res = zf_residuals(&cfg, &r, &p, &mut rng);
        worst_identity = worst_identity.max(res.worst_identity());
        worst_si = worst_si.max(res.self_interference);
        if mode == NormalizationMode::Instantaneous {
            let budget = cfg.effective_powers();
            let (bs, relay) = expected_powers(&cfg, &r, &p);
            worst_power = worst_power
                .max((bs / budget.bs - 1.0).abs())
                .max((relay / budget.relay - 1.0).abs());
        }
    }
    let wishart = wishart_identity_check(3, 200, WISHART_TRIALS, seed)?;

    Ok(vec![
        CheckOutcome {
            name: "zero-forcing identities",
            passed: worst_identity < IDENTITY_TOLERANCE,
            detail: format!("worst relative residual {worst_identity:.2e} over {realizations} realizations"),
        },
        CheckOutcome {
            name: "self-interference cancellation",
            passed: worst_si < SELF_INTERFERENCE_TOLERANCE,
            detail: format!("worst residual {worst_si:.2e}"),
        },
        CheckOutcome {
            name: "instantaneous power constraints",
            passed: worst_power < POWER_TOLERANCE,
            detail: format!("worst relative deviation from budget {worst_power:.2e}"),
        },
        CheckOutcome {
            name: "Wishart inverse trace",
            passed: wishart.relative_error < WISHART_TOLERANCE,
            detail: format!(
                "mean {:.6} vs {:.6} over {} draws ({:.2}%)",
                wishart.sample_mean,
                wishart.expected,
                wishart.trials,
                100.0 * wishart.relative_error
            ),
        },
    ])
}
