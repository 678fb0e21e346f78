//! Amplify-and-forward signal-space-alignment zero-forcing (SA-ZF) relaying
//! in a multiuser cellular two-way relay network where both the base station
//! and the relay carry large antenna arrays.
//!
//! * [`linalg`]: dense complex kernels (Gram pseudo-inverses, log-det).
//! * [`channel`]: configuration and Rayleigh-fading channel draws.
//! * [`protocol`]: precoders, receivers, per-link SNRs, symbol-level chain.
//! * [`asymptotics`]: large-array closed forms and cut-set bounds.
//! * [`experiments`]: seeded Monte Carlo sweeps.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod protocol;

pub use num_complex::Complex64;

pub use asymptotics::{
    asymptotic_snrs, capacity, cutset_exact, cutset_high_snr, energy_efficiency, gap_high_snr, rate_report,
    sum_spectral_efficiency, total_power, Gap, RateReport,
};
pub use channel::{
    dbm_to_mw, derive_seed, draw_realization, mw_to_dbm, sample_small_scale, trial_rng, ChannelRealization,
    EffectivePowers, NetworkConfig, NormalizationMode, PowerPolicy,
};
pub use error::{Error, Result};
pub use experiments::{
    run_point, sweep, wishart_identity_check, Execution, PointResult, PointStats, Scenario, SeriesKind, SeriesStats,
    SweepAxis, SweepResult, WishartReport,
};
pub use linalg::{ComplexMatrix, LinalgError, NumericPolicy};
pub use protocol::{
    alpha_bs, alpha_rs, build_protocol, instantaneous_snrs, simulate_transmission, transmit, zf_residuals, Excitation,
    LinkSnrs, ProtocolMatrices, TransmissionTrace, ZfResiduals,
};
