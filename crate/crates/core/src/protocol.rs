//! Signal-space-alignment zero-forcing (SA-ZF) relaying.
//!
//! Phase one: the base station precodes its `K` streams onto the users'
//! uplink channel directions, so the relay observes each BS stream
//! superimposed on the matching user's symbol. The relay zero-forces the
//! superposition back to `K` streams and broadcasts them towards the users.
//! Phase two: every node removes its own contribution (self-interference)
//! before detection; the base station additionally applies a zero-forcing
//! receiver.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{sample_complex_normal, ChannelRealization, NetworkConfig, NormalizationMode};
use crate::error::{Error, Result};
use crate::linalg::{left_pseudo_inverse, right_pseudo_inverse, ComplexMatrix};

/// The relay processing matrix `W_R = α_R · H_RU⁺ · H_UR⁺`.
///
/// Logically `N_R×N_R`, but held as its two rank-`K` factors and applied in
/// `O(N_R·K)` per vector.
#[derive(Clone, Debug)]
pub struct RelayMatrix {
    alpha_r: f64,
    /// `H_RU⁺`, `N_R×K`.
    transmit: ComplexMatrix,
    /// `H_UR⁺`, `K×N_R`.
    receive: ComplexMatrix,
}

impl RelayMatrix {
    pub fn dim(&self) -> usize {
        self.transmit.rows()
    }

    pub fn transmit_factor(&self) -> &ComplexMatrix {
        &self.transmit
    }

    pub fn receive_factor(&self) -> &ComplexMatrix {
        &self.receive
    }

    /// `W_R · y`.
    pub fn apply(&self, y: &[Complex64]) -> Vec<Complex64> {
        let inner: Vec<Complex64> = self.receive.mul_vec(y).into_iter().map(|z| z * self.alpha_r).collect();
        self.transmit.mul_vec(&inner)
    }

    /// `W_R · M`.
    pub fn apply_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.transmit.matmul(&self.receive.matmul(m).scale(self.alpha_r))
    }

    /// Dense `N_R×N_R` form; only for inspection and tests.
    pub fn to_dense(&self) -> ComplexMatrix {
        self.transmit.matmul(&self.receive).scale(self.alpha_r)
    }
}

/// Precoders, receivers and scaling constants for one realization.
#[derive(Clone, Debug)]
pub struct ProtocolMatrices {
    /// BS precoder `F_B = α_B · H_BR⁺ · H_UR`, `N_B×K`.
    pub f_b: ComplexMatrix,
    pub w_r: RelayMatrix,
    /// BS zero-forcing receiver `W_B = (H_RU · H_RB⁺)ᴴ`, `N_B×K`.
    pub w_b: ComplexMatrix,
    pub alpha_b: f64,
    pub alpha_r: f64,
    /// Columns `w_{U,k}` of `(H_UR⁺)ᴴ`, `N_R×K`.
    pub w_u: ComplexMatrix,
}

/// Per-stream SNRs, linear scale.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkSnrs {
    /// Uplink stream SNRs at the base station.
    pub gamma_b: Vec<f64>,
    /// Downlink SNRs at each user.
    pub gamma_u: Vec<f64>,
    /// Effective BS-side receiver noise `σ̃²_{B,k}` in milliwatts.
    pub sigma_tilde_b: Vec<f64>,
}

impl LinkSnrs {
    pub fn users(&self) -> usize {
        self.gamma_u.len()
    }

    /// True when some SNR diverged (noiseless limit).
    pub fn is_unbounded(&self) -> bool {
        self.gamma_b.iter().chain(&self.gamma_u).any(|g| g.is_infinite())
    }
}

fn snr_ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        let r = num / den;
        if r.is_finite() {
            r
        } else {
            f64::INFINITY
        }
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn check_bs_dims(n_b: usize, n_r: usize) -> Result<()> {
    if n_b <= n_r {
        return Err(Error::Shape(format!(
            "base-station antennas ({n_b}) must exceed relay antennas ({n_r})"
        )));
    }
    Ok(())
}

/// Base-station precoder scaling `α_B`.
///
/// Statistical: `√((N_B−N_R)·ℓ_B·P_B / (N_R·K·ℓ_U))`, from the Wishart mean
/// `E[tr X⁻¹] = M/(N−M)`. Instantaneous: `√(P_B / tr[H_URᴴ(H_BR H_BRᴴ)⁻¹H_UR])`.
pub fn alpha_bs(config: &NetworkConfig, realization: &ChannelRealization, mode: NormalizationMode) -> Result<f64> {
    let (n_b, n_r) = (config.bs_antennas(), config.relay_antennas);
    check_bs_dims(n_b, n_r)?;
    let p_b = config.effective_powers().bs;
    match mode {
        NormalizationMode::Statistical => Ok((((n_b - n_r) as f64 * config.pathloss_bs * p_b)
            / (n_r as f64 * config.users as f64 * config.pathloss_user))
            .sqrt()),
        NormalizationMode::Instantaneous => {
            let aligned = bs_aligned_directions(config, realization)?;
            Ok(instantaneous_alpha_b(p_b, realization, &aligned))
        }
    }
}

/// `(H_BR·H_BRᴴ)⁻¹·H_UR`, the relay-domain coordinates of the BS precoder.
fn bs_aligned_directions(config: &NetworkConfig, realization: &ChannelRealization) -> Result<ComplexMatrix> {
    let chol = realization.bs_gram_factor(config.condition_threshold)?;
    Ok(chol.solve(realization.h_ur()))
}

fn instantaneous_alpha_b(p_b: f64, realization: &ChannelRealization, aligned: &ComplexMatrix) -> f64 {
    let trace: f64 = realization
        .h_ur()
        .as_slice()
        .iter()
        .zip(aligned.as_slice())
        .map(|(h, y)| (h.conj() * y).re)
        .sum();
    (p_b / trace).sqrt()
}

/// Relay scaling `α_R`.
///
/// Statistical: `√((N_R−K)·ℓ_U·P_R / (K·(α_B² + P_U)))`. Instantaneous:
/// `tr(E[x_R x_Rᴴ]) = P_R` for this realization, the expectation taken over
/// symbols and relay noise.
pub fn alpha_rs(
    config: &NetworkConfig,
    alpha_b: f64,
    realization: &ChannelRealization,
    mode: NormalizationMode,
) -> Result<f64> {
    let (k, n_r) = (config.users, config.relay_antennas);
    if n_r <= k {
        return Err(Error::Shape(format!("relay antennas ({n_r}) must exceed users ({k})")));
    }
    let powers = config.effective_powers();
    match mode {
        NormalizationMode::Statistical => Ok(((n_r - k) as f64 * config.pathloss_user * powers.relay
            / (k as f64 * (alpha_b * alpha_b + powers.user)))
            .sqrt()),
        NormalizationMode::Instantaneous => {
            let h_ru_pinv = right_pseudo_inverse(realization.h_ru())?;
            let h_ur_pinv = left_pseudo_inverse(realization.h_ur())?;
            Ok(instantaneous_alpha_r(config, alpha_b, &h_ru_pinv, &h_ur_pinv))
        }
    }
}

fn instantaneous_alpha_r(
    config: &NetworkConfig,
    alpha_b: f64,
    h_ru_pinv: &ComplexMatrix,
    h_ur_pinv: &ComplexMatrix,
) -> f64 {
    // x_R = α_R·H_RU⁺·(α_B s_B + √P_U s_U + H_UR⁺ z_R), so
    // E[x_R x_Rᴴ] = α_R²·H_RU⁺·[(α_B² + P_U)·I + σ²·H_UR⁺H_UR⁺ᴴ]·H_RU⁺ᴴ.
    let powers = config.effective_powers();
    let mut cov = h_ur_pinv.gram_rows().scale(config.noise);
    for i in 0..cov.rows() {
        cov[(i, i)] += alpha_b * alpha_b + powers.user;
    }
    let weighted = h_ru_pinv.matmul(&cov);
    let trace: f64 = weighted
        .as_slice()
        .iter()
        .zip(h_ru_pinv.as_slice())
        .map(|(a, b)| (a * b.conj()).re)
        .sum();
    (powers.relay / trace).sqrt()
}

/// Builds every SA-ZF matrix for `realization` under `config.normalization`.
pub fn build_protocol(config: &NetworkConfig, realization: &ChannelRealization) -> Result<ProtocolMatrices> {
    let (k, n_r, n_b) = (config.users, config.relay_antennas, config.bs_antennas());
    if realization.users() != k || realization.relay_antennas() != n_r || realization.bs_antennas() != n_b {
        return Err(Error::Shape(format!(
            "realization is {}x{}x{} (K, N_R, N_B) but config expects {k}x{n_r}x{n_b}",
            realization.users(),
            realization.relay_antennas(),
            realization.bs_antennas()
        )));
    }
    check_bs_dims(n_b, n_r)?;
    let mode = config.normalization;

    let bs_chol = realization.bs_gram_factor(config.condition_threshold)?;
    let aligned = bs_chol.solve(realization.h_ur());
    let alpha_b = match mode {
        NormalizationMode::Statistical => alpha_bs(config, realization, mode)?,
        NormalizationMode::Instantaneous => instantaneous_alpha_b(config.effective_powers().bs, realization, &aligned),
    };
    // F_B = α_B·H_BRᴴ(H_BR H_BRᴴ)⁻¹H_UR
    let f_b = realization.h_br().adjoint_matmul(&aligned).scale(alpha_b);

    let h_ru_pinv = right_pseudo_inverse(realization.h_ru())?;
    let h_ur_pinv = left_pseudo_inverse(realization.h_ur())?;
    let alpha_r = match mode {
        NormalizationMode::Statistical => alpha_rs(config, alpha_b, realization, mode)?,
        NormalizationMode::Instantaneous => instantaneous_alpha_r(config, alpha_b, &h_ru_pinv, &h_ur_pinv),
    };

    // W_B = (H_RU·H_RB⁺)ᴴ = H_RB·(H_RBᴴH_RB)⁻¹·H_RUᴴ, and H_RBᴴH_RB is the
    // conjugate of H_BR·H_BRᴴ.
    let w_b = realization
        .h_rb()
        .matmul(&bs_chol.conj().solve(&realization.h_ru().adjoint()));

    let w_u = h_ur_pinv.adjoint();
    Ok(ProtocolMatrices {
        f_b,
        w_r: RelayMatrix {
            alpha_r,
            transmit: h_ru_pinv,
            receive: h_ur_pinv,
        },
        w_b,
        alpha_b,
        alpha_r,
        w_u,
    })
}

/// Instantaneous per-stream SNRs for one realization:
///
/// * `γ_U,k = α_R²α_B² / (α_R²σ²‖w_{U,k}‖² + σ²)`
/// * `γ_B,k = α_R²P_U / (α_R²σ²‖w_{U,k}‖² + σ̃²_{B,k})`, with
///   `σ̃²_{B,k} = σ²‖h_{R,k}ᵀH_RB⁺‖²`.
pub fn instantaneous_snrs(config: &NetworkConfig, protocol: &ProtocolMatrices) -> LinkSnrs {
    let sigma2 = config.noise;
    let p_u = config.effective_powers().user;
    let (a_r2, a_b2) = (protocol.alpha_r.powi(2), protocol.alpha_b.powi(2));
    let relay_noise = protocol.w_u.column_norms_sqr();
    let sigma_tilde_b: Vec<f64> = protocol
        .w_b
        .column_norms_sqr()
        .into_iter()
        .map(|n| sigma2 * n)
        .collect();

    let gamma_u = relay_noise
        .iter()
        .map(|&w| snr_ratio(a_r2 * a_b2, a_r2 * sigma2 * w + sigma2))
        .collect();
    let gamma_b = relay_noise
        .iter()
        .zip(&sigma_tilde_b)
        .map(|(&w, &st)| snr_ratio(a_r2 * p_u, a_r2 * sigma2 * w + st))
        .collect();
    LinkSnrs {
        gamma_b,
        gamma_u,
        sigma_tilde_b,
    }
}

/// Symbols and noise driving one two-phase exchange.
#[derive(Clone, Debug, PartialEq)]
pub struct Excitation {
    pub s_b: Vec<Complex64>,
    pub s_u: Vec<Complex64>,
    pub z_r: Vec<Complex64>,
    pub z_b: Vec<Complex64>,
    pub z_u: Vec<Complex64>,
}

impl Excitation {
    /// Unit-power `CN(0,1)` symbols and `CN(0, σ²)` noise at every receiver.
    pub fn draw<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> Self {
        let (k, n_r, n_b) = (config.users, config.relay_antennas, config.bs_antennas());
        Self {
            s_b: sample_complex_normal(k, 1.0, rng),
            s_u: sample_complex_normal(k, 1.0, rng),
            z_r: sample_complex_normal(n_r, config.noise, rng),
            z_b: sample_complex_normal(n_b, config.noise, rng),
            z_u: sample_complex_normal(k, config.noise, rng),
        }
    }

    /// Same symbols with every noise sample set to zero.
    pub fn noiseless(mut self) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        for z in self.z_r.iter_mut().chain(&mut self.z_b).chain(&mut self.z_u) {
            *z = zero;
        }
        self
    }
}

/// Every intermediate signal of one exchange.
#[derive(Clone, Debug)]
pub struct TransmissionTrace {
    pub s_b: Vec<Complex64>,
    pub s_u: Vec<Complex64>,
    /// BS transmit vector `F_B·s_B`.
    pub x_b: Vec<Complex64>,
    /// Relay observation in phase one.
    pub y_r: Vec<Complex64>,
    /// Relay broadcast `W_R·y_R`.
    pub x_r: Vec<Complex64>,
    /// BS observation in phase two, before cancellation.
    pub y_b: Vec<Complex64>,
    /// User observations in phase two, before cancellation.
    pub y_u: Vec<Complex64>,
    pub z_r: Vec<Complex64>,
    pub z_b: Vec<Complex64>,
    pub z_u: Vec<Complex64>,
    /// BS stream estimates `W_Bᴴ(y_B − H_RB W_R H_BR x_B)`.
    pub y_tilde_b: Vec<Complex64>,
    /// User estimates after removing their own symbol.
    pub y_tilde_u: Vec<Complex64>,
}

/// Runs the two-phase exchange for a given excitation.
pub fn transmit(
    config: &NetworkConfig,
    realization: &ChannelRealization,
    protocol: &ProtocolMatrices,
    excitation: Excitation,
) -> TransmissionTrace {
    let Excitation {
        s_b,
        s_u,
        z_r,
        z_b,
        z_u,
    } = excitation;
    let sqrt_pu = config.effective_powers().user.sqrt();

    // Phase one.
    let x_b = protocol.f_b.mul_vec(&s_b);
    let x_u: Vec<Complex64> = s_u.iter().map(|s| s * sqrt_pu).collect();
    let from_bs = realization.h_br().mul_vec(&x_b);
    let y_r: Vec<Complex64> = from_bs
        .iter()
        .zip(realization.h_ur().mul_vec(&x_u))
        .zip(&z_r)
        .map(|((a, b), z)| a + b + z)
        .collect();
    let x_r = protocol.w_r.apply(&y_r);

    // Phase two.
    let y_b: Vec<Complex64> = realization
        .h_rb()
        .mul_vec(&x_r)
        .iter()
        .zip(&z_b)
        .map(|(a, z)| a + z)
        .collect();
    let y_u: Vec<Complex64> = realization
        .h_ru()
        .mul_vec(&x_r)
        .iter()
        .zip(&z_u)
        .map(|(a, z)| a + z)
        .collect();

    // The BS knows x_B and removes its own contribution H_RB·W_R·H_BR·x_B.
    let self_interference = realization.h_rb().mul_vec(&protocol.w_r.apply(&from_bs));
    let cleaned: Vec<Complex64> = y_b.iter().zip(&self_interference).map(|(y, si)| y - si).collect();
    let y_tilde_b = protocol.w_b.adjoint_mul_vec(&cleaned);

    // User k removes h_{R,k}ᵀ·W_R·h_{k,R}·√P_U·s_{U,k} = α_R·√P_U·s_{U,k}.
    let y_tilde_u = y_u.iter().zip(&x_u).map(|(y, x)| y - x * protocol.alpha_r).collect();

    TransmissionTrace {
        s_b,
        s_u,
        x_b,
        y_r,
        x_r,
        y_b,
        y_u,
        z_r,
        z_b,
        z_u,
        y_tilde_b,
        y_tilde_u,
    }
}

/// Draws symbols and noise, then runs the exchange.
pub fn simulate_transmission<R: Rng + ?Sized>(
    config: &NetworkConfig,
    realization: &ChannelRealization,
    protocol: &ProtocolMatrices,
    rng: &mut R,
) -> TransmissionTrace {
    transmit(config, realization, protocol, Excitation::draw(config, rng))
}

/// Relative residuals of the zero-forcing identities for one realization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZfResiduals {
    /// `‖H_BR F_B − α_B H_UR‖ / ‖α_B H_UR‖`.
    pub alignment: f64,
    /// `‖H_RU W_R H_UR − α_R I‖ / ‖α_R I‖`.
    pub relay: f64,
    /// `‖W_Bᴴ H_RB W_R H_UR − α_R I‖ / ‖α_R I‖`.
    pub end_to_end: f64,
    /// Power left at the BS estimates after self-interference cancellation
    /// with silent users and no noise, relative to one user's received power.
    pub self_interference: f64,
}

impl ZfResiduals {
    pub fn worst_identity(&self) -> f64 {
        self.alignment.max(self.relay).max(self.end_to_end)
    }
}

pub fn zf_residuals<R: Rng + ?Sized>(
    config: &NetworkConfig,
    realization: &ChannelRealization,
    protocol: &ProtocolMatrices,
    rng: &mut R,
) -> ZfResiduals {
    let rel = |a: &ComplexMatrix, b: &ComplexMatrix| a.sub(b).frobenius_norm() / b.frobenius_norm();
    let target = ComplexMatrix::identity(config.users).scale(protocol.alpha_r);
    let relay_out = protocol.w_r.apply_matrix(realization.h_ur());

    let mut excitation = Excitation::draw(config, rng).noiseless();
    excitation.s_u.fill(Complex64::new(0.0, 0.0));
    let trace = transmit(config, realization, protocol, excitation);
    let leaked: f64 = trace.y_tilde_b.iter().map(|z| z.norm_sqr()).sum();

    ZfResiduals {
        alignment: rel(
            &realization.h_br().matmul(&protocol.f_b),
            &realization.h_ur().scale(protocol.alpha_b),
        ),
        relay: rel(&realization.h_ru().matmul(&relay_out), &target),
        end_to_end: rel(
            &protocol.w_b.adjoint_matmul(&realization.h_rb().matmul(&relay_out)),
            &target,
        ),
        self_interference: leaked / (protocol.alpha_r.powi(2) * config.effective_powers().user),
    }
}
