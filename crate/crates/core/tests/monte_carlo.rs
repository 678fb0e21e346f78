use sazf_core::experiments::compensated_sum;
use sazf_core::{
    asymptotic_snrs, build_protocol, draw_realization, instantaneous_snrs, simulate_transmission, trial_rng,
    NetworkConfig, PowerPolicy,
};

fn mean(v: &[f64]) -> f64 {
    compensated_sum(v.iter().copied()) / v.len() as f64
}

// Per-stream SNR means over realizations against the large-array limits.
#[test]
fn snr_means_track_closed_form() {
    for policy in PowerPolicy::ALL {
        let cfg = NetworkConfig::reference(3, 200, 5.0).with_policy(policy);
        let limit = asymptotic_snrs(&cfg, true).unwrap();
        let (mut up, mut down) = (Vec::new(), Vec::new());
        for t in 0..100 {
            let mut rng = trial_rng(7, t);
            let r = draw_realization(&cfg, &mut rng).unwrap();
            let snrs = instantaneous_snrs(&cfg, &build_protocol(&cfg, &r).unwrap());
            up.extend(snrs.gamma_b);
            down.extend(snrs.gamma_u);
        }
        let (gb, gu) = (mean(&up), mean(&down));
        assert!(
            (gb / limit.gamma_b[0] - 1.0).abs() < 0.05,
            "{policy:?}: uplink {gb} vs {}",
            limit.gamma_b[0]
        );
        assert!(
            (gu / limit.gamma_u[0] - 1.0).abs() < 0.05,
            "{policy:?}: downlink {gu} vs {}",
            limit.gamma_u[0]
        );
    }
}

#[test]
fn reference_snr_levels() {
    let cfg = NetworkConfig::reference(3, 200, 5.0);
    let s = asymptotic_snrs(&cfg, false).unwrap();
    assert!((s.gamma_u[0] / 6.30e4 - 1.0).abs() < 5e-3, "{}", s.gamma_u[0]);
    assert!((s.gamma_b[0] / 2.27e3 - 1.0).abs() < 5e-3, "{}", s.gamma_b[0]);
}

// Statistical scaling meets the power budgets only on average over channels.
#[test]
fn statistical_scaling_meets_budget_on_average() {
    let cfg = NetworkConfig::reference(3, 64, 4.0);
    let powers = cfg.effective_powers();
    let (mut bs, mut relay) = (Vec::new(), Vec::new());
    for t in 0..400 {
        let mut rng = trial_rng(11, t);
        let r = draw_realization(&cfg, &mut rng).unwrap();
        let p = build_protocol(&cfg, &r).unwrap();
        for _ in 0..50 {
            let tr = simulate_transmission(&cfg, &r, &p, &mut rng);
            bs.push(tr.x_b.iter().map(|z| z.norm_sqr()).sum::<f64>());
            relay.push(tr.x_r.iter().map(|z| z.norm_sqr()).sum::<f64>());
        }
    }
    assert!(
        (mean(&bs) / powers.bs - 1.0).abs() < 0.03,
        "bs {}",
        mean(&bs) / powers.bs
    );
    assert!(
        (mean(&relay) / powers.relay - 1.0).abs() < 0.03,
        "relay {}",
        mean(&relay) / powers.relay
    );
}
