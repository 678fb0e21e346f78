//! CSV and plain-text renderings of sweep results.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use sazf_core::{PointResult, Scenario, SeriesKind, SweepResult};

pub const CSV_HEADER: &str = "axis,series,policy,mean_bpshz,stderr,trials";

/// Relative Monte Carlo deviation from the closed form that gets flagged.
pub const DEVIATION_FLAG: f64 = 0.05;

/// `x` with 9 significant digits in plain positional notation when the
/// exponent is moderate, scientific otherwise. Independent of locale.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0.00000000".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..=14).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{digits}", "0".repeat((-point) as usize))
    } else if point as usize >= digits.len() {
        format!("{digits}{}", "0".repeat(point as usize - digits.len()))
    } else {
        let (int, frac) = digits.split_at(point as usize);
        format!("{int}.{frac}")
    };
    format!("{sign}{body}")
}

/// Shortest decimal that parses back to `v`.
fn format_axis(v: f64) -> String {
    format!("{v}")
}

fn sorted_rows(result: &SweepResult) -> Vec<(&PointResult, SeriesKind)> {
    let mut rows: Vec<_> = result
        .points
        .iter()
        .flat_map(|p| p.series.keys().map(move |&k| (p, k)))
        .collect();
    rows.sort_by(|(a, ka), (b, kb)| {
        a.axis_value
            .total_cmp(&b.axis_value)
            .then_with(|| ka.name().cmp(kb.name()))
            .then_with(|| a.policy.name().cmp(b.policy.name()))
    });
    rows
}

pub fn csv_string(result: &SweepResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (point, kind) in sorted_rows(result) {
        let stats = &point.series[&kind];
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_axis(point.axis_value),
            kind.name(),
            point.policy.name(),
            format_sig9(stats.mean),
            format_sig9(stats.stderr),
            stats.trials
        )
        .unwrap();
    }
    out
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> io::Result<()> {
    std::fs::write(path, csv_string(result))
}

/// Relative deviation of the Monte Carlo rate from the closed form, if the
/// point carries a Monte Carlo series.
pub fn monte_carlo_deviation(point: &PointResult) -> Option<f64> {
    let mc = point.series.get(&SeriesKind::MonteCarloSazf)?;
    Some((mc.mean - point.closed_form).abs() / point.closed_form.abs())
}

pub fn emit_summary(result: &SweepResult, scenario: &Scenario) -> String {
    let axis = result.axis.name();
    let mut out = String::new();
    writeln!(
        out,
        "{axis:>14}  {:<7} {:>12} {:>12} {:>12} {:>10} {:>12}  flag",
        "policy", "R_sum MC", "R_sum CF", "cut-set", "gap/user", "EE"
    )
    .unwrap();
    if scenario.series.is_empty() {
        return out;
    }
    for point in &result.points {
        let mc = point
            .series
            .get(&SeriesKind::MonteCarloSazf)
            .map_or_else(|| "-".to_string(), |s| format!("{:.4}", s.mean));
        let cutset = point
            .series
            .get(&SeriesKind::CutsetExact)
            .map_or(point.cutset_high_snr, |s| s.mean);
        let flag = match monte_carlo_deviation(point) {
            Some(d) if d > DEVIATION_FLAG => format!("  !! MC off by {:.1}%", 100.0 * d),
            _ => String::new(),
        };
        writeln!(
            out,
            "{:>14}  {:<7} {mc:>12} {:>12.4} {cutset:>12.4} {:>10.4} {:>12.4}{flag}",
            format_axis(point.axis_value),
            point.policy.name(),
            point.closed_form,
            point.gap_per_user,
            point.energy_efficiency,
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(40.956123456789), "40.9561235");
        assert_eq!(format_sig9(0.27), "0.270000000");
        assert_eq!(format_sig9(-1.5e-3), "-0.00150000000");
        assert_eq!(format_sig9(123456789012.0), "123456789000");
        assert_eq!(format_sig9(9.9999999999), "10.0000000");
        assert_eq!(format_sig9(6.02e23), "6.02000000e23");
        assert_eq!(format_sig9(0.0), "0.00000000");
        for x in [1.0, 3.25, 2.5e-4, 7.77e7] {
            let digits = format_sig9(x).chars().filter(|c| c.is_ascii_digit()).count();
            let leading_zeros = if x < 1.0 {
                format_sig9(x).find(|c: char| ('1'..='9').contains(&c)).unwrap() - 1
            } else {
                0
            };
            assert_eq!(digits - leading_zeros, 9, "{x}");
        }
    }
}
