//! Reference distributions used by the tests and the experiment harness.

use statrs::distribution::{ContinuousCDF, Normal};
use libm::erfc;

/// `P(|Z| ≥ |z|)` for standard normal `Z`.
pub fn two_sided_p_value(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `Φ⁻¹(p)` for `0 < p < 1`, polished by two Newton steps on the
/// accurate tail function.
pub fn normal_quantile(p: f64) -> f64 {
    let mut x = Normal::standard().inverse_cdf(p);
    if x.is_finite() {
        for _ in 0..2 {
            let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
            x -= (normal_cdf(x) - p) / density;
        }
    }
    x
}

/// The two-sided critical value `z_{level/2}`.
pub fn critical_value(level: f64) -> f64 {
    normal_quantile(1.0 - level / 2.0)
}

/// `P(X ≥ x)` for `X ~ χ²₁`.
pub fn chi2_1_upper_tail(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        erfc((x / 2.0).sqrt())
    }
}

/// Kolmogorov–Smirnov distance of `sample` to the standard normal.
pub fn ks_statistic(sample: &[f64]) -> Option<f64> {
    if sample.is_empty() {
        return None;
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = normal_cdf(x);
            (f - k as f64 / n).max((k + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    Some(d)
}

/// Asymptotic p-value of a KS distance `d` from `n` points, with the
/// Stephens small-sample adjustment.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normal_tails() {
        assert_eq!(two_sided_p_value(0.0), 1.0);
        assert_abs_diff_eq!(two_sided_p_value(1.959963984540054), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(critical_value(0.05), 1.959963984540054, epsilon = 1e-14);
        assert_abs_diff_eq!(two_sided_p_value(-3.0), 0.0026997960632601866, epsilon = 1e-15);
    }

    #[test]
    fn chi_square_tail() {
        assert_eq!(chi2_1_upper_tail(0.0), 1.0);
        assert_abs_diff_eq!(chi2_1_upper_tail(3.841458820694124), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn kolmogorov_tail() {
        // critical value 1.358 at the 5% level
        assert_abs_diff_eq!(ks_p_value(1.3581 / 1e3, 1_000_000), 0.05, epsilon = 1e-3);
        assert_eq!(ks_statistic(&[]), None);
        assert_abs_diff_eq!(ks_statistic(&[0.0]).unwrap(), 0.5, epsilon = 1e-15);
    }
}
