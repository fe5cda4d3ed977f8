use serde::{Deserialize, Serialize};

use crate::inference::Neumaier;

/// Sample mean with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    /// `sd / √count`; zero for a single value.
    pub se: f64,
    pub count: usize,
}

impl MeanSe {
    /// Summarizes values in the given order; `None` for an empty slice.
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let m = xs.len() as f64;
        let mut sum = Neumaier::default();
        xs.iter().for_each(|&x| sum.add(x));
        let mean = sum.total() / m;
        let mut ss = Neumaier::default();
        xs.iter().for_each(|&x| ss.add((x - mean) * (x - mean)));
        let se = if xs.len() > 1 {
            (ss.total() / (m - 1.0) / m).sqrt()
        } else {
            0.0
        };
        Some(MeanSe {
            mean,
            se,
            count: xs.len(),
        })
    }
}

/// Unbiased sample variance, in order.
pub fn sample_variance(xs: &[f64]) -> Option<f64> {
    let m = MeanSe::of(xs)?;
    (xs.len() > 1).then(|| m.se * m.se * m.count as f64)
}

/// A proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub rate: f64,
    pub se: f64,
    pub hits: usize,
    pub count: usize,
}

impl Rate {
    pub fn of(hits: usize, count: usize) -> Option<Self> {
        (count > 0).then(|| {
            let rate = hits as f64 / count as f64;
            Rate {
                rate,
                se: (rate * (1.0 - rate) / count as f64).sqrt(),
                hits,
                count,
            }
        })
    }

    pub fn from_flags(flags: impl IntoIterator<Item = bool>) -> Option<Self> {
        let (mut hits, mut count) = (0, 0);
        for f in flags {
            count += 1;
            hits += usize::from(f);
        }
        Self::of(hits, count)
    }
}

/// Ordinary least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_standard_error() {
        let s = MeanSe::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(MeanSe::of(&[]), None);
        assert_eq!(MeanSe::of(&[7.0]).unwrap().se, 0.0);
        assert!((sample_variance(&[1.0, 2.0, 3.0, 4.0]).unwrap() - 5.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn rates() {
        let r = Rate::from_flags([true, false, false, true]).unwrap();
        assert_eq!((r.rate, r.hits, r.count), (0.5, 2, 4));
        assert_eq!(r.se, 0.25);
        assert!(Rate::of(0, 0).is_none());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0].iter().map(|&x: &f64| (x, 3.0 * x.powi(2))).collect();
        assert!((log_log_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(log_log_slope(&pts[..1]), None);
    }
}
