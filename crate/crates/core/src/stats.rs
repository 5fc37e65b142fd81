//! Sample statistics for auditing noise output.

use serde::Serialize;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn laplace_cdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}

/// One-sample Kolmogorov-Smirnov statistic `sup |F_n(x) - F(x)|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value `sqrt(-ln(alpha / 2) / 2) / sqrt(n)`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct LaplaceAudit {
    pub scale: f64,
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    pub expected_variance: f64,
    pub ks_statistic: f64,
    pub ks_critical: f64,
    pub max_abs: f64,
}

impl LaplaceAudit {
    pub const ALPHA: f64 = 0.01;

    pub fn new(samples: &[f64], scale: f64) -> Self {
        LaplaceAudit {
            scale,
            samples: samples.len(),
            mean: mean(samples),
            variance: variance(samples),
            expected_variance: 2.0 * scale * scale,
            ks_statistic: ks_statistic(samples, |x| laplace_cdf(x, scale)),
            ks_critical: ks_critical_value(samples.len(), Self::ALPHA),
            max_abs: samples.iter().fold(0.0, |m, x| f64::max(m, x.abs())),
        }
    }

    pub fn ks_passes(&self) -> bool {
        self.ks_statistic < self.ks_critical
    }

    pub fn variance_rel_error(&self) -> f64 {
        (self.variance - self.expected_variance).abs() / self.expected_variance
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_critical_matches_table() {
        // Tabulated asymptotic coefficient for alpha = 0.01 is 1.628.
        assert!((ks_critical_value(1, 0.01) - 1.6276).abs() < 1e-3);
        assert!((ks_critical_value(1, 0.05) - 1.3581).abs() < 1e-3);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        // Midpoint quantiles of Laplace(0, 1).
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let p = (i as f64 + 0.5) / n as f64;
                if p < 0.5 {
                    (2.0 * p).ln()
                } else {
                    -(2.0 * (1.0 - p)).ln()
                }
            })
            .collect();
        let d = ks_statistic(&xs, |x| laplace_cdf(x, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-9, "{d}");
    }

    #[test]
    fn ks_detects_wrong_scale() {
        let xs: Vec<f64> = (0..1000)
            .map(|i| {
                let p = (i as f64 + 0.5) / 1000.0;
                if p < 0.5 {
                    3.0 * (2.0 * p).ln()
                } else {
                    -3.0 * (2.0 * (1.0 - p)).ln()
                }
            })
            .collect();
        let d = ks_statistic(&xs, |x| laplace_cdf(x, 1.0));
        assert!(d > ks_critical_value(1000, 0.01));
    }

    #[test]
    fn cdf_shape() {
        assert_eq!(laplace_cdf(0.0, 2.0), 0.5);
        assert!((laplace_cdf(-2.0, 2.0) - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((laplace_cdf(1.0, 1.0) + laplace_cdf(-1.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moments() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(variance(&[1.0, 2.0, 3.0]), 1.0);
    }
}
