//! Empirical loss distributions with distribution-free quantile intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

pub const DEFAULT_QUANTILES: [f64; 5] = [0.5, 0.9, 0.95, 0.99, 0.995];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub q: f64,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossDistribution {
    /// Sorted ascending.
    pub samples: Vec<f64>,
    pub mean: f64,
    pub quantiles: Vec<QuantileEstimate>,
    pub confidence_level: f64,
}

/// 1-based order-statistic ranks `(lower, point, upper)` for quantile `q` of
/// `n` samples. The interval `[x_(l), x_(u)]` covers the true quantile with
/// probability at least `confidence`, with at most `(1 - confidence) / 2`
/// missing on each side.
pub fn order_statistic_ranks(n: usize, q: f64, confidence: f64) -> (usize, usize, usize) {
    assert!(n > 0);
    let point = ((q * n as f64).ceil() as usize).clamp(1, n);
    let tail = (1.0 - confidence) / 2.0;
    let bin = Binomial::new(q, n as u64).expect("q in [0, 1]");
    // With K = #{samples <= true quantile} ~ Bin(n, q), the interval
    // [x_(l), x_(u)] misses low with probability F(l - 1) and high with
    // probability 1 - F(u - 1).
    let f = |k: usize| bin.cdf(k as u64);
    // Largest l in 1..=n with F(l - 1) <= tail.
    let lower = {
        let (mut lo, mut hi) = (1usize, n);
        if f(0) > tail {
            1
        } else {
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                if f(mid - 1) <= tail {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            lo
        }
    };
    // Smallest u in 1..=n with F(u - 1) >= 1 - tail.
    let upper = {
        let (mut lo, mut hi) = (1usize, n);
        if f(n - 1) < 1.0 - tail {
            n
        } else {
            while lo < hi {
                let mid = (lo + hi) / 2;
                if f(mid - 1) >= 1.0 - tail {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            lo
        }
    };
    (lower.min(point), point, upper.max(point))
}

impl LossDistribution {
    pub fn from_samples(mut samples: Vec<f64>, quantiles: &[f64], confidence: f64) -> Self {
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let mean = if n == 0 { 0.0 } else { samples.iter().sum::<f64>() / n as f64 };
        let quantiles = if n == 0 {
            Vec::new()
        } else {
            quantiles
                .iter()
                .map(|&q| {
                    let (l, p, u) = order_statistic_ranks(n, q, confidence);
                    QuantileEstimate {
                        q,
                        point: samples[p - 1],
                        lower: samples[l - 1],
                        upper: samples[u - 1],
                    }
                })
                .collect()
        };
        LossDistribution {
            samples,
            mean,
            quantiles,
            confidence_level: confidence,
        }
    }

    /// Standard error of the sample mean.
    pub fn standard_error(&self) -> f64 {
        let n = self.samples.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let var = self.samples.iter().map(|x| (x - self.mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }

    /// Empirical `P(L > eps)`.
    pub fn survival(&self, eps: f64) -> f64 {
        let above = self.samples.len() - self.samples.partition_point(|&x| x <= eps);
        above as f64 / self.samples.len().max(1) as f64
    }

    pub fn quantile(&self, q: f64) -> Option<&QuantileEstimate> {
        self.quantiles.iter().find(|e| e.q == q)
    }
}
