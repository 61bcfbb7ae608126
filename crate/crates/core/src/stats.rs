//! Goodness-of-fit and interval estimates.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::interval::Side;

/// Two-sided standard normal quantile at level 0.01.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Asymptotic Kolmogorov critical value `c(alpha) = sqrt(-ln(alpha/2) / 2)`.
pub fn ks_critical(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsReport {
    pub statistic: f64,
    pub n_effective: usize,
    pub threshold: f64,
    pub alpha: f64,
    pub pass: bool,
}

impl KsReport {
    fn new(statistic: f64, n_eff: f64, alpha: f64) -> Self {
        let threshold = ks_critical(alpha) / n_eff.sqrt();
        KsReport {
            statistic,
            n_effective: n_eff.round() as usize,
            threshold,
            alpha,
            pass: statistic <= threshold,
        }
    }
}

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::Invalid("KS test needs a nonempty sample".into()));
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::Invalid("KS sample contains NaN".into()));
    }
    let mut v = sample.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    Ok(v)
}

/// Sup distance between the empirical CDF of `sample` and `cdf`.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64, alpha: f64) -> Result<KsReport> {
    let v = sorted(sample)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(KsReport::new(d, n, alpha))
}

/// Sup distance between two empirical CDFs.
pub fn ks_two_sample(x: &[f64], y: &[f64], alpha: f64) -> Result<KsReport> {
    let xs = sorted(x)?;
    let ys = sorted(y)?;
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    Ok(KsReport::new(d, n_eff, alpha))
}

/// Binomial proportion with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub successes: u64,
    pub n: u64,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Proportion {
    pub fn se(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.n as f64).sqrt()
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

pub fn wilson(successes: u64, n: u64, z: f64) -> Result<Proportion> {
    if n == 0 || successes > n {
        return Err(Error::Invalid("proportion needs 0 <= k <= n and n > 0".into()));
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    Ok(Proportion {
        successes,
        n,
        estimate: p,
        lo: (centre - half).max(0.0),
        hi: (centre + half).min(1.0),
    })
}

/// Sample mean with its normal standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

pub fn mean_se(sample: &[f64]) -> Result<MeanEstimate> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::Invalid("mean estimate needs at least two values".into()));
    }
    let nf = n as f64;
    let mean = sample.iter().sum::<f64>() / nf;
    let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    Ok(MeanEstimate {
        mean,
        se: (var / nf).sqrt(),
        n,
    })
}

/// Whether two independent estimates agree within `k` combined standard
/// errors.
pub fn agree(x: f64, se_x: f64, y: f64, se_y: f64, k: f64) -> bool {
    (x - y).abs() <= k * (se_x * se_x + se_y * se_y).sqrt()
}

/// Empirical quantile of a sorted sample (type 7, linear interpolation).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BucketStatus {
    Pass,
    Fail,
    Skipped,
}

/// Empirical versus reference mean of one functional on one
/// `(boundary, age range)` bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketReport {
    pub functional: &'static str,
    pub side: Side,
    pub s_low: f64,
    pub s_high: f64,
    pub n_obs: usize,
    pub empirical_mean: f64,
    pub reference_mean: f64,
    pub combined_se: f64,
    /// Variation of the reference across the bucket's age range.
    pub allowance: f64,
    pub status: BucketStatus,
}

/// Buckets with fewer observations are skipped rather than judged.
pub const MIN_BUCKET_OBS: usize = 100;

impl BucketReport {
    #[allow(clippy::too_many_arguments)]
    pub fn judge(
        functional: &'static str,
        side: Side,
        (s_low, s_high): (f64, f64),
        n_obs: usize,
        empirical_mean: f64,
        reference_mean: f64,
        combined_se: f64,
        allowance: f64,
    ) -> Self {
        let status = if n_obs < MIN_BUCKET_OBS {
            BucketStatus::Skipped
        } else if (empirical_mean - reference_mean).abs() <= 3.0 * combined_se + allowance {
            BucketStatus::Pass
        } else {
            BucketStatus::Fail
        };
        BucketReport {
            functional,
            side,
            s_low,
            s_high,
            n_obs,
            empirical_mean,
            reference_mean,
            combined_se,
            allowance,
            status,
        }
    }

    pub fn pass(&self) -> bool {
        self.status == BucketStatus::Pass
    }
}
