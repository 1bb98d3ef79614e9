//! Estimation primitives shared by the Monte Carlo modules: point estimates
//! with uncertainty, exact binomial confidence intervals, deterministic
//! parallel reductions and a two-sample Kolmogorov–Smirnov distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::StreamSpec;
use crate::special::{betai_inv, normal_quantile_unchecked};

/// Fixed element count per partial sum so that parallel reductions fold in a
/// schedule-independent order.
const SUM_CHUNK: usize = 65_536;

/// A Monte Carlo point estimate with its uncertainty.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Confidence level of `[ci_low, ci_high]`.
    pub confidence: f64,
    pub n_samples: usize,
}

impl MCEstimate {
    /// Normal-approximation interval around `value`.
    pub fn from_stderr(value: f64, stderr: f64, confidence: f64, n_samples: usize) -> Self {
        let z = normal_quantile_unchecked(0.5 + confidence / 2.0);
        MCEstimate {
            value,
            stderr,
            ci_low: value - z * stderr,
            ci_high: value + z * stderr,
            confidence,
            n_samples,
        }
    }

    /// Exact value (no sampling uncertainty).
    pub fn exact(value: f64) -> Self {
        MCEstimate {
            value,
            stderr: 0.0,
            ci_low: value,
            ci_high: value,
            confidence: 1.0,
            n_samples: 0,
        }
    }
}

/// Exact (Clopper–Pearson) binomial confidence interval for `k` successes in
/// `n` trials.
///
/// Boundary cells use the one-sided convention: `k = 0` reports
/// `[0, 1 - alpha^(1/n)]` (about `4.6/n` at 99%) and `k = n` mirrors it, so
/// zero-hit tail cells still certify honestly.
pub fn clopper_pearson(k: usize, n: usize, confidence: f64) -> (f64, f64) {
    assert!(k <= n && n > 0);
    let alpha = 1.0 - confidence;
    let nf = n as f64;
    let low = if k == 0 {
        0.0
    } else if k == n {
        alpha.powf(1.0 / nf)
    } else {
        betai_inv(k as f64, (n - k + 1) as f64, alpha / 2.0)
    };
    let high = if k == n {
        1.0
    } else if k == 0 {
        1.0 - alpha.powf(1.0 / nf)
    } else {
        betai_inv((k + 1) as f64, (n - k) as f64, 1.0 - alpha / 2.0)
    };
    (low, high)
}

/// Binomial proportion with exact interval, as an [`MCEstimate`].
pub fn binomial_estimate(k: usize, n: usize, confidence: f64) -> MCEstimate {
    let p = k as f64 / n as f64;
    let (lo, hi) = clopper_pearson(k, n, confidence);
    MCEstimate {
        value: p,
        stderr: (p * (1.0 - p) / n as f64).sqrt(),
        ci_low: lo,
        ci_high: hi,
        confidence,
        n_samples: n,
    }
}

/// Deterministic parallel sum: partials over fixed-size chunks, folded in
/// chunk order. Bit-identical for any worker count.
pub fn det_sum(values: &[f64]) -> f64 {
    values
        .par_chunks(SUM_CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// Deterministic parallel sum of `g(x)` over the slice.
pub fn det_sum_by<G: Fn(f64) -> f64 + Sync>(values: &[f64], g: G) -> f64 {
    values
        .par_chunks(SUM_CHUNK)
        .map(|c| c.iter().map(|&x| g(x)).sum::<f64>())
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// First four central moments (mean, m2, m3, m4), deterministically.
pub fn central_moments(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let mean = det_sum(values) / n;
    let partials: Vec<(f64, f64, f64)> = values
        .par_chunks(SUM_CHUNK)
        .map(|c| {
            let mut s2 = 0.0;
            let mut s3 = 0.0;
            let mut s4 = 0.0;
            for &x in c {
                let d = x - mean;
                let d2 = d * d;
                s2 += d2;
                s3 += d2 * d;
                s4 += d2 * d2;
            }
            (s2, s3, s4)
        })
        .collect();
    let (m2, m3, m4) = partials.iter().fold((0.0, 0.0, 0.0), |acc, p| {
        (acc.0 + p.0, acc.1 + p.1, acc.2 + p.2)
    });
    (mean, m2 / n, m3 / n, m4 / n)
}

/// Sorted copy of `values` under the total order on f64.
pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut s = values.to_vec();
    s.par_sort_unstable_by(f64::total_cmp);
    s
}

/// Count of elements strictly below `x` in an ascending slice.
pub fn count_below(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|&v| v < x)
}

/// Count of elements `<= x` in an ascending slice.
pub fn count_at_most(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|&v| v <= x)
}

/// Empirical quantile of an ascending slice (lower interpolation).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let idx = ((sorted.len() as f64 - 1.0) * p).floor() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Index of the lower median of `n` elements.
pub fn lower_median_index(n: usize) -> usize {
    (n - 1) / 2
}

/// Two-sample Kolmogorov–Smirnov distance. Ties advance both pointers, so
/// identical samples score exactly zero.
pub fn ks_distance_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let sa = sorted_copy(a);
    let sb = sorted_copy(b);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let v = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= v {
            i += 1;
        }
        while j < sb.len() && sb[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Draws of `count` uniform indices below `n`, from the bootstrap substream
/// counter row `replicate`. Two indices per Philox call.
pub fn resample_indices(stream: &StreamSpec, replicate: u64, n: usize, out: &mut Vec<u32>) {
    out.clear();
    let key = stream.key();
    let n64 = n as u64;
    let calls = n / 2 + 1;
    for c in 0..calls as u64 {
        let (w0, w1) = crate::rng::philox2x64(c, replicate, key);
        out.push((w0 % n64) as u32);
        if out.len() < n {
            out.push((w1 % n64) as u32);
        }
        if out.len() >= n {
            break;
        }
    }
}

/// Round to `digits` significant decimal digits; used when serializing
/// reports so payload bytes are stable and carry a pinned precision.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let d = x.abs().log10().ceil();
    let power = digits as f64 - d;
    let magnitude = 10f64.powf(power);
    (x * magnitude).round() / magnitude
}
