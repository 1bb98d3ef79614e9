//! Monte Carlo estimators for the statistical quantities the bounds are
//! stated in, each with quantified uncertainty.
//!
//! Everything derives from a single shared value vector per
//! `(function, distribution, stream)` — median, positive-part moment, tail
//! curves and geometry parameters are mutually consistent because they see
//! the same draw. A cross-validation split (statistics from the first half,
//! tails from the second) is available to expose plug-in bias.
//!
//! Conventions fixed here:
//!
//! * the empirical median is the lower order statistic (ties at the median
//!   make the deviation bounds trivial, so any consistent choice is safe);
//! * `F'(M+)` is a one-sided forward difference whose window adaptively holds
//!   about `sqrt(N)` points — bias O(h) against variance O(1/sqrt(N h));
//! * all tail probabilities carry exact Clopper–Pearson intervals so
//!   zero-count cells still certify honestly;
//! * the weak-L1 norm is a grid supremum (64 geometric points spanning the
//!   50th..99.99th percentile of the positive part), a certified lower bound
//!   of the true supremum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{b_max_on_sphere, FunctionDescriptor, PropertyReport};
use crate::rng::{map_rows, DistributionKind, StreamSpec};
use crate::special::{normal_cdf, normal_pdf, normal_quantile_unchecked, SQRT_2PI};
use crate::stats::{
    binomial_estimate, central_moments, clopper_pearson, count_at_most, count_below, det_sum_by,
    lower_median_index, quantile, resample_indices, sorted_copy, MCEstimate,
};
use crate::{Error, Result};

const TAG_BOOTSTRAP: u64 = 0xB007;
pub(crate) const BOOTSTRAP_RESAMPLES: usize = 400;
const WEAK_L1_GRID: usize = 64;

/// Shared sample values `f(X_i)` for one (function, distribution, stream).
#[derive(Debug, Clone)]
pub struct Values {
    pub raw: Vec<f64>,
    pub sorted: Vec<f64>,
    pub stream: StreamSpec,
    pub dist: DistributionKind,
}

impl Values {
    pub fn n(&self) -> usize {
        self.raw.len()
    }
}

/// Evaluate `f` over `n` fresh rows of `dist`; the result is a pure function
/// of `(f, dist, stream, n)` regardless of worker count.
pub fn collect_values(
    f: &FunctionDescriptor,
    dist: DistributionKind,
    n: usize,
    stream: &StreamSpec,
) -> Result<Values> {
    dist.validate()?;
    if f.dim != dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim,
            got: dist.dim(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidParam("need at least one sample".into()));
    }
    let raw = map_rows(dist, stream, n, |_, row| f.eval(row));
    let sorted = sorted_copy(&raw);
    Ok(Values {
        raw,
        sorted,
        stream: *stream,
        dist,
    })
}

/// Monte Carlo summary of `f(X)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryStats {
    pub median: MCEstimate,
    pub mean: MCEstimate,
    pub variance: MCEstimate,
    /// E (f - M)_+ against the estimated median.
    pub plus_moment: MCEstimate,
    /// Forward-difference estimate of F'(M+).
    pub cdf_slope: MCEstimate,
    /// Grid-supremum lower bound of sup_t t P((f-M)_+ > t).
    pub weak_l1: MCEstimate,
    /// a with 1/a = sqrt(2 pi) F'(M+); NaN when degenerate.
    pub dominance_scale: f64,
    /// Forward-difference window width.
    pub window_h: f64,
    /// Constant f: variance 0, slope undefined.
    pub degenerate: bool,
    pub n_samples: usize,
    pub confidence: f64,
}

/// Summarize from shared values; the bootstrap runs on a substream derived
/// from the values' own stream.
pub fn summarize_values(vals: &Values, confidence: f64) -> SummaryStats {
    let n = vals.n();
    let nf = n as f64;
    let sorted = &vals.sorted;
    let m_idx = lower_median_index(n);
    let median_hat = sorted[m_idx];

    let (mean, m2, _m3, m4) = central_moments(&vals.raw);
    let var_hat = m2 * nf / (nf - 1.0);
    let mean_est = MCEstimate::from_stderr(mean, (m2 / nf).sqrt(), confidence, n);
    let var_stderr = ((m4 - m2 * m2).max(0.0) / nf).sqrt();
    let var_est = MCEstimate::from_stderr(var_hat, var_stderr, confidence, n);

    let degenerate = sorted[0] == sorted[n - 1];
    if degenerate {
        let exact = MCEstimate::exact(median_hat);
        return SummaryStats {
            median: exact,
            mean: mean_est,
            variance: MCEstimate::exact(0.0),
            plus_moment: MCEstimate::exact(0.0),
            cdf_slope: MCEstimate::from_stderr(f64::NAN, f64::NAN, confidence, n),
            weak_l1: MCEstimate::exact(0.0),
            dominance_scale: f64::NAN,
            window_h: 0.0,
            degenerate: true,
            n_samples: n,
            confidence,
        };
    }

    // positive-part moment against the estimated median
    let plus_sum = det_sum_by(&vals.raw, |x| (x - median_hat).max(0.0));
    let plus_mean = plus_sum / nf;
    let plus_sq = det_sum_by(&vals.raw, |x| {
        let p = (x - median_hat).max(0.0);
        p * p
    });
    let plus_var = (plus_sq / nf - plus_mean * plus_mean).max(0.0);
    let plus_est = MCEstimate::from_stderr(plus_mean, (plus_var / nf).sqrt(), confidence, n);

    // forward-difference window holding about sqrt(N) points
    let k_window = (nf.sqrt().ceil() as usize).max(1);
    let hi_idx = (m_idx + k_window).min(n - 1);
    let window_h = sorted[hi_idx] - median_hat;
    let slope_point = if window_h > 0.0 {
        let c_hi = count_at_most(sorted, median_hat + window_h);
        let c_lo = count_at_most(sorted, median_hat);
        (c_hi - c_lo) as f64 / (nf * window_h)
    } else {
        f64::NAN
    };

    // bootstrap: resample indices into the sorted array; the replicate median
    // is the value at the median drawn index, the replicate slope re-counts
    // the fixed-width window above it
    let boot_stream = vals.stream.substream(TAG_BOOTSTRAP);
    let reps: Vec<(f64, f64)> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map_init(
            || Vec::<u32>::with_capacity(n),
            |scratch, r| {
                resample_indices(&boot_stream, r, n, scratch);
                let (_, k_star, _) = scratch.select_nth_unstable(m_idx);
                let k_star = *k_star as usize;
                let m_star = sorted[k_star];
                let slope_star = if window_h > 0.0 {
                    let ub_hi = count_at_most(sorted, m_star + window_h) as u32;
                    let ub_lo = count_at_most(sorted, m_star) as u32;
                    let mut c_hi = 0usize;
                    let mut c_lo = 0usize;
                    for &idx in scratch.iter() {
                        if idx < ub_hi {
                            c_hi += 1;
                        }
                        if idx < ub_lo {
                            c_lo += 1;
                        }
                    }
                    (c_hi - c_lo) as f64 / (nf * window_h)
                } else {
                    f64::NAN
                };
                (m_star, slope_star)
            },
        )
        .collect();
    let medians: Vec<f64> = reps.iter().map(|r| r.0).collect();
    let slopes: Vec<f64> = reps.iter().map(|r| r.1).collect();
    let median_est = bootstrap_estimate(median_hat, &medians, confidence, n);
    let slope_est = if window_h > 0.0 {
        bootstrap_estimate(slope_point, &slopes, confidence, n)
    } else {
        MCEstimate::from_stderr(f64::NAN, f64::NAN, confidence, n)
    };

    let weak_l1 = weak_l1_grid_sup(sorted, median_hat, confidence);

    let dominance_scale = if slope_est.value > 0.0 {
        1.0 / (SQRT_2PI * slope_est.value)
    } else {
        f64::NAN
    };

    SummaryStats {
        median: median_est,
        mean: mean_est,
        variance: var_est,
        plus_moment: plus_est,
        cdf_slope: slope_est,
        weak_l1,
        dominance_scale,
        window_h,
        degenerate: false,
        n_samples: n,
        confidence,
    }
}

/// One-call wrapper: fresh values, then [`summarize_values`].
pub fn summarize(
    f: &FunctionDescriptor,
    dist: DistributionKind,
    n: usize,
    stream: &StreamSpec,
    confidence: f64,
) -> Result<SummaryStats> {
    let vals = collect_values(f, dist, n, stream)?;
    Ok(summarize_values(&vals, confidence))
}

fn bootstrap_estimate(point: f64, reps: &[f64], confidence: f64, n: usize) -> MCEstimate {
    let sorted = sorted_copy(reps);
    let b = reps.len() as f64;
    let mean = reps.iter().sum::<f64>() / b;
    let sd = (reps.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (b - 1.0)).sqrt();
    let alpha = 1.0 - confidence;
    MCEstimate {
        value: point,
        stderr: sd,
        ci_low: quantile(&sorted, alpha / 2.0),
        ci_high: quantile(&sorted, 1.0 - alpha / 2.0),
        confidence,
        n_samples: n,
    }
}

fn weak_l1_grid_sup(sorted: &[f64], median: f64, confidence: f64) -> MCEstimate {
    let n = sorted.len();
    let nf = n as f64;
    let first_pos = count_at_most(sorted, median);
    if first_pos >= n {
        return MCEstimate::exact(0.0);
    }
    let positives = &sorted[first_pos..];
    let lo = (quantile(positives, 0.5) - median).max(positives[0] - median);
    let hi = (quantile(positives, 0.9999) - median).max(lo);
    if !(lo > 0.0) || hi <= lo {
        return MCEstimate::exact(0.0);
    }
    let ratio = (hi / lo).powf(1.0 / (WEAK_L1_GRID as f64 - 1.0));
    let mut best = (0.0f64, 0.0f64); // (t * p, p)
    let mut t = lo;
    for _ in 0..WEAK_L1_GRID {
        let p = (n - count_at_most(sorted, median + t)) as f64 / nf;
        if t * p > best.0 {
            best = (t * p, p);
        }
        t *= ratio;
    }
    let p = best.1;
    let stderr = if p > 0.0 {
        best.0 / p * (p * (1.0 - p) / nf).sqrt()
    } else {
        0.0
    };
    MCEstimate::from_stderr(best.0, stderr, confidence, n)
}

// ---------------------------------------------------------------------------
// Tail curves.
// ---------------------------------------------------------------------------

/// Which dispersion measure scales the thresholds, and which center the
/// deviation is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalizer {
    /// f - M < -t E(f-M)_+
    PlusMoment,
    /// f - M < -t sqrt(Var)
    SqrtVariance,
    /// f - E f < -t sqrt(Var) (mean-centered form)
    SqrtVarianceMean,
    /// f - M < -t M, i.e. f < (1-t) M; thresholds are in epsilon units
    MedianFraction,
    /// f - E f < -t E f
    MeanFraction,
}

impl Normalizer {
    pub fn label(&self) -> &'static str {
        match self {
            Normalizer::PlusMoment => "plus_moment",
            Normalizer::SqrtVariance => "sqrt_variance",
            Normalizer::SqrtVarianceMean => "sqrt_variance_mean",
            Normalizer::MedianFraction => "median_fraction",
            Normalizer::MeanFraction => "mean_fraction",
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            Normalizer::MedianFraction | Normalizer::MeanFraction => "eps",
            _ => "t",
        }
    }
}

/// Empirical lower-tail probabilities over a threshold grid, with exact
/// two-sided confidence intervals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailCurve {
    pub thresholds: Vec<f64>,
    pub probabilities: Vec<MCEstimate>,
    pub normalizer: Normalizer,
    pub unit: String,
    pub center: f64,
    pub scale: f64,
    pub n_samples: usize,
}

/// Lower-tail curve `P(f - center < -t * scale)` over an ascending grid.
pub fn tail_curve(
    vals: &Values,
    stats: &SummaryStats,
    normalizer: Normalizer,
    grid: &[f64],
    confidence: f64,
) -> Result<TailCurve> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParam(
            "threshold grid must be ascending and non-empty".into(),
        ));
    }
    let (center, scale) = match normalizer {
        Normalizer::PlusMoment => (stats.median.value, stats.plus_moment.value),
        Normalizer::SqrtVariance => (stats.median.value, stats.variance.value.sqrt()),
        Normalizer::SqrtVarianceMean => (stats.mean.value, stats.variance.value.sqrt()),
        Normalizer::MedianFraction => (stats.median.value, stats.median.value),
        Normalizer::MeanFraction => (stats.mean.value, stats.mean.value),
    };
    if !(scale > 0.0) {
        return Err(Error::InvalidParam(format!(
            "normalizer {} is not positive (degenerate sample?)",
            normalizer.label()
        )));
    }
    let n = vals.n();
    let probabilities = grid
        .iter()
        .map(|&t| {
            let k = count_below(&vals.sorted, center - t * scale);
            binomial_estimate(k, n, confidence)
        })
        .collect();
    Ok(TailCurve {
        thresholds: grid.to_vec(),
        probabilities,
        normalizer,
        unit: normalizer.unit().into(),
        center,
        scale,
        n_samples: n,
    })
}

/// Small-ball curve `P(f <= eps * M)` over an ascending epsilon grid.
pub fn smallball_curve(
    vals: &Values,
    median: f64,
    eps_grid: &[f64],
    confidence: f64,
) -> Result<TailCurve> {
    if eps_grid.is_empty() || eps_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParam(
            "epsilon grid must be ascending and non-empty".into(),
        ));
    }
    let n = vals.n();
    let probabilities = eps_grid
        .iter()
        .map(|&e| {
            let k = count_at_most(&vals.sorted, e * median);
            binomial_estimate(k, n, confidence)
        })
        .collect();
    Ok(TailCurve {
        thresholds: eps_grid.to_vec(),
        probabilities,
        normalizer: Normalizer::MedianFraction,
        unit: "eps".into(),
        center: median,
        scale: median,
        n_samples: n,
    })
}

// ---------------------------------------------------------------------------
// Geometry parameters.
// ---------------------------------------------------------------------------

/// Small-ball geometry of a norm body under the Gaussian measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryParams {
    /// beta = Var / M^2.
    pub beta: MCEstimate,
    /// Critical dimension E f^2 / b^2.
    pub k: MCEstimate,
    /// max of the norm on the Euclidean sphere.
    pub b: f64,
    pub b_exact: bool,
    /// d = min(n, -ln P(f <= M/2)).
    pub d: MCEstimate,
    /// True when the half-median ball was never hit and `d` is only the
    /// bound implied by the zero-cell confidence limit.
    pub d_is_lower_bound: bool,
    pub dim: usize,
}

/// Estimate beta(A), k(A), b(A), d(A) for a norm body under Gaussian input.
pub fn geometry_params(
    f: &FunctionDescriptor,
    vals: &Values,
    stats: &SummaryStats,
    confidence: f64,
) -> Result<GeometryParams> {
    if !f.is_norm {
        return Err(Error::InvalidParam(format!("{} is not a norm", f.name)));
    }
    if !matches!(vals.dist, DistributionKind::Gaussian { .. }) {
        return Err(Error::InvalidParam(
            "geometry parameters are defined for the Gaussian source".into(),
        ));
    }
    let n = vals.n();
    let nf = n as f64;
    let m = stats.median.value;
    let var = stats.variance.value;
    let beta = var / (m * m);
    // first-order error propagation through Var / M^2
    let rel = ((stats.variance.stderr / var).powi(2)
        + (2.0 * stats.median.stderr / m).powi(2))
    .sqrt();
    let beta_est = MCEstimate::from_stderr(beta, beta * rel, confidence, n);

    let sphere = b_max_on_sphere(f)?;
    let b2 = sphere.value * sphere.value;
    let mean_sq = det_sum_by(&vals.raw, |x| x * x) / nf;
    let var_sq = (det_sum_by(&vals.raw, |x| x * x * x * x) / nf - mean_sq * mean_sq).max(0.0);
    let k_est = MCEstimate::from_stderr(
        mean_sq / b2,
        (var_sq / nf).sqrt() / b2,
        confidence,
        n,
    );

    let hits = count_at_most(&vals.sorted, 0.5 * m);
    let dim = f.dim as f64;
    let (d_est, lower_bound) = if hits > 0 {
        let p = binomial_estimate(hits, n, confidence);
        let d = dim.min(-p.value.ln());
        // monotone map: CI endpoints swap
        let lo = dim.min(-p.ci_high.ln());
        let hi = dim.min(-p.ci_low.ln());
        (
            MCEstimate {
                value: d,
                stderr: p.stderr / p.value,
                ci_low: lo,
                ci_high: hi,
                confidence,
                n_samples: n,
            },
            false,
        )
    } else {
        let (_, upper) = clopper_pearson(0, n, confidence);
        let d = dim.min(-upper.ln());
        (
            MCEstimate {
                value: d,
                stderr: f64::NAN,
                ci_low: d,
                ci_high: dim,
                confidence,
                n_samples: n,
            },
            true,
        )
    };

    Ok(GeometryParams {
        beta: beta_est,
        k: k_est,
        b: sphere.value,
        b_exact: sphere.exact,
        d: d_est,
        d_is_lower_bound: lower_bound,
        dim: f.dim,
    })
}

// ---------------------------------------------------------------------------
// Negative moments.
// ---------------------------------------------------------------------------

/// Negative-moment estimate with heavy-tail diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NegMomentEstimate {
    pub q: f64,
    /// (E f^{-q})^{1/q} with delta-method stderr.
    pub estimate: MCEstimate,
    /// The raw mean E f^{-q}.
    pub mean_neg_moment: MCEstimate,
    /// Fraction of the sum carried by the ten largest f^{-q} terms.
    pub top10_share: f64,
    /// Set when the top ten order statistics carry more than 10% of the sum.
    pub heavy_tail_flagged: bool,
    /// Safety window actually applied: q < 0.5 / beta_hat.
    pub q_window: f64,
}

/// Estimate `(E f^{-q})^{1/q}` from shared values of a norm body.
///
/// Refuses `q` at or beyond half the small-ball validity window
/// `q < c/beta` (with c = 1/2 applied to the estimated beta), where the
/// integrand starts living on vanishing-probability events.
pub fn negative_moment(
    f: &FunctionDescriptor,
    vals: &Values,
    stats: &SummaryStats,
    q: f64,
    confidence: f64,
) -> Result<NegMomentEstimate> {
    if !f.is_norm {
        return Err(Error::InvalidParam(format!("{} is not a norm", f.name)));
    }
    if !(q > 0.0) {
        return Err(Error::InvalidParam("q must be positive".into()));
    }
    let m = stats.median.value;
    let beta = stats.variance.value / (m * m);
    let q_window = 0.5 / beta;
    if q >= q_window {
        return Err(Error::Refused(format!(
            "q = {q} exceeds the safety window q < 0.5/beta = {q_window:.3} \
             (divergence risk: the negative moment concentrates on the vanishing small-ball)"
        )));
    }
    if vals.sorted[0] <= 0.0 {
        return Err(Error::Refused(
            "sample contains non-positive norm values".into(),
        ));
    }
    let n = vals.n();
    let nf = n as f64;
    let total = det_sum_by(&vals.raw, |x| x.powf(-q));
    let mean = total / nf;
    let mean_sq = det_sum_by(&vals.raw, |x| x.powf(-2.0 * q)) / nf;
    let var = (mean_sq - mean * mean).max(0.0);
    let mean_est = MCEstimate::from_stderr(mean, (var / nf).sqrt(), confidence, n);

    let value = mean.powf(1.0 / q);
    let dvalue = (1.0 / q) * mean.powf(1.0 / q - 1.0);
    let est = MCEstimate::from_stderr(value, dvalue.abs() * mean_est.stderr, confidence, n);

    let top10: f64 = vals.sorted.iter().take(10).map(|x| x.powf(-q)).sum();
    let top10_share = top10 / total;

    Ok(NegMomentEstimate {
        q,
        estimate: est,
        mean_neg_moment: mean_est,
        top10_share,
        heavy_tail_flagged: top10_share > 0.10,
        q_window,
    })
}

// ---------------------------------------------------------------------------
// Distributional shape checks.
// ---------------------------------------------------------------------------

fn quantile_grid(sorted: &[f64], grid_size: usize) -> Vec<(f64, f64)> {
    // (p, s) pairs spanning the 1%..99% range
    (0..grid_size)
        .map(|j| {
            let p = 0.01 + 0.98 * j as f64 / (grid_size - 1) as f64;
            (p, quantile(sorted, p))
        })
        .collect()
}

/// Midpoint-concavity check of `s -> Phi^-1(F(s))` on a quantile grid.
///
/// For convex `f` under a Gaussian source the map is concave; the check
/// allows 3 propagated standard errors per pair. For concave test functions
/// the reversed (convex) shape is detected and reported.
pub fn phi_inv_concavity_check(vals: &Values, grid_size: usize) -> Result<PropertyReport> {
    if grid_size < 3 {
        return Err(Error::InvalidParam("grid_size must be at least 3".into()));
    }
    shape_check(
        vals,
        grid_size,
        "phi_inv_concavity",
        normal_quantile_unchecked,
        |p| 1.0 / normal_pdf(normal_quantile_unchecked(p)),
    )
}

/// Midpoint-concavity of `log F` on the quantile grid (log-concavity of the
/// CDF of a convex function under a log-concave measure).
pub fn log_concavity_check(vals: &Values, grid_size: usize) -> Result<PropertyReport> {
    if grid_size < 3 {
        return Err(Error::InvalidParam("grid_size must be at least 3".into()));
    }
    shape_check(vals, grid_size, "log_concavity", |p| p.ln(), |p| 1.0 / p)
}

fn shape_check(
    vals: &Values,
    grid_size: usize,
    label: &str,
    transform: impl Fn(f64) -> f64,
    dtransform: impl Fn(f64) -> f64,
) -> Result<PropertyReport> {
    let n = vals.n();
    let nf = n as f64;
    let sorted = &vals.sorted;
    let grid = quantile_grid(sorted, grid_size);
    // empirical transform value and its delta-method stderr at point s
    let at = |s: f64| -> Option<(f64, f64)> {
        let k = count_at_most(sorted, s);
        if k == 0 || k == n {
            return None;
        }
        let p = k as f64 / nf;
        let sd_f = (p * (1.0 - p) / nf).sqrt();
        Some((transform(p), sd_f * dtransform(p)))
    };
    let mut trials = 0usize;
    let mut concave_viol = 0usize;
    let mut convex_viol = 0usize;
    let mut max_violation = 0.0f64;
    for j in 0..grid.len() {
        for k in (j + 2)..grid.len() {
            let (s1, s2) = (grid[j].1, grid[k].1);
            let sm = 0.5 * (s1 + s2);
            let (Some((h1, e1)), Some((h2, e2)), Some((hm, em))) = (at(s1), at(s2), at(sm))
            else {
                continue;
            };
            trials += 1;
            let defect = hm - 0.5 * (h1 + h2);
            let sigma = (em * em + 0.25 * e1 * e1 + 0.25 * e2 * e2).sqrt();
            if defect < -3.0 * sigma {
                concave_viol += 1;
                max_violation = max_violation.max(-defect - 3.0 * sigma);
            }
            if -defect < -3.0 * sigma {
                convex_viol += 1;
            }
        }
    }
    let pass = concave_viol == 0;
    let note = if !pass && convex_viol == 0 {
        Some("convexity (reversed) detected: midpoint-convex within CI".into())
    } else {
        None
    };
    Ok(PropertyReport {
        property: format!("{label}[n={}]", vals.n()),
        trials,
        violations: concave_viol,
        max_violation,
        pass,
        note,
    })
}

/// Stochastic-dominance check: `F(s) <= Phi((s - M)/a)` with
/// `1/a = sqrt(2 pi) F'(M+)` on a 21-point quantile grid, plus the mean-
/// above-median consequence.
pub fn dominance_check(vals: &Values, stats: &SummaryStats) -> PropertyReport {
    if stats.degenerate || !(stats.cdf_slope.value > 0.0) {
        return PropertyReport {
            property: "dominance".into(),
            trials: 0,
            violations: 0,
            max_violation: 0.0,
            pass: true,
            note: Some("skipped: degenerate F'(M+)".into()),
        };
    }
    let n = vals.n();
    let nf = n as f64;
    let sorted = &vals.sorted;
    let m = stats.median.value;
    let a = stats.dominance_scale;
    let sigma_a = a * stats.cdf_slope.stderr / stats.cdf_slope.value;
    let mut violations = 0usize;
    let mut max_violation = 0.0f64;
    let grid = quantile_grid(sorted, 21);
    for &(_, s) in &grid {
        let p_hat = count_at_most(sorted, s) as f64 / nf;
        let z = (s - m) / a;
        let bound = normal_cdf(z);
        let sd_f = (p_hat * (1.0 - p_hat) / nf).sqrt();
        let sd_bound = normal_pdf(z) * z.abs() / a * sigma_a;
        let slack = 3.0 * (sd_f * sd_f + sd_bound * sd_bound).sqrt();
        if p_hat > bound + slack {
            violations += 1;
            max_violation = max_violation.max(p_hat - bound - slack);
        }
    }
    // Kwapien consequence: E f >= M, up to combined noise
    let combined = (stats.mean.stderr.powi(2) + stats.median.stderr.powi(2)).sqrt();
    let mean_ok = stats.mean.value >= m - 3.0 * combined;
    let pass = violations == 0 && mean_ok;
    PropertyReport {
        property: "dominance".into(),
        trials: grid.len() + 1,
        violations: violations + usize::from(!mean_ok),
        max_violation,
        pass,
        note: (!mean_ok).then(|| {
            format!(
                "mean {} fell below median {} minus 3 combined stderr",
                stats.mean.value, m
            )
        }),
    }
}

/// Lower bound on the CDF slope at the median in terms of the positive-part
/// moment: `F'(M+) >= 1/(32 E(f-M)_+)`. Returns the margin in propagated
/// standard errors (positive = satisfied with room).
pub fn claim_margin_sigmas(stats: &SummaryStats) -> f64 {
    let e_plus = stats.plus_moment.value;
    let claim = 1.0 / (32.0 * e_plus);
    let d_claim = claim / e_plus * stats.plus_moment.stderr;
    let sigma = (stats.cdf_slope.stderr.powi(2) + d_claim * d_claim).sqrt();
    (stats.cdf_slope.value - claim) / sigma
}
