//! Variance-aware Johnson–Lindenstrauss embedding into arbitrary normed
//! targets, with capacity planning and empirical failure-rate verification.
//!
//! The random matrix `G` has i.i.d. standard Gaussian columns, so for any
//! unit vector `theta` the image `G theta` is a standard Gaussian vector in
//! the target space; the one-sided distortion guarantee per pair is exactly a
//! lower-deviation event for `||Z||_X` and the failure bound is a union bound
//! over the C(n_points, 2) normalized differences (no sub-sampling).
//!
//! The lower-isometry threshold uses the mean `E||Z||_X` as scale, estimated
//! on an independent stream: plugging an estimate taken from the trial stream
//! itself would couple the errors and flatter the certification.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::FunctionDescriptor;
use crate::bounds::KAPPA;
use crate::rng::{fill_row, DistributionKind, StreamSpec};
use crate::{Error, Result};

/// Threshold regime for the distortion check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    /// Pairwise images stay above `(1 - delta) * scale * ||u_i - u_j||_2`.
    LowerIsometry { delta: f64 },
    /// Small-ball regime: images stay above `eps * scale * ||u_i - u_j||_2`
    /// (the threshold constant is 1, absorbed into the `(2 eps)` bound).
    SmallBall { eps: f64 },
}

impl Mode {
    /// Minimum admissible distortion ratio.
    pub fn threshold(&self) -> f64 {
        match self {
            Mode::LowerIsometry { delta } => 1.0 - delta,
            Mode::SmallBall { eps } => *eps,
        }
    }
}

/// Embedding configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub source_dim: usize,
    pub target_name: String,
    pub target_dim: usize,
    pub mode: Mode,
    /// E ||Z||_X, estimated on an independent stream.
    pub scale: f64,
    pub stream: StreamSpec,
}

/// Outcome of a batch of independent embedding trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialReport {
    pub trials: usize,
    pub failures: usize,
    pub failure_frequency: f64,
    /// Worst pairwise distortion ratio per trial.
    pub min_ratio_per_trial: Vec<f64>,
    /// Union-bound failure probability for this configuration.
    pub bound: f64,
    pub threshold: f64,
    /// Pairs skipped because the two points coincided.
    pub duplicate_pairs: usize,
}

/// Images `G u` of the points under one Gaussian matrix drawn from `stream`.
///
/// Column `j` of `G` is the Gaussian vector at stream index `j`; the image is
/// assembled column by column, so `G` is linear by construction.
pub fn embed(points: &[Vec<f64>], target_dim: usize, stream: &StreamSpec) -> Result<Vec<Vec<f64>>> {
    if target_dim == 0 {
        return Err(Error::InvalidParam("target dimension must be >= 1".into()));
    }
    let source_dim = points.first().map(|p| p.len()).unwrap_or(0);
    if points.iter().any(|p| p.len() != source_dim) || source_dim == 0 {
        return Err(Error::DimensionMismatch {
            expected: source_dim,
            got: points.iter().map(|p| p.len()).find(|&l| l != source_dim).unwrap_or(0),
        });
    }
    // materialize the columns once; n * N doubles
    let dist = DistributionKind::Gaussian { dim: target_dim };
    let mut columns = vec![0.0; source_dim * target_dim];
    columns
        .par_chunks_mut(target_dim)
        .enumerate()
        .for_each(|(j, col)| fill_row(dist, stream, j as u64, col));
    Ok(points
        .iter()
        .map(|u| {
            let mut img = vec![0.0; target_dim];
            for (j, &uj) in u.iter().enumerate() {
                if uj != 0.0 {
                    let col = &columns[j * target_dim..(j + 1) * target_dim];
                    for (o, &g) in img.iter_mut().zip(col) {
                        *o += uj * g;
                    }
                }
            }
            img
        })
        .collect())
}

/// Minimum pairwise distortion ratio
/// `||G(u_i - u_j)||_X / (scale * ||u_i - u_j||_2)` and the verdict against
/// the mode threshold. Coincident pairs are excluded and counted.
pub fn verify_lower_isometry(
    target: &FunctionDescriptor,
    mode: Mode,
    scale: f64,
    originals: &[Vec<f64>],
    images: &[Vec<f64>],
) -> Result<(f64, bool, usize)> {
    if !(scale > 0.0) {
        return Err(Error::InvalidParam(
            "scale must be a positive independent estimate of E||Z||".into(),
        ));
    }
    if originals.len() != images.len() {
        return Err(Error::DimensionMismatch {
            expected: originals.len(),
            got: images.len(),
        });
    }
    let mut min_ratio = f64::INFINITY;
    let mut duplicates = 0usize;
    let mut diff = vec![0.0; target.dim];
    for i in 0..originals.len() {
        for j in (i + 1)..originals.len() {
            let dist2: f64 = originals[i]
                .iter()
                .zip(&originals[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if dist2 == 0.0 {
                duplicates += 1;
                continue;
            }
            for ((o, a), b) in diff.iter_mut().zip(&images[i]).zip(&images[j]) {
                *o = a - b;
            }
            let ratio = target.eval(&diff) / (scale * dist2.sqrt());
            min_ratio = min_ratio.min(ratio);
        }
    }
    if min_ratio == f64::INFINITY {
        // 0 or 1 point, or all coincident: nothing can fail
        min_ratio = f64::INFINITY;
    }
    let pass = min_ratio >= mode.threshold() || min_ratio == f64::INFINITY;
    Ok((min_ratio, pass, duplicates))
}

/// Union-bound failure probability over all pairs.
///
/// Mode "lower isometry" pins the per-pair tail to the crude mean-centered
/// form `exp(-t^2/1000)` at `t = delta/sqrt(beta)` (valid for `t > 1`, hence
/// the precondition); mode "small ball" composes the pinned
/// `eps^(KAPPA/beta)/2` small-ball bound at `2 eps`.
pub fn failure_bound(n_points: usize, mode: Mode, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParam("beta must be positive".into()));
    }
    if n_points <= 1 {
        return Ok(0.0);
    }
    let pairs = (n_points * n_points) as f64 / 2.0;
    match mode {
        Mode::LowerIsometry { delta } => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::InvalidParam("delta must be in (0,1)".into()));
            }
            let t = delta / beta.sqrt();
            if t <= 1.0 {
                return Err(Error::Refused(format!(
                    "mode-i bound needs delta/sqrt(beta) > 1, got {t:.4}"
                )));
            }
            Ok((pairs * (-delta * delta / (1000.0 * beta)).exp()).min(1.0))
        }
        Mode::SmallBall { eps } => {
            if !(eps > 0.0 && eps < 0.5) {
                return Err(Error::InvalidParam("eps must be in (0, 1/2)".into()));
            }
            Ok((pairs * 0.5 * (2.0 * eps).powf(KAPPA / beta)).min(1.0))
        }
    }
}

/// Capacity of the mode-i configuration: the largest point count whose
/// failure bound stays at or below `target_failure_prob`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Capacity {
    /// The bound saturates at 1 and never exceeds the target.
    Unbounded,
    Points(usize),
}

pub fn capacity(delta: f64, beta: f64, target_failure_prob: f64) -> Result<Capacity> {
    if !(target_failure_prob > 0.0) {
        return Err(Error::InvalidParam("target must be positive".into()));
    }
    // validate the mode-i window up front
    failure_bound(2, Mode::LowerIsometry { delta }, beta)?;
    if target_failure_prob >= 1.0 {
        return Ok(Capacity::Unbounded);
    }
    let e_term = (-delta * delta / (1000.0 * beta)).exp();
    let mut n = (2.0 * target_failure_prob / e_term).sqrt().floor() as usize;
    n = n.max(1);
    // settle floating-point edges by direct evaluation
    while failure_bound(n + 1, Mode::LowerIsometry { delta }, beta)? <= target_failure_prob {
        n += 1;
    }
    while n > 1 && failure_bound(n, Mode::LowerIsometry { delta }, beta)? > target_failure_prob {
        n -= 1;
    }
    Ok(Capacity::Points(n))
}

/// How trial point sets are produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSource {
    /// Standard Gaussian cloud.
    GaussianCloud,
    /// Uniform on the Euclidean sphere.
    UniformSphere,
    /// One vector per row, comma-separated.
    CsvFile(String),
}

/// Generate a deterministic point set in the source space.
pub fn generate_points(
    source_dim: usize,
    n_points: usize,
    source: &PointSource,
    stream: &StreamSpec,
) -> Result<Vec<Vec<f64>>> {
    match source {
        PointSource::CsvFile(path) => {
            let text = std::fs::read_to_string(path)?;
            parse_points_csv(&text)
        }
        _ => {
            let dist = DistributionKind::Gaussian { dim: source_dim };
            let mut points = Vec::with_capacity(n_points);
            for i in 0..n_points as u64 {
                let mut p = vec![0.0; source_dim];
                fill_row(dist, stream, i, &mut p);
                if *source == PointSource::UniformSphere {
                    let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                    for v in p.iter_mut() {
                        *v /= norm;
                    }
                }
                points.push(p);
            }
            Ok(points)
        }
    }
}

/// Parse one vector per line, fields comma-separated.
pub fn parse_points_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match row {
            Ok(r) => points.push(r),
            Err(e) => {
                return Err(Error::Config(format!(
                    "point CSV line {}: {e}",
                    lineno + 1
                )))
            }
        }
    }
    if points.is_empty() {
        return Err(Error::Config("point CSV contained no vectors".into()));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::Config("point CSV rows have mixed dimensions".into()));
    }
    Ok(points)
}

/// Run `trials` independent embeddings of the same point set and tally
/// distortion failures against the mode threshold. `bound` is the
/// union-bound failure probability for the configuration (from
/// [`failure_bound`] with the body's estimated beta), echoed in the report.
pub fn run_trials(
    target: &FunctionDescriptor,
    spec: &EmbeddingSpec,
    points: &[Vec<f64>],
    trials: usize,
    bound: f64,
) -> Result<TrialReport> {
    let threshold = spec.mode.threshold();
    let outcomes: Vec<(f64, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial_stream = spec.stream.substream(0x7714 + t);
            let images = embed(points, spec.target_dim, &trial_stream)?;
            let (min_ratio, _, dups) =
                verify_lower_isometry(target, spec.mode, spec.scale, points, &images)?;
            Ok((min_ratio, dups))
        })
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let duplicate_pairs = outcomes.first().map(|o| o.1).unwrap_or(0);
    let failures = results.iter().filter(|&&r| r < threshold).count();
    Ok(TrialReport {
        trials,
        failures,
        failure_frequency: failures as f64 / trials.max(1) as f64,
        min_ratio_per_trial: results,
        bound,
        threshold,
        duplicate_pairs,
    })
}
