//! Experiment suites: reproducible configurations binding the catalog,
//! estimators, bounds and the JL harness into machine-readable reports.
//!
//! A config fully determines the report payload — re-running with the same
//! seed reproduces it byte for byte regardless of worker count. The wall
//! clock lives outside the payload for exactly that reason.

use std::time::Instant;

use rayon::ThreadPoolBuilder;
use serde::{Deserialize, Serialize};

use crate::bodies::{self, FunctionDescriptor, PropertyReport};
use crate::bounds::{
    certify, deviation_bound, deviation_curve, smallball_curve_bound, BoundCurve, DeviationKind,
    SmallBallKind, Verdict, C_MEDIAN, C_VAR, KAPPA,
};
use crate::jl::{
    capacity, failure_bound, generate_points, run_trials, Capacity, EmbeddingSpec, Mode,
    PointSource, TrialReport,
};
use crate::mc::{
    claim_margin_sigmas, collect_values, dominance_check, geometry_params, log_concavity_check,
    negative_moment, phi_inv_concavity_check, smallball_curve, summarize_values, tail_curve,
    GeometryParams, NegMomentEstimate, Normalizer, SummaryStats, TailCurve, Values,
};
use crate::rng::{DistributionKind, StreamSpec, DEFAULT_CHUNK_SIZE};
use crate::special::{mills_upper, normal_cdf};
use crate::stats::{round_sig, sorted_copy};
use crate::{Error, Result};

const TAG_DATA: u64 = 0xDA7A;
const TAG_SCALE: u64 = 0x5CA1E;
const TAG_POINTS: u64 = 0x9017;

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Deviation,
    Smallball,
    Params,
    Negmoments,
    Gp,
    Jl,
    Calibration,
}

impl SuiteKind {
    pub fn label(&self) -> &'static str {
        match self {
            SuiteKind::Deviation => "deviation",
            SuiteKind::Smallball => "smallball",
            SuiteKind::Params => "params",
            SuiteKind::Negmoments => "negmoments",
            SuiteKind::Gp => "gp",
            SuiteKind::Jl => "jl",
            SuiteKind::Calibration => "calibration",
        }
    }
}

fn default_n() -> usize {
    1_000_000
}
fn default_confidence() -> f64 {
    0.99
}
fn default_chunk() -> usize {
    DEFAULT_CHUNK_SIZE
}
fn default_function() -> String {
    "lp:2:64".into()
}
fn default_q_grid() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
}
fn default_negmoment_c() -> f64 {
    8.0
}
fn default_negmoment_small_c() -> f64 {
    0.5
}

/// JL-suite parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JlConfig {
    pub source_dim: usize,
    pub n_points: usize,
    pub delta: f64,
    /// When set, run the small-ball regime at this epsilon instead of the
    /// lower-isometry regime at `delta`.
    #[serde(default)]
    pub eps: Option<f64>,
    pub trials: usize,
    pub point_source: PointSource,
    /// Target failure probability for the capacity echo.
    pub capacity_target: f64,
}

impl JlConfig {
    fn mode(&self) -> Mode {
        match self.eps {
            Some(eps) => Mode::SmallBall { eps },
            None => Mode::LowerIsometry { delta: self.delta },
        }
    }
}

impl Default for JlConfig {
    fn default() -> Self {
        JlConfig {
            source_dim: 100,
            n_points: 16,
            delta: 0.5,
            eps: None,
            trials: 200,
            point_source: PointSource::GaussianCloud,
            capacity_target: 1e-3,
        }
    }
}

/// Full experiment configuration; serializable to/from TOML.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: SuiteKind,
    #[serde(default = "default_function")]
    pub function: String,
    /// Source distribution, e.g. `gaussian:64`; empty = inferred from the
    /// function (Gaussian of the function's dimension).
    #[serde(default)]
    pub dist: String,
    #[serde(default = "default_n")]
    pub n_samples: usize,
    /// Threshold grid: `t` units for deviation suites, `eps` for small-ball.
    #[serde(default)]
    pub grid: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
    #[serde(default = "default_chunk")]
    pub chunk_size: usize,
    /// 0 = use all available cores.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    /// Estimate the summary on the first half and tails on the second, to
    /// expose plug-in bias.
    #[serde(default)]
    pub split_estimation: bool,
    #[serde(default = "default_q_grid")]
    pub q_grid: Vec<f64>,
    #[serde(default = "default_negmoment_c")]
    pub negmoment_c: f64,
    #[serde(default = "default_negmoment_small_c")]
    pub negmoment_small_c: f64,
    #[serde(default)]
    pub jl: Option<JlConfig>,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Both,
}

impl ExperimentConfig {
    /// Canonical defaults for a suite, fully explicit.
    pub fn default_for(suite: SuiteKind) -> Self {
        let (function, grid): (String, Vec<f64>) = match suite {
            SuiteKind::Deviation => ("lp:2:64".into(), step_grid(0.25, 6.0, 0.25)),
            SuiteKind::Smallball => ("lp:2:64".into(), vec![0.1, 0.2, 0.3, 0.4]),
            SuiteKind::Params => ("lp:2:64".into(), vec![]),
            SuiteKind::Negmoments => ("lp:2:64".into(), vec![]),
            SuiteKind::Gp => ("gp_brownian:256".into(), vec![0.1, 0.2, 0.3, 0.4]),
            SuiteKind::Jl => ("lp:2:32".into(), vec![]),
            SuiteKind::Calibration => ("linear:1".into(), step_grid(0.25, 6.0, 0.25)),
        };
        ExperimentConfig {
            suite,
            function,
            dist: String::new(),
            n_samples: default_n(),
            grid,
            seed: 42,
            stream_id: 0,
            chunk_size: default_chunk(),
            workers: 0,
            confidence: default_confidence(),
            split_estimation: false,
            q_grid: default_q_grid(),
            negmoment_c: default_negmoment_c(),
            negmoment_small_c: default_negmoment_small_c(),
            jl: if suite == SuiteKind::Jl {
                Some(JlConfig::default())
            } else {
                None
            },
            out: None,
            format: Format::Json,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    fn base_stream(&self) -> StreamSpec {
        StreamSpec {
            master_seed: self.seed,
            stream_id: self.stream_id,
            chunk_size: self.chunk_size,
        }
    }

    fn resolve_dist(&self, f: &FunctionDescriptor) -> Result<DistributionKind> {
        if self.dist.is_empty() {
            return Ok(DistributionKind::Gaussian { dim: f.dim });
        }
        parse_dist(&self.dist)
    }
}

/// Ascending inclusive grid `start, start+step, ..., stop`.
pub fn step_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let mut g = Vec::new();
    let mut t = start;
    while t <= stop + 1e-12 {
        g.push(round_sig(t, 12));
        t += step;
    }
    g
}

/// Parse `gaussian:64`, `exponential:64` or `chi_squared:2`.
pub fn parse_dist(s: &str) -> Result<DistributionKind> {
    let parts: Vec<&str> = s.split(':').collect();
    let dim = |d: &str| -> Result<usize> {
        d.parse()
            .map_err(|_| Error::Config(format!("bad distribution dimension in '{s}'")))
    };
    let kind = match parts.as_slice() {
        ["gaussian", d] => DistributionKind::Gaussian { dim: dim(d)? },
        ["exponential", d] => DistributionKind::Exponential { dim: dim(d)? },
        ["chi_squared", d] => DistributionKind::ChiSquared { dof: dim(d)? },
        _ => return Err(Error::Config(format!("unknown distribution '{s}'"))),
    };
    kind.validate()?;
    Ok(kind)
}

// ---------------------------------------------------------------------------
// Report structure.
// ---------------------------------------------------------------------------

/// An empirical curve paired with its bound and verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePair {
    pub name: String,
    pub tail: TailCurve,
    pub bound: BoundCurve,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NegMomentRow {
    pub q: f64,
    pub estimate: NegMomentEstimate,
    /// median * (E f^-q)^(1/q), the normalized reverse-Holder ratio.
    pub normalized_ratio: f64,
    /// C that would make exp(C sqrt(beta) + C q beta) tight for this q.
    pub implied_c: f64,
    /// Reference bound at the configured C.
    pub reference_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NegMomentsSection {
    pub beta: f64,
    pub rows: Vec<NegMomentRow>,
    pub fitted_c: f64,
    pub reference_c: f64,
    pub small_c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JlSection {
    pub spec: EmbeddingSpec,
    pub beta: f64,
    pub scale: f64,
    pub trial_report: TrialReport,
    pub freq_upper_allowance: f64,
    pub capacity: Capacity,
    pub capacity_target: f64,
}

/// Deterministic payload: everything the config determines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Payload {
    pub config: ExperimentConfig,
    pub version: String,
    /// Pinned constants used anywhere in this report.
    pub constants: Vec<(String, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<SummaryStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryParams>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub curves: Vec<CurvePair>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub checks: Vec<PropertyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negmoments: Option<NegMomentsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jl: Option<JlSection>,
    /// Named pass/fail verdicts, in execution order.
    pub verdicts: Vec<(String, bool)>,
    pub overall_pass: bool,
}

/// A finished experiment: deterministic payload plus an envelope for the
/// quantities that may legitimately differ between reruns (wall clock,
/// parallelism).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub payload: Payload,
    pub runtime_seconds: f64,
    pub workers: usize,
}

impl Report {
    /// Canonical payload serialization: pretty JSON with every number
    /// rounded to 12 significant digits. Byte-identical across reruns and
    /// worker counts.
    pub fn payload_json(&self) -> String {
        let mut v = serde_json::to_value(&self.payload).expect("payload serializes");
        round_json(&mut v);
        serde_json::to_string_pretty(&v).expect("payload prints")
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        round_json(&mut v);
        serde_json::to_string_pretty(&v).expect("report prints")
    }
}

fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(x) = n.as_f64() {
                if n.is_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(x, 12)) {
                        *n = r;
                    }
                }
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_json),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

// ---------------------------------------------------------------------------
// Runner.
// ---------------------------------------------------------------------------

/// Execute a configured suite. The report payload is a pure function of the
/// config; workers only affect the wall clock.
pub fn run(config: &ExperimentConfig) -> Result<Report> {
    let start = Instant::now();
    let payload = if config.workers > 0 {
        let pool = ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| run_payload(config))?
    } else {
        run_payload(config)?
    };
    Ok(Report {
        payload,
        runtime_seconds: start.elapsed().as_secs_f64(),
        workers: config.workers,
    })
}

fn run_payload(config: &ExperimentConfig) -> Result<Payload> {
    if !(config.confidence > 0.0 && config.confidence < 1.0) {
        return Err(Error::Config("confidence must be in (0,1)".into()));
    }
    if config.n_samples < 2 {
        return Err(Error::Config("n_samples must be at least 2".into()));
    }
    match config.suite {
        SuiteKind::Deviation => run_deviation(config),
        SuiteKind::Smallball => run_smallball(config),
        SuiteKind::Params => run_params(config),
        SuiteKind::Negmoments => run_negmoments(config),
        SuiteKind::Gp => run_gp(config),
        SuiteKind::Jl => run_jl(config),
        SuiteKind::Calibration => run_calibration(config),
    }
}

struct Prepared {
    f: FunctionDescriptor,
    dist: DistributionKind,
    stats_vals: Values,
    tail_vals: Values,
    stats: SummaryStats,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let f = bodies::from_name(&config.function)?;
    let dist = config.resolve_dist(&f)?;
    let stream = config.base_stream().substream(TAG_DATA);
    let vals = collect_values(&f, dist, config.n_samples, &stream)?;
    let (stats_vals, tail_vals) = if config.split_estimation {
        let half = vals.n() / 2;
        let a = Values {
            raw: vals.raw[..half].to_vec(),
            sorted: sorted_copy(&vals.raw[..half]),
            stream,
            dist,
        };
        let b = Values {
            raw: vals.raw[half..].to_vec(),
            sorted: sorted_copy(&vals.raw[half..]),
            stream,
            dist,
        };
        (a, b)
    } else {
        (vals.clone(), vals)
    };
    let stats = summarize_values(&stats_vals, config.confidence);
    Ok(Prepared {
        f,
        dist,
        stats_vals,
        tail_vals,
        stats,
    })
}

fn payload_base(config: &ExperimentConfig, constants: Vec<(String, f64)>) -> Payload {
    // worker count cannot influence any payload number; normalize it out of
    // the echo so payload bytes compare equal across parallelism settings
    let mut config = config.clone();
    config.workers = 0;
    Payload {
        config,
        version: env!("CARGO_PKG_VERSION").into(),
        constants,
        summary: None,
        geometry: None,
        curves: Vec::new(),
        checks: Vec::new(),
        negmoments: None,
        jl: None,
        verdicts: Vec::new(),
        overall_pass: true,
    }
}

fn push_verdict(payload: &mut Payload, name: &str, pass: bool) {
    payload.verdicts.push((name.into(), pass));
    payload.overall_pass &= pass;
}

fn push_curve(
    payload: &mut Payload,
    name: &str,
    tail: TailCurve,
    bound: BoundCurve,
) -> Result<()> {
    let verdict = certify(&tail, &bound)?;
    push_verdict(payload, name, verdict.pass);
    payload.curves.push(CurvePair {
        name: name.into(),
        tail,
        bound,
        verdict,
    });
    Ok(())
}

fn run_deviation(config: &ExperimentConfig) -> Result<Payload> {
    let p = prepare(config)?;
    if p.stats.degenerate {
        return Err(Error::Refused(
            "degenerate (constant) function: deviation suite not applicable".into(),
        ));
    }
    let grid = if config.grid.is_empty() {
        step_grid(0.25, 6.0, 0.25)
    } else {
        config.grid.clone()
    };
    let mut payload = payload_base(
        config,
        vec![
            ("sqrt_2pi_over_32".into(), C_MEDIAN),
            ("pi_over_1024".into(), C_VAR),
        ],
    );
    payload.summary = Some(p.stats.clone());

    match p.dist {
        DistributionKind::Gaussian { .. } => {
            let thm = tail_curve(
                &p.tail_vals,
                &p.stats,
                Normalizer::PlusMoment,
                &grid,
                config.confidence,
            )?;
            push_curve(
                &mut payload,
                "median_plus_moment",
                thm,
                deviation_curve(DeviationKind::GaussianMedian, &grid)?,
            )?;

            let var = tail_curve(
                &p.tail_vals,
                &p.stats,
                Normalizer::SqrtVariance,
                &grid,
                config.confidence,
            )?;
            push_curve(
                &mut payload,
                "median_sqrt_variance",
                var,
                deviation_curve(DeviationKind::GaussianVariance, &grid)?,
            )?;

            let clt_grid: Vec<f64> = grid.iter().copied().filter(|&t| t > 1.0).collect();
            if !clt_grid.is_empty() {
                let clt = tail_curve(
                    &p.tail_vals,
                    &p.stats,
                    Normalizer::SqrtVarianceMean,
                    &clt_grid,
                    config.confidence,
                )?;
                push_curve(
                    &mut payload,
                    "mean_clt",
                    clt,
                    deviation_curve(DeviationKind::GaussianMeanClt, &clt_grid)?,
                )?;
            }

            if let Some(l) = p.f.lipschitz_exact {
                // overlay in absolute units mapped onto the plus-moment grid
                let tail = tail_curve(
                    &p.tail_vals,
                    &p.stats,
                    Normalizer::PlusMoment,
                    &grid,
                    config.confidence,
                )?;
                let values = grid
                    .iter()
                    .map(|&t| {
                        deviation_bound(
                            DeviationKind::Lipschitz { l },
                            t * p.stats.plus_moment.value,
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                let bound = BoundCurve {
                    kind: "lipschitz".into(),
                    thresholds: grid.clone(),
                    values,
                    constants: vec![("lipschitz".into(), l)],
                };
                push_curve(&mut payload, "lipschitz_overlay", tail, bound)?;

                // variance bound in terms of the Lipschitz constant
                let var_ok = p.stats.variance.value
                    <= l * l + 3.0 * p.stats.variance.stderr;
                payload.checks.push(PropertyReport {
                    property: "var_ineq".into(),
                    trials: 1,
                    violations: usize::from(!var_ok),
                    max_violation: (p.stats.variance.value - l * l).max(0.0),
                    pass: var_ok,
                    note: Some(format!("Var {} vs L^2 {}", p.stats.variance.value, l * l)),
                });
                push_verdict(&mut payload, "var_ineq", var_ok);
            }

            let claim_sigmas = claim_margin_sigmas(&p.stats);
            let claim_ok = claim_sigmas >= 3.0;
            payload.checks.push(PropertyReport {
                property: "cdf_slope_claim".into(),
                trials: 1,
                violations: usize::from(!claim_ok),
                max_violation: 0.0,
                pass: claim_ok,
                note: Some(format!("margin {claim_sigmas:.2} sigma")),
            });
            push_verdict(&mut payload, "cdf_slope_claim", claim_ok);

            let dom = dominance_check(&p.tail_vals, &p.stats);
            push_verdict(&mut payload, "dominance", dom.pass);
            payload.checks.push(dom);

            let ehrhard = phi_inv_concavity_check(&p.tail_vals, 21)?;
            push_verdict(&mut payload, "phi_inv_concavity", ehrhard.pass);
            payload.checks.push(ehrhard);

            let logc = log_concavity_check(&p.tail_vals, 21)?;
            push_verdict(&mut payload, "log_concavity", logc.pass);
            payload.checks.push(logc);
        }
        DistributionKind::Exponential { .. } => {
            if !p.f.is_unconditional {
                return Err(Error::Refused(format!(
                    "{} is not 1-unconditional; the exponential-source bound needs that",
                    p.f.name
                )));
            }
            let thm = tail_curve(
                &p.tail_vals,
                &p.stats,
                Normalizer::PlusMoment,
                &grid,
                config.confidence,
            )?;
            push_curve(
                &mut payload,
                "exponential_plus_moment",
                thm,
                deviation_curve(DeviationKind::ExponentialUnconditional, &grid)?,
            )?;
        }
        DistributionKind::ChiSquared { .. } => {
            if !p.f.is_convex {
                return Err(Error::Refused(format!(
                    "{} is not convex; the chi-squared bound needs a coordinatewise \
                     nondecreasing convex map",
                    p.f.name
                )));
            }
            let thm = tail_curve(
                &p.tail_vals,
                &p.stats,
                Normalizer::PlusMoment,
                &grid,
                config.confidence,
            )?;
            push_curve(
                &mut payload,
                "chi_squared_plus_moment",
                thm,
                deviation_curve(DeviationKind::ChiSquared, &grid)?,
            )?;
        }
    }
    Ok(payload)
}

fn run_smallball(config: &ExperimentConfig) -> Result<Payload> {
    let p = prepare(config)?;
    if !p.f.is_norm {
        return Err(Error::Refused(format!(
            "{} is not a norm; the small-ball suite needs a gauge",
            p.f.name
        )));
    }
    let grid = if config.grid.is_empty() {
        vec![0.1, 0.2, 0.3, 0.4]
    } else {
        config.grid.clone()
    };
    let mut payload = payload_base(config, vec![("kappa".into(), KAPPA)]);
    payload.summary = Some(p.stats.clone());
    let m = p.stats.median.value;
    let beta = p.stats.variance.value / (m * m);
    let kind = match p.dist {
        DistributionKind::Gaussian { .. } => {
            let geom = geometry_params(&p.f, &p.stats_vals, &p.stats, config.confidence)?;
            payload.geometry = Some(geom);
            SmallBallKind::BetaGaussian { beta }
        }
        DistributionKind::Exponential { .. } => {
            if !p.f.is_unconditional {
                return Err(Error::Refused(format!(
                    "{} is not 1-unconditional; the exponential small-ball bound needs that",
                    p.f.name
                )));
            }
            SmallBallKind::BetaExponential { beta }
        }
        DistributionKind::ChiSquared { .. } => {
            return Err(Error::Refused(
                "small-ball suite runs under the Gaussian or exponential source".into(),
            ))
        }
    };
    let curve = smallball_curve(&p.tail_vals, m, &grid, config.confidence)?;
    // empirical log-log slope over the cells that saw hits
    let observed: Vec<(f64, f64)> = grid
        .iter()
        .zip(&curve.probabilities)
        .filter(|(_, p)| p.value > 0.0)
        .map(|(&e, p)| (e.ln(), p.value.ln()))
        .collect();
    if observed.len() >= 2 {
        let slope = fit_slope(&observed);
        payload.checks.push(PropertyReport {
            property: "empirical_log_slope".into(),
            trials: observed.len(),
            violations: 0,
            max_violation: 0.0,
            pass: true,
            note: Some(format!("fitted d(log P)/d(log eps) = {slope:.3}")),
        });
    }
    push_curve(&mut payload, "smallball", curve, smallball_curve_bound(kind, &grid)?)?;
    Ok(payload)
}

pub(crate) fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn run_params(config: &ExperimentConfig) -> Result<Payload> {
    let p = prepare(config)?;
    if !matches!(p.dist, DistributionKind::Gaussian { .. }) {
        return Err(Error::Refused(
            "geometry parameters are defined under the Gaussian source".into(),
        ));
    }
    let mut payload = payload_base(config, vec![("kappa".into(), KAPPA)]);
    payload.summary = Some(p.stats.clone());
    let geom = geometry_params(&p.f, &p.stats_vals, &p.stats, config.confidence)?;
    // the beta route dominates the critical-dimension route up to the
    // absorbed mean/median constant
    let beta_k_ok = 1.0 / geom.beta.value >= geom.k.value / 9.0;
    payload.checks.push(PropertyReport {
        property: "beta_vs_critical_dimension".into(),
        trials: 1,
        violations: usize::from(!beta_k_ok),
        max_violation: (geom.k.value / 9.0 - 1.0 / geom.beta.value).max(0.0),
        pass: beta_k_ok,
        note: Some(format!(
            "1/beta = {:.3}, k/9 = {:.3}",
            1.0 / geom.beta.value,
            geom.k.value / 9.0
        )),
    });
    push_verdict(&mut payload, "beta_vs_critical_dimension", beta_k_ok);
    payload.geometry = Some(geom);
    Ok(payload)
}

fn run_negmoments(config: &ExperimentConfig) -> Result<Payload> {
    let p = prepare(config)?;
    let mut payload = payload_base(
        config,
        vec![
            ("reference_C".into(), config.negmoment_c),
            ("small_c".into(), config.negmoment_small_c),
        ],
    );
    payload.summary = Some(p.stats.clone());
    let m = p.stats.median.value;
    let beta = p.stats.variance.value / (m * m);
    let mut rows = Vec::new();
    let mut fitted_c = 0.0f64;
    let q_grid = sorted_copy(&config.q_grid);
    for &q in &q_grid {
        let est = negative_moment(&p.f, &p.stats_vals, &p.stats, q, config.confidence)?;
        let normalized_ratio = m * est.estimate.value;
        let denom = beta.sqrt() + q * beta;
        let implied_c = normalized_ratio.ln().max(0.0) / denom;
        fitted_c = fitted_c.max(implied_c);
        let reference_bound =
            crate::bounds::negmoment_bound(q, beta, config.negmoment_c, config.negmoment_small_c)?;
        rows.push(NegMomentRow {
            q,
            estimate: est,
            normalized_ratio,
            implied_c,
            reference_bound,
        });
    }
    // generalized means of decreasing order: the normalized ratio cannot
    // decrease in q (up to MC noise)
    let monotone = rows
        .windows(2)
        .all(|w| w[1].normalized_ratio >= w[0].normalized_ratio - 1e-3);
    push_verdict(&mut payload, "normalized_ratio_monotone", monotone);
    let finite = rows.iter().all(|r| r.estimate.estimate.value.is_finite());
    push_verdict(&mut payload, "estimates_finite", finite);
    payload.negmoments = Some(NegMomentsSection {
        beta,
        rows,
        fitted_c,
        reference_c: config.negmoment_c,
        small_c: config.negmoment_small_c,
    });
    Ok(payload)
}

fn run_gp(config: &ExperimentConfig) -> Result<Payload> {
    let p = prepare(config)?;
    if p.f.gauge_spec().is_none() {
        return Err(Error::Refused(format!(
            "{} is not a Gaussian-process supremum body",
            p.f.name
        )));
    }
    if !matches!(p.dist, DistributionKind::Gaussian { .. }) {
        return Err(Error::Refused("gp suite needs the Gaussian source".into()));
    }
    let grid = if config.grid.is_empty() {
        vec![0.1, 0.2, 0.3, 0.4]
    } else {
        config.grid.clone()
    };
    let mut payload = payload_base(config, vec![("kappa".into(), KAPPA)]);
    payload.summary = Some(p.stats.clone());
    let m = p.stats.median.value;
    let v2 = p.stats.variance.value;
    let kind = SmallBallKind::GpSup {
        c: KAPPA,
        m2_over_v2: m * m / v2,
    };
    let curve = smallball_curve(&p.tail_vals, m, &grid, config.confidence)?;
    push_curve(&mut payload, "gp_smallball", curve, smallball_curve_bound(kind, &grid)?)?;
    Ok(payload)
}

fn run_jl(config: &ExperimentConfig) -> Result<Payload> {
    let jl_cfg = config.jl.clone().unwrap_or_default();
    let f = bodies::from_name(&config.function)?;
    if !f.is_norm {
        return Err(Error::Refused(format!(
            "{} is not a norm; the JL target must be a normed space",
            f.name
        )));
    }
    let base = config.base_stream();
    // scale and beta from an independent stream, never the trial stream
    let scale_vals = collect_values(
        &f,
        DistributionKind::Gaussian { dim: f.dim },
        config.n_samples,
        &base.substream(TAG_SCALE),
    )?;
    let scale_stats = summarize_values(&scale_vals, config.confidence);
    let scale = scale_stats.mean.value;
    let m = scale_stats.median.value;
    let beta = scale_stats.variance.value / (m * m);

    let mode = jl_cfg.mode();
    let bound = failure_bound(jl_cfg.n_points, mode, beta)?;
    let points = generate_points(
        jl_cfg.source_dim,
        jl_cfg.n_points,
        &jl_cfg.point_source,
        &base.substream(TAG_POINTS),
    )?;
    let spec = EmbeddingSpec {
        source_dim: jl_cfg.source_dim,
        target_name: f.name.clone(),
        target_dim: f.dim,
        mode,
        scale,
        stream: base.substream(0x771A15),
    };
    let trial_report = run_trials(&f, &spec, &points, jl_cfg.trials, bound)?;
    let freq = trial_report.failure_frequency;
    let stderr = (freq * (1.0 - freq) / jl_cfg.trials.max(1) as f64).sqrt();
    let allowance = bound + 3.0 * stderr;
    let freq_ok = freq <= allowance;
    // capacity planning is defined for the lower-isometry regime
    let cap = capacity(jl_cfg.delta, beta, jl_cfg.capacity_target)?;

    let mut payload = payload_base(
        config,
        vec![
            ("mode_i_exponent_divisor".into(), 1000.0),
            ("kappa".into(), KAPPA),
        ],
    );
    payload.summary = Some(scale_stats);
    push_verdict(&mut payload, "failure_frequency_within_bound", freq_ok);
    payload.jl = Some(JlSection {
        spec,
        beta,
        scale,
        trial_report,
        freq_upper_allowance: allowance,
        capacity: cap,
        capacity_target: jl_cfg.capacity_target,
    });
    Ok(payload)
}

fn run_calibration(config: &ExperimentConfig) -> Result<Payload> {
    let mut cfg = config.clone();
    cfg.function = "linear:1".into();
    cfg.dist = String::new();
    let p = prepare(&cfg)?;
    let mut payload = payload_base(
        config,
        vec![
            ("sqrt_2pi_over_32".into(), C_MEDIAN),
            ("pi_over_1024".into(), C_VAR),
        ],
    );
    payload.summary = Some(p.stats.clone());
    // closed-form normal facts; tolerances stated at 1e6 samples and scaled
    // as sqrt(1e6/N) for other sizes
    let scale = (1e6 / config.n_samples as f64).sqrt();
    let e_plus = (2.0 * std::f64::consts::PI).sqrt().recip();
    let cal = [
        ("median_zero", p.stats.median.value.abs(), 0.004 * scale),
        (
            "plus_moment",
            (p.stats.plus_moment.value - e_plus).abs(),
            0.002 * scale,
        ),
        (
            "variance_one",
            (p.stats.variance.value - 1.0).abs(),
            0.006 * scale,
        ),
        (
            "cdf_slope",
            (p.stats.cdf_slope.value - e_plus).abs(),
            0.02 * scale,
        ),
    ];
    for (name, err, tol) in cal {
        push_verdict(&mut payload, name, err <= tol);
    }
    // numeric identities, spot-checked here so every calibration run
    // re-certifies the special functions it depends on
    let mut mills_ok = true;
    let mut t = 0.0;
    while t <= 50.0 {
        if normal_cdf(-C_MEDIAN * t) > mills_upper(C_MEDIAN * t) * (1.0 + 1e-14) {
            mills_ok = false;
        }
        t += 0.05;
    }
    push_verdict(&mut payload, "mills_chain", mills_ok);
    let mut sym_ok = true;
    let mut x = -8.0;
    while x <= 8.0 {
        if (normal_cdf(x) + normal_cdf(-x) - 1.0).abs() > 1e-15 {
            sym_ok = false;
        }
        x += 0.01;
    }
    push_verdict(&mut payload, "cdf_symmetry", sym_ok);
    Ok(payload)
}

// ---------------------------------------------------------------------------
// Emission.
// ---------------------------------------------------------------------------

fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{:.*e}", 11, x)
}

fn bound_field(b: &crate::bounds::BoundValue) -> String {
    match b.value {
        Some(v) => format_sig(v),
        None => {
            // reconstruct mantissa x 10^exp from the log
            let exp = b.log10.floor();
            let mantissa = 10f64.powf(b.log10 - exp);
            format!("{:.6}e{}", mantissa, exp as i64)
        }
    }
}

/// Emit the report: JSON (full nested payload) and/or one CSV per curve with
/// columns `threshold,p_hat,ci_low,ci_high,bound,margin`.
///
/// Returns the written file paths.
pub fn emit(report: &Report, out_prefix: &str, format: Format) -> Result<Vec<String>> {
    let mut written = Vec::new();
    if matches!(format, Format::Json | Format::Both) {
        let path = format!("{out_prefix}.json");
        std::fs::write(&path, report.to_json())?;
        written.push(path);
    }
    if matches!(format, Format::Csv | Format::Both) {
        for pair in &report.payload.curves {
            let path = format!("{out_prefix}_{}.csv", pair.name);
            let mut text = String::from("threshold,p_hat,ci_low,ci_high,bound,margin\n");
            for (i, &t) in pair.tail.thresholds.iter().enumerate() {
                let p = &pair.tail.probabilities[i];
                let b = &pair.bound.values[i];
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    format_sig(t),
                    format_sig(p.value),
                    format_sig(p.ci_low),
                    format_sig(p.ci_high),
                    bound_field(b),
                    format_sig(pair.verdict.margins[i]),
                ));
            }
            std::fs::write(&path, text)?;
            written.push(path);
        }
    }
    Ok(written)
}
