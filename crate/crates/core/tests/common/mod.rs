//! Shared helpers for the acceptance suite: independent numeric oracles
//! (never the library's own code paths) and a cache of per-body Monte Carlo
//! runs so criteria that certify different inequalities on the same body see
//! the same draw.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use gaussdev::bodies::{from_name, FunctionDescriptor};
use gaussdev::mc::{collect_values, summarize_values, SummaryStats, Values};
use gaussdev::rng::StreamSpec;
use gaussdev::suite::parse_dist;

pub const MASTER_SEED: u64 = 42;
pub const ACCEPT_N: usize = 1_000_000;

// ---------------------------------------------------------------------------
// Normal CDF oracle: central Taylor series + Lentz continued fraction for the
// tail, algorithmically disjoint from the library's rational-polynomial erfc.
// ---------------------------------------------------------------------------

const SQRT_PI: f64 = 1.7724538509055160272981674833411;

fn erf_taylor(z: f64) -> f64 {
    // erf(z) = 2/sqrt(pi) sum (-1)^k z^(2k+1) / (k! (2k+1)), fine for |z| <= 2
    let z2 = z * z;
    let mut term = z;
    let mut sum = 0.0;
    for k in 0..200 {
        let contrib = term / (2.0 * k as f64 + 1.0);
        sum += if k % 2 == 0 { contrib } else { -contrib };
        term *= z2 / (k as f64 + 1.0);
        if term.abs() < 1e-22 {
            break;
        }
    }
    2.0 / SQRT_PI * sum
}

fn erfc_cf(z: f64) -> f64 {
    // erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
    // via modified Lentz
    let tiny = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for k in 1..400 {
        let a = k as f64 / 2.0;
        d = z + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = z + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-z * z).exp() / SQRT_PI / f
}

/// Independent standard normal CDF, absolute error well below 1e-13 on
/// [-10, 10].
pub fn oracle_normal_cdf(x: f64) -> f64 {
    let u = -x / std::f64::consts::SQRT_2; // Phi(x) = erfc(u)/2
    if u >= 2.0 {
        0.5 * erfc_cf(u)
    } else if u <= -2.0 {
        1.0 - 0.5 * erfc_cf(-u)
    } else {
        0.5 * (1.0 - erf_taylor(u))
    }
}

// ---------------------------------------------------------------------------
// Exact log-gamma at integer and half-integer arguments, by summation.
// ---------------------------------------------------------------------------

/// ln Gamma(m/2) for integer m >= 1, via exact product formulas.
pub fn oracle_ln_gamma_half(m: u32) -> f64 {
    assert!(m >= 1);
    if m % 2 == 0 {
        // Gamma(k) = (k-1)!
        let k = m / 2;
        (1..k).map(|j| (j as f64).ln()).sum()
    } else {
        // Gamma(k + 1/2) = sqrt(pi) * prod_{j=0}^{k-1} (j + 1/2)
        let k = (m - 1) / 2;
        SQRT_PI.ln() + (0..k).map(|j| (j as f64 + 0.5).ln()).sum::<f64>()
    }
}

/// Moments of the chi distribution with n degrees of freedom:
/// mean = sqrt(2) Gamma((n+1)/2)/Gamma(n/2), variance = n - mean^2.
pub fn oracle_chi_moments(n: u32) -> (f64, f64) {
    let mean =
        std::f64::consts::SQRT_2 * (oracle_ln_gamma_half(n + 1) - oracle_ln_gamma_half(n)).exp();
    (mean, n as f64 - mean * mean)
}

/// E |g|^{-q} = 2^{-q/2} Gamma((1-q)/2) / Gamma(1/2), q < 1, via the frozen
/// Gamma(1/4) table value for the q = 1/2 spot check.
pub fn oracle_abs_gaussian_neg_half_moment() -> f64 {
    const GAMMA_QUARTER: f64 = 3.6256099082219083119;
    (2.0f64).powf(-0.25) * GAMMA_QUARTER / SQRT_PI
}

/// Regularized lower incomplete gamma P(a, u) by series (u < a + 1).
pub fn oracle_gamma_reg_lower(a: f64, u: f64) -> f64 {
    assert!(u >= 0.0 && u < a + 1.0);
    if u == 0.0 {
        return 0.0;
    }
    let ln_gamma_a1 = if (2.0 * a).fract() == 0.0 {
        oracle_ln_gamma_half((2.0 * a) as u32 + 2)
    } else {
        panic!("oracle supports half-integer a only")
    };
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut ap = a;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= u / ap;
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    (a * u.ln() - u - ln_gamma_a1).exp() * sum
}

/// ln P(chi_n <= x) through the chi-squared representation.
pub fn oracle_chi_cdf_ln(n: u32, x: f64) -> f64 {
    oracle_gamma_reg_lower(n as f64 / 2.0, x * x / 2.0).ln()
}

/// Binomial standard error of a proportion.
pub fn binom_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Least-squares slope of y on x.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------------------
// Shared per-body Monte Carlo runs.
// ---------------------------------------------------------------------------

pub struct BodyRun {
    pub f: FunctionDescriptor,
    pub vals: Values,
    pub stats: SummaryStats,
}

type Cache = Mutex<HashMap<String, Arc<BodyRun>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn fnv(key: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn compute_body_run(function: &str, dist_label: &str, n: usize) -> BodyRun {
    let f = from_name(function).expect(function);
    let dist = if dist_label.is_empty() {
        gaussdev::rng::DistributionKind::Gaussian { dim: f.dim }
    } else {
        parse_dist(dist_label).expect(dist_label)
    };
    let stream = StreamSpec::new(MASTER_SEED, fnv(&format!("{function}|{dist_label}")));
    let vals = collect_values(&f, dist, n, &stream).expect("values");
    let stats = summarize_values(&vals, 0.99);
    BodyRun { f, vals, stats }
}

/// Get-or-compute the shared run for `(function, dist, n)`. The coarse lock
/// serializes body computations across concurrently running criteria; each
/// body is evaluated once per test binary.
pub fn body_run(function: &str, dist_label: &str, n: usize) -> Arc<BodyRun> {
    let key = format!("{function}|{dist_label}|{n}");
    let mut map = cache().lock().unwrap();
    if let Some(run) = map.get(&key) {
        return Arc::clone(run);
    }
    let run = Arc::new(compute_body_run(function, dist_label, n));
    map.insert(key, Arc::clone(&run));
    run
}

/// Bodies exercised by the Gaussian deviation-bound criteria.
pub const GAUSSIAN_BODIES: [&str; 7] = [
    "lp:1:64",
    "lp:2:64",
    "lp:4:64",
    "linf:64",
    "linear:1",
    "polytope:32:200",
    "gp_brownian:256",
];

pub fn announce(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}
