//! Acceptance suite: every certification the project promises, one test per
//! criterion, each printing a single PASS/FAIL line (run with
//! `cargo test --test acceptance -- --nocapture` to see them).
//!
//! Expected values tagged to closed forms are frozen from the independent
//! oracles in `common` (series/continued-fraction normal CDF, exact
//! half-integer gamma sums, direct binomial arithmetic), never from the
//! library's own code paths.

mod common;

use std::time::Instant;

use common::*;
use gaussdev::bounds::{
    certify, deviation_bound, deviation_curve, smallball_curve_bound, DeviationKind,
    SmallBallKind, C_MEDIAN, C_VAR, KAPPA,
};
use gaussdev::jl::{capacity, failure_bound, generate_points, run_trials, Capacity, EmbeddingSpec, Mode, PointSource};
use gaussdev::mc::{
    claim_margin_sigmas, dominance_check, negative_moment, phi_inv_concavity_check,
    smallball_curve, tail_curve, Normalizer,
};
use gaussdev::rng::StreamSpec;
use gaussdev::special::normal_cdf;
use gaussdev::stats::count_at_most;
use gaussdev::suite::{run, step_grid, ExperimentConfig, JlConfig, SuiteKind};

fn thm_grid() -> Vec<f64> {
    step_grid(0.25, 6.0, 0.25)
}

#[test]
fn crit01_thm21_deviation_suite() {
    let grid = thm_grid();
    let mut worst_margin = f64::INFINITY;
    let mut all_pass = true;
    let mut detail = String::new();
    for name in GAUSSIAN_BODIES {
        let t0 = Instant::now();
        let mut run = body_run(name, "", ACCEPT_N);
        let mut elapsed = t0.elapsed().as_secs_f64();
        if elapsed < 0.5 {
            // another criterion already populated the cache; redo the full
            // pipeline off-cache so the runtime clause is measured honestly
            let t1 = Instant::now();
            run = std::sync::Arc::new(compute_body_run(name, "", ACCEPT_N));
            elapsed = t1.elapsed().as_secs_f64();
        }
        let tail = tail_curve(&run.vals, &run.stats, Normalizer::PlusMoment, &grid, 0.99).unwrap();
        let bound = deviation_curve(DeviationKind::GaussianMedian, &grid).unwrap();
        let verdict = certify(&tail, &bound).unwrap();
        all_pass &= verdict.pass;
        worst_margin = worst_margin.min(verdict.tightest_margin);
        detail.push_str(&format!(
            "{name}: {} in {elapsed:.0}s (tightest margin {:.4} at t={}); ",
            if verdict.pass { "ok" } else { "VIOLATED" },
            verdict.tightest_margin,
            verdict.tightest_threshold
        ));
        assert!(
            elapsed <= 180.0,
            "{name} exceeded the 3-minute per-body budget: {elapsed:.0}s"
        );
    }
    announce("1 (deviation vs median bound)", all_pass, &detail);
    assert!(all_pass, "{detail}");
    assert!(worst_margin > 0.0);
}

#[test]
fn crit02_variance_and_clt_forms() {
    let grid = thm_grid();
    let clt_grid: Vec<f64> = grid.iter().copied().filter(|&t| t > 1.0).collect();
    let mut all_pass = true;
    let mut detail = String::new();
    for name in GAUSSIAN_BODIES {
        let run = body_run(name, "", ACCEPT_N);
        let var_tail =
            tail_curve(&run.vals, &run.stats, Normalizer::SqrtVariance, &grid, 0.99).unwrap();
        let var_bound = deviation_curve(DeviationKind::GaussianVariance, &grid).unwrap();
        let v1 = certify(&var_tail, &var_bound).unwrap();
        let clt_tail = tail_curve(
            &run.vals,
            &run.stats,
            Normalizer::SqrtVarianceMean,
            &clt_grid,
            0.99,
        )
        .unwrap();
        let clt_bound = deviation_curve(DeviationKind::GaussianMeanClt, &clt_grid).unwrap();
        let v2 = certify(&clt_tail, &clt_bound).unwrap();
        all_pass &= v1.pass && v2.pass;
        detail.push_str(&format!(
            "{name}: var {} clt {}; ",
            if v1.pass { "ok" } else { "VIOLATED" },
            if v2.pass { "ok" } else { "VIOLATED" }
        ));
    }
    announce("2 (variance + CLT forms)", all_pass, &detail);
    assert!(all_pass, "{detail}");
}

#[test]
fn crit03_linear_functional_calibration() {
    let run = body_run("linear:1", "", ACCEPT_N);
    let s = &run.stats;
    let e_plus = 1.0 / (2.0 * std::f64::consts::PI).sqrt(); // E g_+ = 1/sqrt(2 pi)
    let checks = [
        ("median", s.median.value.abs(), 0.004),
        ("plus_moment", (s.plus_moment.value - e_plus).abs(), 0.002),
        ("variance", (s.variance.value - 1.0).abs(), 0.006),
        ("cdf_slope", (s.cdf_slope.value - e_plus).abs(), 0.02),
    ];
    let pass = checks.iter().all(|(_, err, tol)| err <= tol);
    let detail: Vec<String> = checks
        .iter()
        .map(|(n, e, t)| format!("{n} err {e:.2e} (tol {t})"))
        .collect();
    announce("3 (closed-form calibration)", pass, &detail.join(", "));
    for (name, err, tol) in checks {
        assert!(err <= tol, "{name}: {err} > {tol}");
    }
}

#[test]
fn crit04_cdf_slope_claim() {
    let mut all_pass = true;
    let mut detail = String::new();
    for name in GAUSSIAN_BODIES {
        let run = body_run(name, "", ACCEPT_N);
        let sigmas = claim_margin_sigmas(&run.stats);
        all_pass &= sigmas >= 3.0;
        detail.push_str(&format!("{name}: {sigmas:.1} sigma; "));
    }
    announce("4 (slope >= 1/(32 E(f-M)+) with margin)", all_pass, &detail);
    assert!(all_pass, "{detail}");
}

#[test]
fn crit05_kwapien_dominance() {
    let mut all_pass = true;
    let mut detail = String::new();
    for name in GAUSSIAN_BODIES {
        let run = body_run(name, "", ACCEPT_N);
        let rep = dominance_check(&run.vals, &run.stats);
        let combined =
            (run.stats.mean.stderr.powi(2) + run.stats.median.stderr.powi(2)).sqrt();
        let mean_ok = run.stats.mean.value >= run.stats.median.value - 3.0 * combined;
        all_pass &= rep.pass && mean_ok;
        detail.push_str(&format!(
            "{name}: grid {}, mean-above-median {}; ",
            if rep.pass { "ok" } else { "VIOLATED" },
            if mean_ok { "ok" } else { "VIOLATED" }
        ));
    }
    announce("5 (stochastic dominance + mean >= median)", all_pass, &detail);
    assert!(all_pass, "{detail}");
}

#[test]
fn crit06_ehrhard_concavity() {
    let mut all_pass = true;
    let mut detail = String::new();
    for name in GAUSSIAN_BODIES {
        let run = body_run(name, "", ACCEPT_N);
        let rep = phi_inv_concavity_check(&run.vals, 21).unwrap();
        all_pass &= rep.pass;
        detail.push_str(&format!(
            "{name}: {}/{} pairs ok; ",
            rep.trials - rep.violations,
            rep.trials
        ));
    }
    announce("6 (Phi^-1 o F midpoint-concave)", all_pass, &detail);
    assert!(all_pass, "{detail}");
}

#[test]
fn crit07_variance_vs_lipschitz() {
    let mut all_pass = true;
    let mut detail = String::new();
    for name in GAUSSIAN_BODIES {
        let run = body_run(name, "", ACCEPT_N);
        let Some(l) = run.f.lipschitz_exact else {
            continue;
        };
        let ok = run.stats.variance.value <= l * l + 3.0 * run.stats.variance.stderr;
        all_pass &= ok;
        detail.push_str(&format!(
            "{name}: Var {:.4} vs L^2 {:.4}; ",
            run.stats.variance.value,
            l * l
        ));
    }
    announce("7 (Var <= L^2)", all_pass, &detail);
    assert!(all_pass, "{detail}");
}

#[test]
fn crit08_exponential_unconditional() {
    let grid = thm_grid();
    let mut all_pass = true;
    let mut detail = String::new();
    for name in ["lp:1:64", "lp:2:64", "linf:64"] {
        let run = body_run(name, "exponential:64", ACCEPT_N);
        let tail = tail_curve(&run.vals, &run.stats, Normalizer::PlusMoment, &grid, 0.99).unwrap();
        let bound = deviation_curve(DeviationKind::ExponentialUnconditional, &grid).unwrap();
        let verdict = certify(&tail, &bound).unwrap();
        all_pass &= verdict.pass;
        detail.push_str(&format!(
            "{name}: tightest margin {:.4}; ",
            verdict.tightest_margin
        ));
    }
    announce("8 (exponential source, 1-unconditional bodies)", all_pass, &detail);
    assert!(all_pass, "{detail}");
}

#[test]
fn crit09_chi_squared_remark() {
    let grid = step_grid(0.5, 6.0, 0.5);
    let mut all_pass = true;
    let mut detail = String::new();
    for k in [1usize, 2, 5] {
        let run = body_run(
            &format!("identity_positive:{k}"),
            &format!("chi_squared:{k}"),
            ACCEPT_N,
        );
        let tail = tail_curve(&run.vals, &run.stats, Normalizer::PlusMoment, &grid, 0.99).unwrap();
        let bound = deviation_curve(DeviationKind::ChiSquared, &grid).unwrap();
        let verdict = certify(&tail, &bound).unwrap();
        all_pass &= verdict.pass;
        detail.push_str(&format!(
            "k={k}: tightest margin {:.4}; ",
            verdict.tightest_margin
        ));
    }
    announce("9 (chi-squared source, Phi(-t/2))", all_pass, &detail);
    assert!(all_pass, "{detail}");
}

#[test]
fn crit10_beta_scaling_for_euclidean() {
    let mut all_pass = true;
    let mut detail = String::new();
    for n in [64usize, 256, 1024] {
        let run = body_run(&format!("lp:2:{n}"), "", ACCEPT_N);
        let beta_n =
            run.stats.variance.value / run.stats.median.value.powi(2) * n as f64;
        // chi-distribution oracle: Var = n - (sqrt(2) G((n+1)/2)/G(n/2))^2
        let (mean, var) = oracle_chi_moments(n as u32);
        let var_ok = (run.stats.variance.value - var).abs()
            <= 4.0 * run.stats.variance.stderr + 1e-9;
        let in_band = (0.40..=0.60).contains(&beta_n);
        all_pass &= in_band && var_ok;
        detail.push_str(&format!(
            "n={n}: beta*n = {beta_n:.4} (oracle mean {mean:.3}, var {var:.4}); "
        ));
    }
    announce("10 (beta(l2^n) * n in [0.40, 0.60])", all_pass, &detail);
    assert!(all_pass, "{detail}");
}

#[test]
fn crit11a_sup_norm_bound_looseness() {
    // the variance-form bound overshoots the true sup-norm small deviation
    // by far more than 10x at eps = 0.25
    let run = body_run("linf:4096", "", ACCEPT_N);
    let m = run.stats.median.value;
    let beta = run.stats.variance.value / (m * m);
    let hits = count_at_most(&run.vals.sorted, 0.75 * m);
    let p_upper = gaussdev::stats::binomial_estimate(hits, run.vals.n(), 0.99).ci_high;
    let bound = deviation_bound(DeviationKind::GaussianVariance, 0.25 / beta.sqrt())
        .unwrap()
        .as_f64();
    let pass = p_upper <= bound / 10.0;
    announce(
        "11a (sup-norm bound loose by >= 10x)",
        pass,
        &format!(
            "P(f < 0.75 M) upper CI {p_upper:.2e} vs bound/10 = {:.2e} (beta {beta:.5})",
            bound / 10.0
        ),
    );
    assert!(pass);
}

#[test]
fn crit11b_sup_norm_empirical_vs_integral_oracle() {
    // The stated check: the empirical probability must sit within +-50% of
    // the one-dimensional integral oracle (2 Phi(0.75 M) - 1)^4096. With the
    // actual median M ~ 3.76 the oracle is ~3e-9, which one million samples
    // cannot see (the stated reference value 1.1e-4 corresponds to the
    // asymptotic median sqrt(2 ln n) ~ 4.08, not to the real one). The
    // criterion is therefore asserted as written and fails honestly.
    let run = body_run("linf:4096", "", ACCEPT_N);
    let m = run.stats.median.value;
    let p_hat = count_at_most(&run.vals.sorted, 0.75 * m) as f64 / run.vals.n() as f64;
    let p_one = 2.0 * oracle_normal_cdf(0.75 * m) - 1.0;
    let oracle = (4096.0 * p_one.ln()).exp();
    let pass = (p_hat - oracle).abs() <= 0.5 * oracle;
    announce(
        "11b (sup-norm empirical within 50% of 1-d oracle)",
        pass,
        &format!("empirical {p_hat:.2e} vs oracle {oracle:.2e} at M = {m:.4}"),
    );
    assert!(
        pass,
        "empirical {p_hat:.3e} is not within 50% of the oracle {oracle:.3e}; \
         the oracle itself shows the event is unobservable at N = 1e6"
    );
}

#[test]
fn crit12_smallball_gaussian() {
    let eps = vec![0.1, 0.2, 0.3, 0.4];
    let mut all_pass = true;
    let mut detail = String::new();
    for name in ["lp:2:64", "polytope:32:200"] {
        let run = body_run(name, "", ACCEPT_N);
        let m = run.stats.median.value;
        let beta = run.stats.variance.value / (m * m);
        let curve = smallball_curve(&run.vals, m, &eps, 0.99).unwrap();
        let bound =
            smallball_curve_bound(SmallBallKind::BetaGaussian { beta }, &eps).unwrap();
        let verdict = certify(&curve, &bound).unwrap();
        all_pass &= verdict.pass;
        detail.push_str(&format!(
            "{name}: tightest margin {:.4}; ",
            verdict.tightest_margin
        ));
    }
    // slope of the true sup-ball curve for l2^64 over this eps range, from
    // the chi-density oracle (the events are far below MC resolution: the
    // oracle stands in for the empirical curve the criterion names)
    let run = body_run("lp:2:64", "", ACCEPT_N);
    let m = run.stats.median.value;
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .map(|&e| (e.ln(), oracle_chi_cdf_ln(64, e * m)))
        .collect();
    let slope = fit_slope(&pts);
    let slope_ok = (56.0..=72.0).contains(&slope);
    all_pass &= slope_ok;
    detail.push_str(&format!("l2 oracle log-slope {slope:.1} (want 64 +- 8)"));
    announce("12 (Gaussian small-ball vs eps^(kappa/beta)/2)", all_pass, &detail);
    assert!(all_pass, "{detail}");
}

#[test]
fn crit13_smallball_exponential() {
    let eps = vec![0.1, 0.2, 0.3, 0.4];
    let run = body_run("lp:1:64", "exponential:64", ACCEPT_N);
    let m = run.stats.median.value;
    let beta = run.stats.variance.value / (m * m);
    let curve = smallball_curve(&run.vals, m, &eps, 0.99).unwrap();
    let bound = smallball_curve_bound(SmallBallKind::BetaExponential { beta }, &eps).unwrap();
    let verdict = certify(&curve, &bound).unwrap();
    announce(
        "13 (exponential small-ball)",
        verdict.pass,
        &format!(
            "l1:64 beta {beta:.5}, tightest margin {:.4}",
            verdict.tightest_margin
        ),
    );
    assert!(verdict.pass);
}

#[test]
fn crit14_gp_supremum_smallball() {
    let eps = vec![0.1, 0.2, 0.3, 0.4];
    let run = body_run("gp_brownian:256", "", ACCEPT_N);
    let m = run.stats.median.value;
    let v2 = run.stats.variance.value;
    let curve = smallball_curve(&run.vals, m, &eps, 0.99).unwrap();
    let bound = smallball_curve_bound(
        SmallBallKind::GpSup {
            c: KAPPA,
            m2_over_v2: m * m / v2,
        },
        &eps,
    )
    .unwrap();
    let verdict = certify(&curve, &bound).unwrap();
    announce(
        "14 (Brownian supremum small-ball)",
        verdict.pass,
        &format!(
            "M {m:.4}, v^2 {v2:.5}, M^2/v^2 {:.2}, tightest margin {:.4}",
            m * m / v2,
            verdict.tightest_margin
        ),
    );
    assert!(verdict.pass);
}

#[test]
fn crit15a_negative_moments_estimates() {
    let run = body_run("lp:2:64", "", ACCEPT_N);
    let qs = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
    let m = run.stats.median.value;
    let beta = run.stats.variance.value / (m * m);
    let mut detail = String::new();
    let mut ratios = Vec::new();
    let mut fitted_c = 0.0f64;
    for &q in &qs {
        let nm = negative_moment(&run.f, &run.vals, &run.stats, q, 0.99).unwrap();
        assert!(nm.estimate.value.is_finite(), "q={q} diverged");
        let ratio = m * nm.estimate.value;
        fitted_c = fitted_c.max(ratio.ln().max(0.0) / (beta.sqrt() + q * beta));
        ratios.push(ratio);
        detail.push_str(&format!("q={q}: ratio {ratio:.4}; "));
    }
    let monotone = ratios.windows(2).all(|w| w[1] >= w[0] - 1e-6);
    // n = 1 spot check against the exact Gamma-function oracle
    let spot = body_run("lp:2:1", "", ACCEPT_N);
    let nm = negative_moment(&spot.f, &spot.vals, &spot.stats, 0.5, 0.99).unwrap();
    let oracle = oracle_abs_gaussian_neg_half_moment();
    let spot_ok = (nm.mean_neg_moment.value - oracle).abs() <= 0.01 * oracle;
    detail.push_str(&format!(
        "spot E|g|^-1/2 = {:.5} vs oracle {oracle:.5}; fitted C = {fitted_c:.3} (report only)",
        nm.mean_neg_moment.value
    ));
    let pass = monotone && spot_ok;
    announce("15a (negative moments: finite, monotone, spot)", pass, &detail);
    assert!(monotone, "normalized ratio not monotone: {ratios:?}");
    assert!(spot_ok, "spot check off: {} vs {oracle}", nm.mean_neg_moment.value);
}

#[test]
fn crit15b_negative_moment_heavy_tail_clean() {
    // The diagnostic flags when the ten largest f^{-q} terms carry more than
    // 10% of the sum. At q = 32 = n/2 the estimator sits exactly on the
    // infinite-variance boundary (E f^{-2q} diverges for chi_64), where the
    // smallest order statistics structurally carry a macroscopic share, so
    // this clause is asserted as stated and expected to fail there.
    let run = body_run("lp:2:64", "", ACCEPT_N);
    let mut detail = String::new();
    let mut all_clean = true;
    for q in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        let nm = negative_moment(&run.f, &run.vals, &run.stats, q, 0.99).unwrap();
        all_clean &= !nm.heavy_tail_flagged;
        detail.push_str(&format!("q={q}: top-10 share {:.1}%; ", nm.top10_share * 100.0));
    }
    announce("15b (heavy-tail diagnostic clean)", all_clean, &detail);
    assert!(all_clean, "{detail}");
}

#[test]
fn crit16_jl_suite() {
    let target_run = body_run("lp:2:32", "", ACCEPT_N);
    let scale = target_run.stats.mean.value;
    let m = target_run.stats.median.value;
    let beta = target_run.stats.variance.value / (m * m);
    let mode = Mode::LowerIsometry { delta: 0.5 };
    let bound = failure_bound(16, mode, beta).unwrap();

    let base = StreamSpec::new(MASTER_SEED, 0x71AA);
    let points = generate_points(100, 16, &PointSource::GaussianCloud, &base.substream(1)).unwrap();
    let spec = EmbeddingSpec {
        source_dim: 100,
        target_name: target_run.f.name.clone(),
        target_dim: 32,
        mode,
        scale,
        stream: base.substream(2),
    };
    let report = run_trials(&target_run.f, &spec, &points, 200, bound).unwrap();
    let stderr = binom_stderr(report.failure_frequency, 200);
    let freq_ok = report.failure_frequency <= bound + 3.0 * stderr;

    // capacity must reproduce the closed-form inversion; the brute scan is
    // the independent oracle
    let cap = capacity(0.5, beta, 1e-3).unwrap();
    let mut scan = 1usize;
    while failure_bound(scan + 1, mode, beta).unwrap() <= 1e-3 {
        scan += 1;
    }
    let e_term = (-0.25f64 / (1000.0 * beta)).exp();
    let closed = ((2.0 * 1e-3 / e_term).sqrt().floor() as usize).max(1);
    let cap_ok = cap == Capacity::Points(scan) && scan == closed;

    let pass = freq_ok && cap_ok;
    announce(
        "16 (JL failure rate + capacity inversion)",
        pass,
        &format!(
            "freq {} / bound {bound:.3e}, capacity {cap:?} vs scan {scan} vs closed form {closed}",
            report.failure_frequency
        ),
    );
    assert!(freq_ok);
    assert!(cap_ok);
}

#[test]
fn crit17_numerics() {
    // (a) CDF against the independent oracle on a 1601-point grid over [-8, 8]
    let mut max_err = 0.0f64;
    for i in 0..=1600 {
        let x = -8.0 + i as f64 * 0.01;
        let err = (normal_cdf(x) - oracle_normal_cdf(x)).abs();
        max_err = max_err.max(err);
    }
    let cdf_ok = max_err <= 1e-12;
    // supplementary: the library-level contract holds at 1e-14 over [-10, 10]
    let mut wide_err = 0.0f64;
    for i in 0..=800 {
        let x = -10.0 + i as f64 * 0.025;
        wide_err = wide_err.max((normal_cdf(x) - oracle_normal_cdf(x)).abs());
    }
    let cdf_ok = cdf_ok && wide_err <= 1e-14;
    // (b) Mills chain on [0, 50]
    let mut mills_ok = true;
    let mut t = 0.0;
    while t <= 50.0 {
        let lhs = normal_cdf(-C_MEDIAN * t);
        let rhs = 0.5 * (-C_VAR * t * t).exp();
        if lhs > rhs * (1.0 + 1e-14) {
            mills_ok = false;
        }
        t += 0.01;
    }
    // (c) strict CLT comparison on (1, 50]
    let mut clt_ok = true;
    let mut t = 1.01;
    while t <= 50.0 {
        let sharp = 0.5 * (-C_VAR * (t - 1.0) * (t - 1.0)).exp();
        let crude = (-t * t / 1000.0).exp();
        if !(sharp < crude) {
            clt_ok = false;
        }
        t += 0.01;
    }
    let pass = cdf_ok && mills_ok && clt_ok;
    announce(
        "17 (numerics: CDF oracle, Mills chain, CLT strictness)",
        pass,
        &format!("max CDF err {max_err:.2e}, mills {mills_ok}, clt {clt_ok}"),
    );
    assert!(cdf_ok, "max err {max_err}");
    assert!(mills_ok);
    assert!(clt_ok);
}

#[test]
fn crit18_determinism_across_workers() {
    let mut configs: Vec<ExperimentConfig> = Vec::new();

    let mut c = ExperimentConfig::default_for(SuiteKind::Deviation);
    c.function = "lp:2:16".into();
    c.n_samples = 30_000;
    c.grid = step_grid(0.5, 3.0, 0.5);
    configs.push(c);

    let mut c = ExperimentConfig::default_for(SuiteKind::Smallball);
    c.function = "lp:2:16".into();
    c.n_samples = 30_000;
    configs.push(c);

    let mut c = ExperimentConfig::default_for(SuiteKind::Params);
    c.function = "lp:1:8".into();
    c.n_samples = 30_000;
    configs.push(c);

    let mut c = ExperimentConfig::default_for(SuiteKind::Negmoments);
    c.function = "lp:2:16".into();
    c.n_samples = 30_000;
    c.q_grid = vec![1.0, 2.0];
    configs.push(c);

    let mut c = ExperimentConfig::default_for(SuiteKind::Gp);
    c.function = "gp_brownian:64".into();
    c.n_samples = 20_000;
    configs.push(c);

    let mut c = ExperimentConfig::default_for(SuiteKind::Jl);
    c.function = "lp:2:8".into();
    c.n_samples = 20_000;
    c.jl = Some(JlConfig {
        source_dim: 20,
        n_points: 8,
        delta: 0.5,
        eps: None,
        trials: 20,
        point_source: PointSource::GaussianCloud,
        capacity_target: 1e-3,
    });
    configs.push(c);

    let mut c = ExperimentConfig::default_for(SuiteKind::Calibration);
    c.n_samples = 30_000;
    configs.push(c);

    let mut all_equal = true;
    let mut detail = String::new();
    for mut config in configs {
        config.workers = 1;
        let a = run(&config).unwrap().payload_json();
        config.workers = 8;
        let b = run(&config).unwrap().payload_json();
        let same = a == b;
        all_equal &= same;
        detail.push_str(&format!(
            "{}: {}; ",
            config.suite.label(),
            if same { "byte-identical" } else { "DIVERGED" }
        ));
    }
    announce("18 (payload determinism, workers 1 vs 8)", all_equal, &detail);
    assert!(all_equal, "{detail}");
}
