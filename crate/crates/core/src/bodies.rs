//! Catalog of convex test functions and norm gauges.
//!
//! Descriptors carry exact metadata (convexity/unconditionality flags, the
//! Lipschitz constant when known in closed form) plus a deterministic
//! evaluator. Flags are backed by randomized oracles rather than symbolic
//! proofs so the catalog stays user-extensible: `check_convexity` and
//! `check_unconditional` probe random points and report violations instead of
//! trusting the constructor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{fill_row, DistributionKind, StreamSpec};
use crate::{Error, Result};

/// Result of a randomized property check. Violations are report content, not
/// errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub trials: usize,
    pub violations: usize,
    pub max_violation: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Row-major loading matrix for a finite Gaussian-process supremum: the
/// induced function is `x -> max_t |<a_t, x>|`, a symmetric polytope gauge
/// (a norm whenever the rows span).
#[derive(Debug, Clone, PartialEq)]
pub struct GpSpec {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl GpSpec {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::InvalidParam(
                "loading matrix must be non-empty and row-major rows x cols".into(),
            ));
        }
        Ok(GpSpec { rows, cols, data })
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    /// Covariance `<a_s, a_t>` of the induced Gaussian process.
    pub fn covariance(&self, s: usize, t: usize) -> f64 {
        dot(self.row(s), self.row(t))
    }

    /// Discretized Brownian motion on `m` grid points: row `j` has `j+1`
    /// leading entries `1/sqrt(m)`, so the process covariance is
    /// `min(s, t)` on the grid `t_j = (j+1)/m`.
    pub fn brownian_grid(m: usize) -> Self {
        let inv = 1.0 / (m as f64).sqrt();
        let mut data = vec![0.0; m * m];
        for j in 0..m {
            for i in 0..=j {
                data[j * m + i] = inv;
            }
        }
        GpSpec {
            rows: m,
            cols: m,
            data,
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone)]
enum Family {
    /// lp norm, `p` in [1, inf].
    Lp { p: f64 },
    /// Signed linear functional `<direction, x>` with unit direction.
    Linear { direction: Vec<f64> },
    /// `max_t |<a_t, x>|` over the facet rows.
    Gauge { spec: GpSpec },
    /// `t -> exp(-t + t^2/2)` on the line: log-convex, in L1 but not L2.
    LogConvex1d,
    /// Coordinatewise nondecreasing convex map on the half-line: identity.
    IdentityPositive,
}

/// A convex test function / norm gauge with exact metadata.
#[derive(Debug, Clone)]
pub struct FunctionDescriptor {
    pub name: String,
    pub dim: usize,
    pub is_convex: bool,
    pub is_unconditional: bool,
    pub is_norm: bool,
    /// Exact Lipschitz constant with respect to the Euclidean norm, when
    /// known in closed form.
    pub lipschitz_exact: Option<f64>,
    family: Family,
}

impl FunctionDescriptor {
    /// Evaluate at a point of matching dimension.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.family {
            Family::Lp { p } => lp_eval(*p, x),
            Family::Linear { direction } => dot(direction, x),
            Family::Gauge { spec } => {
                let mut best = 0.0f64;
                for t in 0..spec.rows {
                    best = best.max(dot(spec.row(t), x).abs());
                }
                best
            }
            Family::LogConvex1d => (-x[0] + 0.5 * x[0] * x[0]).exp(),
            Family::IdentityPositive => x[0],
        }
    }

    /// The loading matrix, for gauge-family descriptors.
    pub fn gauge_spec(&self) -> Option<&GpSpec> {
        match &self.family {
            Family::Gauge { spec } => Some(spec),
            _ => None,
        }
    }
}

fn lp_eval(p: f64, x: &[f64]) -> f64 {
    if p.is_infinite() {
        return x.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if p == 2.0 {
        return x.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    if p == 4.0 {
        return x
            .iter()
            .map(|v| {
                let s = v * v;
                s * s
            })
            .sum::<f64>()
            .sqrt()
            .sqrt();
    }
    // general p: factor out the max so p ~ log n stays clear of overflow
    let m = x.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().map(|v| (v.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

// ---------------------------------------------------------------------------
// Builtin constructors.
// ---------------------------------------------------------------------------

/// lp norm on R^n, `p` in [1, inf] (`f64::INFINITY` for the sup norm).
pub fn lp_norm(p: f64, n: usize) -> Result<FunctionDescriptor> {
    if !(p >= 1.0) || n == 0 {
        return Err(Error::InvalidParam(format!(
            "lp_norm requires p >= 1 and n >= 1, got p={p}, n={n}"
        )));
    }
    let lipschitz = if p >= 2.0 {
        1.0
    } else {
        (n as f64).powf(1.0 / p - 0.5)
    };
    let name = if p.is_infinite() {
        format!("linf:{n}")
    } else {
        format!("lp:{p}:{n}")
    };
    Ok(FunctionDescriptor {
        name,
        dim: n,
        is_convex: true,
        is_unconditional: true,
        is_norm: true,
        lipschitz_exact: Some(lipschitz),
        family: Family::Lp { p },
    })
}

/// `max_i |x_i|`, same as `lp_norm(inf, n)`.
pub fn max_abs_coordinate(n: usize) -> Result<FunctionDescriptor> {
    lp_norm(f64::INFINITY, n)
}

/// Signed linear functional along a unit vector.
pub fn linear_functional(direction: Vec<f64>) -> Result<FunctionDescriptor> {
    let norm = dot(&direction, &direction).sqrt();
    if direction.is_empty() || (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParam(
            "linear_functional requires a unit direction vector".into(),
        ));
    }
    Ok(FunctionDescriptor {
        name: format!("linear:{}", direction.len()),
        dim: direction.len(),
        is_convex: true,
        is_unconditional: false,
        is_norm: false,
        lipschitz_exact: Some(1.0),
        family: Family::Linear { direction },
    })
}

/// Symmetric polytope gauge `max_i |<a_i, x>|` from a facet matrix.
pub fn polytope_gauge(spec: GpSpec) -> Result<FunctionDescriptor> {
    let lip = max_row_norm(&spec);
    Ok(FunctionDescriptor {
        name: format!("polytope:{}:{}", spec.cols, spec.rows),
        dim: spec.cols,
        is_convex: true,
        is_unconditional: false,
        is_norm: true,
        lipschitz_exact: Some(lip),
        family: Family::Gauge { spec },
    })
}

/// Supremum of a finite centered Gaussian process given by its loading rows.
pub fn gp_sup(spec: GpSpec) -> Result<FunctionDescriptor> {
    let lip = max_row_norm(&spec);
    Ok(FunctionDescriptor {
        name: format!("gp_sup:{}:{}", spec.cols, spec.rows),
        dim: spec.cols,
        is_convex: true,
        is_unconditional: false,
        is_norm: true,
        lipschitz_exact: Some(lip),
        family: Family::Gauge { spec },
    })
}

/// Brownian-motion supremum on an `m`-point grid.
pub fn gp_brownian(m: usize) -> Result<FunctionDescriptor> {
    if m == 0 {
        return Err(Error::InvalidParam("brownian grid needs m >= 1".into()));
    }
    let mut d = gp_sup(GpSpec::brownian_grid(m))?;
    d.name = format!("gp_brownian:{m}");
    Ok(d)
}

/// Random symmetric polytope gauge: `facets` unit-norm facet rows drawn from
/// a dedicated Gaussian stream, so a given `(n, facets, seed)` names one
/// concrete body.
pub fn polytope_random(n: usize, facets: usize, seed: u64) -> Result<FunctionDescriptor> {
    if n == 0 || facets == 0 {
        return Err(Error::InvalidParam("polytope needs n, facets >= 1".into()));
    }
    let stream = StreamSpec::new(seed, 0xFACE7).substream(n as u64 ^ (facets as u64) << 20);
    let mut data = vec![0.0; facets * n];
    for (t, row) in data.chunks_mut(n).enumerate() {
        fill_row(
            DistributionKind::Gaussian { dim: n },
            &stream,
            t as u64,
            row,
        );
        let norm = dot(row, row).sqrt();
        for v in row.iter_mut() {
            *v /= norm;
        }
    }
    let mut d = polytope_gauge(GpSpec::new(facets, n, data)?)?;
    d.name = format!("polytope:{n}:{facets}");
    Ok(d)
}

/// `t -> exp(-t + t^2/2)`: log-convex, integrable but not square-integrable
/// under the Gaussian weight.
pub fn logconvex_1d() -> FunctionDescriptor {
    FunctionDescriptor {
        name: "logconvex1d".into(),
        dim: 1,
        is_convex: true,
        is_unconditional: false,
        is_norm: false,
        lipschitz_exact: None,
        family: Family::LogConvex1d,
    }
}

/// Identity on the half-line, the canonical coordinatewise nondecreasing
/// convex map paired with the chi-squared source; `dof` is recorded in the
/// name so configs can bind it to `chi_squared(dof)`.
pub fn identity_positive(dof: usize) -> FunctionDescriptor {
    FunctionDescriptor {
        name: format!("identity_positive:{dof}"),
        dim: 1,
        is_convex: true,
        is_unconditional: false,
        is_norm: false,
        lipschitz_exact: Some(1.0),
        family: Family::IdentityPositive,
    }
}

fn max_row_norm(spec: &GpSpec) -> f64 {
    (0..spec.rows)
        .map(|t| dot(spec.row(t), spec.row(t)).sqrt())
        .fold(0.0f64, f64::max)
}

/// Resolve a catalog name like `lp:2:64`, `linf:4096`, `linear:1`,
/// `polytope:32:200`, `gp_brownian:256`, `logconvex1d`, or
/// `identity_positive:2`.
pub fn from_name(name: &str) -> Result<FunctionDescriptor> {
    let parts: Vec<&str> = name.split(':').collect();
    let parse_usize = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::UnknownName(format!("{name} (bad integer field '{s}')")))
    };
    match parts.as_slice() {
        ["lp", p, n] => {
            let p = if *p == "inf" {
                f64::INFINITY
            } else {
                p.parse()
                    .map_err(|_| Error::UnknownName(format!("{name} (bad p)")))?
            };
            lp_norm(p, parse_usize(n)?)
        }
        ["linf", n] => max_abs_coordinate(parse_usize(n)?),
        ["linear", n] => {
            let n = parse_usize(n)?;
            let mut e1 = vec![0.0; n];
            if n > 0 {
                e1[0] = 1.0;
            }
            linear_functional(e1)
        }
        ["polytope", n, m] => polytope_random(parse_usize(n)?, parse_usize(m)?, 0),
        ["polytope", n, m, seed] => {
            polytope_random(parse_usize(n)?, parse_usize(m)?, parse_usize(seed)? as u64)
        }
        ["gp_brownian", m] => gp_brownian(parse_usize(m)?),
        ["logconvex1d"] => Ok(logconvex_1d()),
        ["identity_positive"] => Ok(identity_positive(1)),
        ["identity_positive", k] => Ok(identity_positive(parse_usize(k)?)),
        _ => Err(Error::UnknownName(name.into())),
    }
}

// ---------------------------------------------------------------------------
// Operations.
// ---------------------------------------------------------------------------

/// Vectorized, order-preserving application over a row-major block.
pub fn evaluate(f: &FunctionDescriptor, block: &[f64]) -> Result<Vec<f64>> {
    if f.dim == 0 || block.len() % f.dim != 0 {
        return Err(Error::DimensionMismatch {
            expected: f.dim,
            got: block.len() % f.dim.max(1),
        });
    }
    Ok(block
        .par_chunks(f.dim)
        .map(|row| f.eval(row))
        .collect())
}

/// Maximum of the gauge over the Euclidean sphere.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SphereMax {
    pub value: f64,
    /// False when the value is only a randomized lower bound.
    pub exact: bool,
}

/// b(A) = max over the unit sphere of the norm. Closed form for builtins;
/// otherwise a lower bound from random and coordinate directions.
pub fn b_max_on_sphere(f: &FunctionDescriptor) -> Result<SphereMax> {
    if !f.is_norm {
        return Err(Error::InvalidParam(format!(
            "{} is not a norm descriptor",
            f.name
        )));
    }
    let exact = match &f.family {
        Family::Lp { p } => Some(if *p >= 2.0 {
            1.0
        } else {
            (f.dim as f64).powf(1.0 / p - 0.5)
        }),
        Family::Gauge { spec } => Some(max_row_norm(spec)),
        _ => None,
    };
    if let Some(value) = exact {
        return Ok(SphereMax { value, exact: true });
    }
    Ok(SphereMax {
        value: sphere_lower_bound(f, 100_000),
        exact: false,
    })
}

fn sphere_lower_bound(f: &FunctionDescriptor, directions: usize) -> f64 {
    let stream = StreamSpec::new(0xB_A11, 0).substream(f.dim as u64);
    let mut best = 0.0f64;
    let mut theta = vec![0.0; f.dim];
    // coordinate directions first
    for i in 0..f.dim {
        theta.iter_mut().for_each(|v| *v = 0.0);
        theta[i] = 1.0;
        best = best.max(f.eval(&theta));
    }
    let mut row = vec![0.0; f.dim];
    for t in 0..directions as u64 {
        fill_row(DistributionKind::Gaussian { dim: f.dim }, &stream, t, &mut row);
        let norm = dot(&row, &row).sqrt();
        if norm == 0.0 {
            continue;
        }
        for (o, v) in theta.iter_mut().zip(&row) {
            *o = v / norm;
        }
        best = best.max(f.eval(&theta));
    }
    best
}

/// Randomized midpoint-convexity check on Gaussian point pairs.
pub fn check_convexity(
    f: &FunctionDescriptor,
    stream: &StreamSpec,
    trials: usize,
) -> PropertyReport {
    convexity_report(&f.name, f.dim, |x| f.eval(x), stream, trials)
}

pub(crate) fn convexity_report<E: Fn(&[f64]) -> f64>(
    name: &str,
    dim: usize,
    eval: E,
    stream: &StreamSpec,
    trials: usize,
) -> PropertyReport {
    let dist = DistributionKind::Gaussian { dim };
    let sub = stream.substream(0xC0);
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    let mut z = vec![0.0; dim];
    let mut violations = 0usize;
    let mut max_violation = 0.0f64;
    for t in 0..trials as u64 {
        fill_row(dist, &sub, 2 * t, &mut x);
        fill_row(dist, &sub, 2 * t + 1, &mut y);
        let lambda = sub.uniform_at(t, u64::MAX);
        for i in 0..dim {
            z[i] = lambda * x[i] + (1.0 - lambda) * y[i];
        }
        let rhs = lambda * eval(&x) + (1.0 - lambda) * eval(&y);
        // absolute slack plus a relative term for the f64 rounding of huge
        // values (the log-convex builtin reaches e^17 on routine inputs)
        let tol = 1e-9 + 1e-12 * rhs.abs();
        let gap = eval(&z) - rhs;
        if gap > tol {
            violations += 1;
            max_violation = max_violation.max(gap);
        }
    }
    PropertyReport {
        property: format!("convexity[{name}]"),
        trials,
        violations,
        max_violation,
        pass: violations == 0,
        note: None,
    }
}

/// Randomized sign-flip invariance check (1-unconditionality).
pub fn check_unconditional(
    f: &FunctionDescriptor,
    stream: &StreamSpec,
    trials: usize,
) -> PropertyReport {
    let dist = DistributionKind::Gaussian { dim: f.dim };
    let sub = stream.substream(0xC1);
    let mut x = vec![0.0; f.dim];
    let mut flipped = vec![0.0; f.dim];
    let mut violations = 0usize;
    let mut max_violation = 0.0f64;
    for t in 0..trials as u64 {
        fill_row(dist, &sub, t, &mut x);
        let mut bits = sub.word_at(t, u64::MAX);
        for i in 0..f.dim {
            let flip = (bits >> (i % 64)) & 1 == 1;
            flipped[i] = if flip { -x[i] } else { x[i] };
            if i % 64 == 63 {
                bits = sub.word_at(t, 1 + (i / 64) as u64);
            }
        }
        let fx = f.eval(&x);
        let fy = f.eval(&flipped);
        let rel = (fy - fx).abs() / fx.abs().max(1.0);
        if rel > 1e-12 {
            violations += 1;
            max_violation = max_violation.max(rel);
        }
    }
    PropertyReport {
        property: format!("unconditional[{}]", f.name),
        trials,
        violations,
        max_violation,
        pass: violations == 0,
        note: None,
    }
}
