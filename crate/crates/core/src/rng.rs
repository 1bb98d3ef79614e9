//! Deterministic, parallel-safe sampling for the three source distributions.
//!
//! Generation is counter-based (Philox 2x64-10): the pair of 64-bit words
//! produced for counter `(index, slot)` under a key derived from
//! `(master_seed, stream_id)` is a pure function of those four integers. The
//! variate at global index `i` therefore never depends on worker count,
//! chunking, or how much of the stream was consumed before it — the property
//! the reproducibility contract and all the report determinism tests rest on.
//!
//! Gaussians come from the inverse-CDF transform of counter-generated
//! uniforms (no rejection, so index-addressability is preserved); the
//! two-sided exponential from `sign * (-ln u)`; chi-squared as a sum of `k`
//! squared Gaussian coordinates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::special::normal_quantile_unchecked;
use crate::{Error, Result};

/// Philox 2x64 round multiplier (Random123).
const PHILOX_M: u64 = 0xD2B7_4407_B1CE_6E93;
/// Weyl key increment (golden-ratio constant).
const PHILOX_W: u64 = 0x9E37_79B9_7F4A_7C15;

/// Default rows-per-task granularity for parallel generation.
pub const DEFAULT_CHUNK_SIZE: usize = 8192;

/// Memory budget for materialized sample blocks (bytes).
pub const DEFAULT_BLOCK_BUDGET: usize = 2 << 30;

#[inline]
fn splitmix_mix(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    z
}

/// Ten Philox 2x64 rounds of the counter `(c0, c1)` under `key`.
#[inline]
pub fn philox2x64(mut c0: u64, mut c1: u64, mut key: u64) -> (u64, u64) {
    for _ in 0..10 {
        let prod = (c0 as u128).wrapping_mul(PHILOX_M as u128);
        let hi = (prod >> 64) as u64;
        let lo = prod as u64;
        c0 = hi ^ key ^ c1;
        c1 = lo;
        key = key.wrapping_add(PHILOX_W);
    }
    (c0, c1)
}

#[inline]
fn to_open_unit(word: u64) -> f64 {
    // (0, 1) exclusive: 53 high bits plus a half-ulp offset
    ((word >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Addressable stream of variates.
///
/// Distinct `(master_seed, stream_id)` pairs give statistically independent
/// streams. `chunk_size` only sets the granularity of parallel work units
/// and deterministic reductions; it never changes individual variates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub master_seed: u64,
    pub stream_id: u64,
    pub chunk_size: usize,
}

impl StreamSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        StreamSpec {
            master_seed,
            stream_id,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    /// Philox key for this stream.
    #[inline]
    pub fn key(&self) -> u64 {
        splitmix_mix(self.master_seed ^ splitmix_mix(self.stream_id))
    }

    /// Derive an independent child stream. Used to keep e.g. bootstrap
    /// resampling, scale estimation and trial streams disjoint from the data
    /// stream they relate to.
    pub fn substream(&self, tag: u64) -> StreamSpec {
        StreamSpec {
            master_seed: self.master_seed,
            stream_id: splitmix_mix(self.stream_id ^ tag.wrapping_mul(PHILOX_W)),
            chunk_size: self.chunk_size,
        }
    }

    /// Uniform in (0, 1) at counter `(index, slot)`, first word.
    #[inline]
    pub fn uniform_at(&self, index: u64, slot: u64) -> f64 {
        let (w0, _) = philox2x64(index, slot, self.key());
        to_open_unit(w0)
    }

    /// Raw 64-bit word at counter `(index, slot)`.
    #[inline]
    pub fn word_at(&self, index: u64, slot: u64) -> u64 {
        philox2x64(index, slot, self.key()).0
    }
}

/// Source distribution for a sample block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionKind {
    /// Independent standard normal coordinates.
    Gaussian { dim: usize },
    /// I.i.d. two-sided exponential coordinates (density exp(-|x|)/2).
    Exponential { dim: usize },
    /// Scalar chi-squared with `dof` degrees of freedom.
    ChiSquared { dof: usize },
}

impl DistributionKind {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            DistributionKind::Gaussian { dim } | DistributionKind::Exponential { dim } => *dim > 0,
            DistributionKind::ChiSquared { dof } => *dof > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(
                "distribution dimension / dof must be positive".into(),
            ))
        }
    }

    /// Dimension of one sample row.
    pub fn dim(&self) -> usize {
        match self {
            DistributionKind::Gaussian { dim } | DistributionKind::Exponential { dim } => *dim,
            DistributionKind::ChiSquared { .. } => 1,
        }
    }

    pub fn label(&self) -> String {
        match self {
            DistributionKind::Gaussian { dim } => format!("gaussian:{dim}"),
            DistributionKind::Exponential { dim } => format!("exponential:{dim}"),
            DistributionKind::ChiSquared { dof } => format!("chi_squared:{dof}"),
        }
    }
}

#[inline]
fn fill_gaussian_row(key: u64, index: u64, out: &mut [f64]) {
    // two coordinates per Philox call
    let mut j = 0;
    let mut slot = 0u64;
    while j + 1 < out.len() {
        let (w0, w1) = philox2x64(index, slot, key);
        out[j] = normal_quantile_unchecked(to_open_unit(w0));
        out[j + 1] = normal_quantile_unchecked(to_open_unit(w1));
        j += 2;
        slot += 1;
    }
    if j < out.len() {
        let (w0, _) = philox2x64(index, slot, key);
        out[j] = normal_quantile_unchecked(to_open_unit(w0));
    }
}

#[inline]
fn fill_exponential_row(key: u64, index: u64, out: &mut [f64]) {
    for (j, v) in out.iter_mut().enumerate() {
        let (w0, _) = philox2x64(index, j as u64, key);
        let mag = -to_open_unit(w0).ln();
        *v = if w0 & 1 == 0 { mag } else { -mag };
    }
}

#[inline]
fn chi_squared_at(key: u64, index: u64, dof: usize) -> f64 {
    let mut acc = 0.0;
    let mut j = 0;
    let mut slot = 0u64;
    while j + 1 < dof {
        let (w0, w1) = philox2x64(index, slot, key);
        let g0 = normal_quantile_unchecked(to_open_unit(w0));
        let g1 = normal_quantile_unchecked(to_open_unit(w1));
        acc += g0 * g0 + g1 * g1;
        j += 2;
        slot += 1;
    }
    if j < dof {
        let (w0, _) = philox2x64(index, slot, key);
        let g = normal_quantile_unchecked(to_open_unit(w0));
        acc += g * g;
    }
    acc
}

/// Fill one sample row at the given global index.
pub fn fill_row(dist: DistributionKind, stream: &StreamSpec, index: u64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), dist.dim());
    let key = stream.key();
    match dist {
        DistributionKind::Gaussian { .. } => fill_gaussian_row(key, index, out),
        DistributionKind::Exponential { .. } => fill_exponential_row(key, index, out),
        DistributionKind::ChiSquared { dof } => out[0] = chi_squared_at(key, index, dof),
    }
}

/// Materialize `count` rows as a row-major block, enforcing the memory budget.
///
/// `count = 0` yields an empty (valid) block.
pub fn sample(
    dist: DistributionKind,
    stream: &StreamSpec,
    count: usize,
    budget: usize,
) -> Result<Vec<f64>> {
    dist.validate()?;
    let dim = dist.dim();
    let bytes = count.checked_mul(dim).and_then(|n| n.checked_mul(8));
    match bytes {
        Some(b) if b <= budget => {}
        _ => {
            return Err(Error::MemoryBudget {
                rows: count,
                dim,
                budget,
            })
        }
    }
    let mut block = vec![0.0; count * dim];
    let chunk_rows = stream.chunk_size.max(1);
    block
        .par_chunks_mut(chunk_rows * dim)
        .enumerate()
        .for_each(|(c, rows)| {
            let base = (c * chunk_rows) as u64;
            for (r, row) in rows.chunks_mut(dim).enumerate() {
                fill_row(dist, stream, base + r as u64, row);
            }
        });
    Ok(block)
}

/// Apply `f(index, row)` over `count` freshly generated rows without ever
/// materializing the whole block; rows are visited in parallel chunks but the
/// output vector is indexed, so the result is worker-count independent.
pub fn map_rows<F>(dist: DistributionKind, stream: &StreamSpec, count: usize, f: F) -> Vec<f64>
where
    F: Fn(u64, &[f64]) -> f64 + Sync,
{
    let dim = dist.dim();
    let chunk_rows = stream.chunk_size.max(1);
    let mut out = vec![0.0; count];
    out.par_chunks_mut(chunk_rows)
        .enumerate()
        .for_each_init(
            || vec![0.0; dim],
            |row_buf, (c, vals)| {
                let base = (c * chunk_rows) as u64;
                for (r, v) in vals.iter_mut().enumerate() {
                    let index = base + r as u64;
                    fill_row(dist, stream, index, row_buf);
                    *v = f(index, row_buf);
                }
            },
        );
    out
}
