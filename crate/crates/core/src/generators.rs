//! Concrete function families: majority, the all-zero-input indicator, the
//! tight greedy family built from a six-variable cubic, complete cubics, and
//! seeded random cubics.
//!
//! Samplers draw from ChaCha8 seeded with `seed_from_u64`, visit triples
//! `i < j < k` in lexicographic order and include a triple when the next
//! 64-bit output is below `p * 2^64`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::anf::{Anf, TruthTable, DEFAULT_TRUTH_TABLE_CAP};
use crate::error::{Error, Result};
use crate::f2::BitVec;

pub const ALL_ONES_CAP: usize = 20;

pub fn sampler_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `i` under `master`; independent of execution order.
pub fn trial_seed(master: u64, i: u64) -> u64 {
    splitmix64(master ^ splitmix64(i))
}

/// `MAJ_n`: 1 iff at least half of the inputs are 1 (so `x1 + x2 + x1x2` for n = 2).
pub fn majority(n: usize) -> Result<Anf> {
    if n > DEFAULT_TRUTH_TABLE_CAP {
        return Err(Error::TooLarge(format!("majority on {n} variables exceeds the truth-table cap")));
    }
    TruthTable::from_fn(n, |x| 2 * x.count_ones() as usize >= n).to_anf()
}

/// `(1 + x1)(1 + x2)...(1 + xn)` expanded: all `2^n` monomials.
pub fn all_ones_indicator(n: usize) -> Result<Anf> {
    if n > ALL_ONES_CAP {
        return Err(Error::TooLarge(format!("all-ones indicator supports n <= {ALL_ONES_CAP}, got {n}")));
    }
    Ok(Anf::from_monomials(n, (0..1u64 << n).map(|s| BitVec::from_u64(n, s))))
}

const PROP6_TERMS: [[usize; 3]; 4] = [[1, 2, 3], [1, 4, 5], [2, 4, 6], [3, 5, 6]];

/// `x1x2x3 + x1x4x5 + x2x4x6 + x3x5x6`.
pub fn prop6_base() -> Anf {
    Anf::from_index_sets(6, PROP6_TERMS).expect("indices within 1..=6")
}

/// `5m` disjoint copies of [`prop6_base`]; block `i` uses `x(6i-5) .. x(6i)`.
pub fn prop6_family(m: usize) -> Result<Anf> {
    if m == 0 {
        return Err(Error::InvalidConfig("prop6 family needs m >= 1".into()));
    }
    let blocks = 5 * m;
    let sets = (0..blocks).flat_map(|b| PROP6_TERMS.iter().map(move |t| t.map(|v| v + 6 * b)));
    Anf::from_index_sets(30 * m, sets)
}

/// Every degree-3 monomial on `n` variables.
pub fn complete_degree3(n: usize) -> Result<Anf> {
    if n < 3 {
        return Err(Error::InvalidConfig(format!("complete cubic needs n >= 3, got {n}")));
    }
    Ok(Anf::from_monomials(n, triples(n).map(|t| BitVec::from_indices(n, t))))
}

fn triples(n: usize) -> impl Iterator<Item = [usize; 3]> {
    (0..n).flat_map(move |i| (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| [i, j, k])))
}

pub fn binomial3(n: usize) -> u64 {
    let n = n as u64;
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

fn threshold(p: f64) -> Option<u64> {
    // None means "always include"
    if p >= 1.0 {
        None
    } else {
        Some((p * 18_446_744_073_709_551_616.0) as u64)
    }
}

fn sample_triples(n: usize, p: f64, seed: u64) -> Anf {
    let mut rng = sampler_rng(seed);
    let cut = threshold(p);
    let picked = triples(n)
        .filter(|_| {
            let r = rng.next_u64();
            cut.is_none_or(|c| r < c)
        })
        .map(|t| BitVec::from_indices(n, t));
    Anf::from_monomials(n, picked)
}

/// Each degree-3 monomial independently with probability 1/2.
pub fn random_degree3_half(n: usize, seed: u64) -> Anf {
    sample_triples(n, 0.5, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Degree3SamplerConfig {
    pub n: usize,
    pub s: f64,
    /// `p = multiplier / n^(3-s)`; 0.5 and 1.0 are the two variants in use.
    pub multiplier: f64,
    pub seed: u64,
}

impl Degree3SamplerConfig {
    pub fn new(n: usize, s: f64, seed: u64) -> Result<Self> {
        let cfg = Self { n, s, multiplier: 0.5, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_multiplier(mut self, multiplier: f64) -> Result<Self> {
        self.multiplier = multiplier;
        self.validate()?;
        Ok(self)
    }

    pub fn probability(&self) -> f64 {
        self.multiplier / (self.n as f64).powf(3.0 - self.s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s <= 3.0) {
            return Err(Error::InvalidConfig(format!("s must lie in (0, 3], got {}", self.s)));
        }
        if !(self.multiplier > 0.0 && self.multiplier <= 1.0) {
            return Err(Error::InvalidConfig(format!("multiplier must lie in (0, 1], got {}", self.multiplier)));
        }
        let p = self.probability();
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidConfig(format!("inclusion probability {p} outside (0, 1]")));
        }
        Ok(())
    }
}

/// Each degree-3 monomial independently with probability `cfg.probability()`.
pub fn random_degree3_sparse(cfg: &Degree3SamplerConfig) -> Result<Anf> {
    cfg.validate()?;
    Ok(sample_triples(cfg.n, cfg.probability(), cfg.seed))
}
