//! End-to-end constant-flat search.
//!
//! Greedy 0-restrictions remove all crucial terms of `g`, the residual
//! quadratic on the surviving variables goes to Dickson form, and half of its
//! paired coordinates are fixed. The zero-fixings and the Dickson change of
//! variables compose into one [`AffineEmbedding`] from `y`-space into the
//! input space; when the input carries a bijection `A` (with `g = f ∘ A`) the
//! flat is pushed forward through `A` so that the report concerns `f`.

mod flat;
pub mod oracle;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anf::FunctionInput;
use crate::error::{Error, Result};
use crate::f2::BitVec;
use crate::quadratic::{dickson_decompose, DicksonDoc, DicksonForm};
use crate::restriction::{greedy_restrict, RestrictionTrace, StopRule};

pub use flat::{embed_zero_restriction, flat_of_embedding, AffineEmbedding, Flat, FlatDoc};
pub use oracle::{brute_force_normality, brute_force_thickness};

/// Flats with at most this many points are verified exhaustively.
pub const DEFAULT_SAMPLE_CAP: u64 = 1 << 20;

/// Seed for sampled verification of large flats.
pub const DEFAULT_VERIFY_SEED: u64 = 0x5EED_F1A7;

/// Dimension promised for `T(f) <= n^(3-ε)`: `(4/15)·√((2/3)·n^ε) − 3`.
pub fn guaranteed_dimension_bound(n: usize, epsilon: f64) -> f64 {
    (4.0 / 15.0) * ((2.0 / 3.0) * (n as f64).powf(epsilon)).sqrt() - 3.0
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Every point evaluated; `f` takes this value on the whole flat.
    Constant(bool),
    /// Two flat points with different values.
    NotConstant { first: (BitVec, bool), second: (BitVec, bool) },
    /// All sampled points agreed on `value`.
    SampledOk { samples: u64, value: bool },
}

impl Verdict {
    pub fn matches(&self, claimed: bool) -> bool {
        match *self {
            Verdict::Constant(v) | Verdict::SampledOk { value: v, .. } => v == claimed,
            Verdict::NotConstant { .. } => false,
        }
    }
}

/// Evaluates `f` on the flat: every point when `2^k <= sample_cap`, else
/// `sample_cap` seeded random points plus the offset.
pub fn verify_flat(input: &FunctionInput, flat: &Flat, sample_cap: u64, seed: u64) -> Result<Verdict> {
    if flat.ambient() != input.num_vars() {
        return Err(Error::DimensionMismatch { expected: input.num_vars(), found: flat.ambient() });
    }
    let k = flat.dimension();
    let reference = flat.offset().clone();
    let ref_value = input.evaluate_f(&reference)?;
    let differs = |p: BitVec| -> Option<(BitVec, bool)> {
        let v = input.evaluate_f(&p).expect("dimension checked");
        (v != ref_value).then_some((p, v))
    };
    let exhaustive = k < 63 && (1u64 << k) <= sample_cap;
    let witness = if exhaustive {
        let low = k.min(14);
        let chunks = 1u64 << (k - low);
        (0..chunks).into_par_iter().find_map_first(|c| {
            let mut p = flat.point_at(c << low);
            if let Some(w) = differs(p.clone()) {
                return Some(w);
            }
            for i in 1u64..(1 << low) {
                p.xor_assign(&flat.basis()[i.trailing_zeros() as usize]);
                if let Some(w) = differs(p.clone()) {
                    return Some(w);
                }
            }
            None
        })
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<BitVec> = (0..sample_cap).map(|_| flat.random_point(&mut rng)).collect();
        points.into_par_iter().find_map_first(differs)
    };
    Ok(match witness {
        Some(second) => Verdict::NotConstant { first: (reference, ref_value), second },
        None if exhaustive => Verdict::Constant(ref_value),
        None => Verdict::SampledOk { samples: sample_cap, value: ref_value },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerificationMode {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationDoc {
    pub mode: VerificationMode,
    pub points: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct FlatReport {
    pub flat: Flat,
    pub constant: bool,
    pub trace: RestrictionTrace,
    /// Dickson form of the residual quadratic, in the coordinates of the
    /// surviving variables (increasing original index).
    pub dickson: DicksonForm,
    /// Maps `y`-coordinates of the Dickson form into the space of `f`.
    pub embedding: AffineEmbedding,
    pub bound_epsilon: Option<f64>,
    pub guaranteed_dim: Option<f64>,
    pub verification: VerificationDoc,
}

impl FlatReport {
    pub fn dimension(&self) -> usize {
        self.flat.dimension()
    }

    pub fn to_doc(&self) -> FlatReportDoc {
        let FlatDoc { offset, basis } = self.flat.to_doc();
        FlatReportDoc {
            dimension: self.flat.dimension(),
            constant: self.constant as u8,
            offset,
            basis,
            trace: self.trace.clone(),
            dickson: self.dickson.to_doc(),
            epsilon: self.bound_epsilon,
            guaranteed_dim: self.guaranteed_dim,
            verification: Some(self.verification.clone()),
        }
    }
}

/// JSON form of a [`FlatReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatReportDoc {
    pub dimension: usize,
    pub constant: u8,
    pub offset: String,
    pub basis: Vec<String>,
    pub trace: RestrictionTrace,
    pub dickson: DicksonDoc,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub guaranteed_dim: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub verification: Option<VerificationDoc>,
}

impl FlatReportDoc {
    pub fn flat(&self) -> Result<Flat> {
        let flat = FlatDoc { offset: self.offset.clone(), basis: self.basis.clone() }.to_flat()?;
        if flat.dimension() != self.dimension {
            return Err(Error::Format(format!(
                "dimension {} does not match {} basis vectors",
                self.dimension,
                flat.dimension()
            )));
        }
        Ok(flat)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PipelineOptions {
    pub epsilon: Option<f64>,
    pub sample_cap: u64,
    pub verify_seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { epsilon: None, sample_cap: DEFAULT_SAMPLE_CAP, verify_seed: DEFAULT_VERIFY_SEED }
    }
}

pub fn find_constant_flat(input: &FunctionInput, epsilon: Option<f64>) -> Result<FlatReport> {
    find_constant_flat_with(input, PipelineOptions { epsilon, ..Default::default() })
}

pub fn find_constant_flat_with(input: &FunctionInput, opts: PipelineOptions) -> Result<FlatReport> {
    let g = input.g();
    let n = g.num_vars();
    let state = greedy_restrict(g, StopRule::UntilNoCrucial);
    let alive = state.alive_indices();
    let residual = state.current().project(&alive)?;
    let dickson = dickson_decompose(&residual)?;

    let mut embedding = AffineEmbedding::identity(n);
    let mut dead: Vec<usize> = state.trace().vars().collect();
    dead.sort_unstable_by(|a, b| b.cmp(a));
    for v in dead {
        embedding = embedding.kill(v)?;
    }
    let mut embedding = embedding.precompose(&dickson.map.inverse())?;
    if let Some(a) = input.bijection() {
        embedding = embedding.then(a)?;
    }
    let fixed: Vec<(usize, bool)> = dickson.fixed_coordinates().into_iter().map(|j| (j + 1, false)).collect();
    let flat = embedding.flat_of(&fixed)?;
    let constant = dickson.flat_constant();

    let verdict = verify_flat(input, &flat, opts.sample_cap, opts.verify_seed)?;
    if !verdict.matches(constant) {
        return Err(Error::VerificationFailed(format!("flat is not constant {}: {verdict:?}", constant as u8)));
    }
    let verification = match verdict {
        Verdict::SampledOk { samples, .. } => {
            VerificationDoc { mode: VerificationMode::Sampled, points: samples, seed: Some(opts.verify_seed) }
        }
        _ => VerificationDoc { mode: VerificationMode::Exhaustive, points: 1u64 << flat.dimension(), seed: None },
    };
    Ok(FlatReport {
        flat,
        constant,
        trace: state.trace().clone(),
        dickson,
        embedding,
        bound_epsilon: opts.epsilon,
        guaranteed_dim: opts.epsilon.map(|e| guaranteed_dimension_bound(n, e).max(0.0)),
        verification,
    })
}
