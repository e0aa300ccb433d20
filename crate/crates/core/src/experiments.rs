//! Seeded Monte-Carlo runs on random sparse cubics.
//!
//! The disperser statements being probed are asymptotic; these runs give
//! desk-scale evidence only, and every report says so in
//! `asymptotic_claim: true`. Trial `i` draws everything from
//! `trial_seed(master_seed, i)`, so reports do not depend on thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anf::Anf;
use crate::error::{Error, Result};
use crate::f2::{BitMatrix, BitVec};
use crate::generators::{
    binomial3, random_degree3_half, random_degree3_sparse, splitmix64, trial_seed, Degree3SamplerConfig,
};
use crate::pipeline::Flat;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Constant in the flat dimension `6.12 · n^(2 - s/2)`.
pub const DEFAULT_FLAT_CONSTANT: f64 = 6.12;
/// Constant in the restriction size `3 · √(ln n) · n^((3 - s)/2)`.
pub const DEFAULT_RESTRICTION_CONSTANT: f64 = 3.0;

pub const MAX_FLAT_DIM: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DisperserFlats,
    DisperserZeroRestrictions,
    SamplerStats,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Every cubic monomial with probability 1/2.
    Half,
    /// Every cubic monomial with probability `multiplier / n^(3-s)`.
    Sparse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub sampler: SamplerKind,
    pub n: usize,
    pub s: f64,
    pub multiplier: f64,
    pub trials: usize,
    pub master_seed: u64,
    /// Flats (or restrictions) examined per sampled function.
    pub per_trial: usize,
    /// Dimension under test; `None` selects the default formula for the kind.
    pub k: Option<usize>,
    pub flat_constant: f64,
    pub restriction_constant: f64,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, n: usize, s: f64, trials: usize, master_seed: u64) -> Self {
        Self {
            kind,
            sampler: SamplerKind::Sparse,
            n,
            s,
            multiplier: 0.5,
            trials,
            master_seed,
            per_trial: 1,
            k: None,
            flat_constant: DEFAULT_FLAT_CONSTANT,
            restriction_constant: DEFAULT_RESTRICTION_CONSTANT,
        }
    }

    /// `k` in force: explicit, or the kind's formula rounded up and capped at `n`.
    pub fn dimension(&self) -> usize {
        if let Some(k) = self.k {
            return k;
        }
        let n = self.n as f64;
        let raw = match self.kind {
            ExperimentKind::DisperserFlats => self.flat_constant * n.powf(2.0 - self.s / 2.0),
            ExperimentKind::DisperserZeroRestrictions => {
                self.restriction_constant * n.ln().max(0.0).sqrt() * n.powf((3.0 - self.s) / 2.0)
            }
            ExperimentKind::SamplerStats => 0.0,
        };
        (raw.ceil() as usize).min(self.n)
    }

    fn sampler_config(&self, seed: u64) -> Result<Degree3SamplerConfig> {
        Degree3SamplerConfig::new(self.n, self.s, seed)?.with_multiplier(self.multiplier)
    }

    /// Inclusion probability of each cubic monomial.
    pub fn probability(&self) -> Result<f64> {
        Ok(match self.sampler {
            SamplerKind::Half => 0.5,
            SamplerKind::Sparse => self.sampler_config(0)?.probability(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.sampler == SamplerKind::Sparse {
            self.sampler_config(0)?;
        }
        let k = self.dimension();
        if k > self.n {
            return Err(Error::InvalidConfig(format!("k = {k} exceeds n = {}", self.n)));
        }
        if self.kind == ExperimentKind::DisperserFlats && k > MAX_FLAT_DIM {
            return Err(Error::InvalidConfig(format!("flat dimension {k} exceeds {MAX_FLAT_DIM}")));
        }
        if self.kind != ExperimentKind::SamplerStats && self.per_trial == 0 {
            return Err(Error::InvalidConfig("per_trial must be at least 1".into()));
        }
        Ok(())
    }

    fn sample_function(&self, seed: u64) -> Result<Anf> {
        match self.sampler {
            SamplerKind::Half => Ok(random_degree3_half(self.n, seed)),
            SamplerKind::Sparse => random_degree3_sparse(&self.sampler_config(seed)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub sparsity: usize,
    /// Flats or restrictions examined.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub checked: Option<usize>,
    /// Flats on which the function was constant, or restrictions that dropped below degree 3.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hits: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub successes: u64,
    pub total: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_method: String,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsitySummary {
    pub mean: f64,
    pub variance: f64,
    pub predicted_mean: f64,
    pub predicted_variance: f64,
    pub sigma_of_mean: f64,
    pub z_score: f64,
    pub within_4_sigma: bool,
    /// Fraction of trials with more than `n^s` terms.
    pub tail_threshold: f64,
    pub tail_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub asymptotic_claim: bool,
    pub note: String,
    pub k: usize,
    pub probability: f64,
    pub trials: Vec<TrialOutcome>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rate: Option<RateSummary>,
    pub sparsity: SparsitySummary,
    /// Filled in by callers that time the run; absent otherwise so reports stay byte-stable.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_clock_ms: Option<f64>,
}

impl ExperimentReport {
    /// One CSV row per trial.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,seed,sparsity,checked,hits\n");
        for t in &self.trials {
            let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
            out.push_str(&format!("{},{},{},{},{}\n", t.trial, t.seed, t.sparsity, opt(t.checked), opt(t.hits)));
        }
        out
    }
}

/// Wilson score interval for `successes` out of `total` at quantile `z`.
pub fn wilson_interval(successes: u64, total: u64, z: f64) -> (f64, f64) {
    if total == 0 {
        return (0.0, 1.0);
    }
    let n = total as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn rate_summary(successes: u64, total: u64) -> RateSummary {
    let (ci_low, ci_high) = wilson_interval(successes, total, Z_95);
    RateSummary {
        successes,
        total,
        rate: if total == 0 { 0.0 } else { successes as f64 / total as f64 },
        ci_low,
        ci_high,
        ci_method: "wilson".into(),
        confidence: 0.95,
    }
}

fn sparsity_summary(cfg: &ExperimentConfig, trials: &[TrialOutcome]) -> Result<SparsitySummary> {
    let count = trials.len() as f64;
    let mean = trials.iter().map(|t| t.sparsity as f64).sum::<f64>() / count;
    let variance = if trials.len() > 1 {
        trials.iter().map(|t| (t.sparsity as f64 - mean).powi(2)).sum::<f64>() / (count - 1.0)
    } else {
        0.0
    };
    let p = cfg.probability()?;
    let monomials = binomial3(cfg.n) as f64;
    let predicted_mean = p * monomials;
    let predicted_variance = monomials * p * (1.0 - p);
    let sigma_of_mean = (predicted_variance / count).sqrt();
    let z_score = if sigma_of_mean > 0.0 { (mean - predicted_mean) / sigma_of_mean } else { 0.0 };
    let tail_threshold = (cfg.n as f64).powf(cfg.s);
    let tail_rate = trials.iter().filter(|t| t.sparsity as f64 > tail_threshold).count() as f64 / count;
    Ok(SparsitySummary {
        mean,
        variance,
        predicted_mean,
        predicted_variance,
        sigma_of_mean,
        z_score,
        within_4_sigma: z_score.abs() <= 4.0,
        tail_threshold,
        tail_rate,
    })
}

/// Uniform flat of dimension exactly `k`: independent random directions, uniform offset.
pub fn sample_flat<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Flat {
    assert!(k <= n, "flat dimension {k} exceeds ambient {n}");
    let mut basis: Vec<BitVec> = Vec::with_capacity(k);
    while basis.len() < k {
        let v = BitVec::random(n, rng);
        let mut rows = basis.clone();
        rows.push(v.clone());
        if BitMatrix::from_rows(rows, n).expect("equal lengths").rank() == basis.len() + 1 {
            basis.push(v);
        }
    }
    let offset = BitVec::random(n, rng);
    Flat::new(offset, basis).expect("basis independent by construction")
}

/// Constancy by exhaustive evaluation over the flat's points.
pub fn is_constant_on(f: &Anf, flat: &Flat) -> bool {
    let mut points = flat.points();
    let first = points.next().expect("flat has a point");
    let v = f.evaluate(&first).expect("ambient matches");
    points.all(|p| f.evaluate(&p).expect("ambient matches") == v)
}

/// Keeps exactly `k` uniformly chosen variables alive and zeroes the rest.
pub fn random_zero_restriction<R: Rng + ?Sized>(f: &Anf, k: usize, rng: &mut R) -> Anf {
    let n = f.num_vars();
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..k.min(n) {
        let j = rng.gen_range(i..n);
        order.swap(i, j);
    }
    let keep = BitVec::from_indices(n, order[..k.min(n)].iter().copied());
    Anf::from_monomials(n, f.terms().iter().filter(|t| t.is_subset_of(&keep)).cloned())
}

const FLAT_STREAM: u64 = 0xF1A7_0000_0000_0001;

fn run_trials<F>(cfg: &ExperimentConfig, per_trial: F) -> Result<Vec<TrialOutcome>>
where
    F: Fn(usize, u64, &Anf, &mut ChaCha8Rng) -> (Option<usize>, Option<usize>) + Sync,
{
    cfg.validate()?;
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(cfg.master_seed, i as u64);
            let f = cfg.sample_function(seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ FLAT_STREAM));
            let (checked, hits) = per_trial(i, seed, &f, &mut rng);
            Ok(TrialOutcome { trial: i, seed, sparsity: f.sparsity(), checked, hits })
        })
        .collect()
}

fn report(
    cfg: &ExperimentConfig,
    trials: Vec<TrialOutcome>,
    rate: Option<RateSummary>,
    note: &str,
) -> Result<ExperimentReport> {
    Ok(ExperimentReport {
        kind: cfg.kind,
        config: cfg.clone(),
        asymptotic_claim: true,
        note: note.into(),
        k: cfg.dimension(),
        probability: cfg.probability()?,
        sparsity: sparsity_summary(cfg, &trials)?,
        trials,
        rate,
        wall_clock_ms: None,
    })
}

fn hit_rate(trials: &[TrialOutcome]) -> RateSummary {
    let hits = trials.iter().filter_map(|t| t.hits).sum::<usize>() as u64;
    let total = trials.iter().filter_map(|t| t.checked).sum::<usize>() as u64;
    rate_summary(hits, total)
}

/// Fraction of (function, random k-flat) pairs on which the function is constant.
pub fn run_disperser_flats(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut cfg = cfg.clone();
    cfg.kind = ExperimentKind::DisperserFlats;
    let k = cfg.dimension();
    let trials = run_trials(&cfg, |_, _, f, rng| {
        let hits = (0..cfg.per_trial).filter(|_| is_constant_on(f, &sample_flat(cfg.n, k, rng))).count();
        (Some(cfg.per_trial), Some(hits))
    })?;
    let rate = hit_rate(&trials);
    report(
        &cfg,
        trials,
        Some(rate),
        "desk-scale sample of random flats; the disperser statement is asymptotic and covers all flats",
    )
}

/// Fraction of random k-variable 0-restrictions whose residual has degree below 3.
pub fn run_disperser_zero_restrictions(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut cfg = cfg.clone();
    cfg.kind = ExperimentKind::DisperserZeroRestrictions;
    let k = cfg.dimension();
    let trials = run_trials(&cfg, |_, _, f, rng| {
        let hits = (0..cfg.per_trial).filter(|_| random_zero_restriction(f, k, rng).degree() < 3).count();
        (Some(cfg.per_trial), Some(hits))
    })?;
    let rate = hit_rate(&trials);
    report(
        &cfg,
        trials,
        Some(rate),
        "desk-scale sample of random 0-restrictions; the degree-survival statement is asymptotic",
    )
}

/// Empirical sparsity against the binomial prediction.
pub fn run_sampler_stats(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut cfg = cfg.clone();
    cfg.kind = ExperimentKind::SamplerStats;
    let trials = run_trials(&cfg, |_, _, _, _| (None, None))?;
    report(
        &cfg,
        trials,
        None,
        "sparsity statistics; the tail bound on n^s terms is stated only for large n and is reported, not asserted",
    )
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.kind {
        ExperimentKind::DisperserFlats => run_disperser_flats(cfg),
        ExperimentKind::DisperserZeroRestrictions => run_disperser_zero_restrictions(cfg),
        ExperimentKind::SamplerStats => run_sampler_stats(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn wilson_reference_values() {
        // reference: statsmodels proportion_confint(method="wilson", alpha=0.05)
        let (lo, hi) = wilson_interval(37, 500, Z_95);
        assert!(close(lo, 0.05416118475101196) && close(hi, 0.10033475332223056));
        let (lo, hi) = wilson_interval(250, 500, Z_95);
        assert!(close(lo, 0.4563412653024843) && close(hi, 0.5436587346975157));
        let (lo, hi) = wilson_interval(0, 25000, Z_95);
        assert!(close(lo, 0.0) && close(hi, 0.00015363474556582434));
        let (lo, hi) = wilson_interval(1, 1, Z_95);
        assert!(close(lo, 0.2065493143772374) && close(hi, 1.0));
    }

    #[test]
    fn full_flat_of_nonzero_function_is_not_constant() {
        let f = Anf::parse("x1*x2*x3", 5).unwrap();
        assert!(!is_constant_on(&f, &Flat::whole_space(5)));
        assert!(is_constant_on(&Anf::zero(5), &Flat::whole_space(5)));
    }

    #[test]
    fn zero_function_is_constant_on_every_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let flat = sample_flat(12, 3, &mut rng);
            assert!(is_constant_on(&Anf::zero(12), &flat));
        }
    }

    #[test]
    fn restriction_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = crate::generators::complete_degree3(8).unwrap();
        assert_eq!(random_zero_restriction(&f, 8, &mut rng), f);
        for _ in 0..20 {
            assert!(random_zero_restriction(&f, 2, &mut rng).degree() < 3);
            assert_eq!(random_zero_restriction(&f, 5, &mut rng).crucial_count() as u64, binomial3(5));
        }
    }

    #[test]
    fn sampled_flats_have_exact_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for k in 0..=6 {
            let flat = sample_flat(6, k, &mut rng);
            assert_eq!(flat.dimension(), k);
        }
    }

    #[test]
    fn uniform_flat_sampler_hits_all_lines_of_small_space() {
        // F2^3 has 28 lines (1-flats); each should appear about 1/28 of the time
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = std::collections::HashMap::new();
        let draws = 28_000;
        for _ in 0..draws {
            let f = sample_flat(3, 1, &mut rng);
            let mut pts: Vec<u64> = f.points().map(|p| p.low_word()).collect();
            pts.sort_unstable();
            *counts.entry(pts).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 28);
        // binomial sd ≈ 31; allow 5 sd
        assert!(counts.values().all(|&c| (c as i64 - 1000).abs() < 160));
    }

    #[test]
    fn nested_flats_are_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut big_hits = 0;
        let mut small_hits = 0;
        for i in 0..300 {
            let f = random_degree3_half(8, i);
            let flat = sample_flat(8, 3, &mut rng);
            let sub = Flat::new(flat.offset().clone(), flat.basis()[..2].to_vec()).unwrap();
            let (big, small) = (is_constant_on(&f, &flat), is_constant_on(&f, &sub));
            assert!(!big || small);
            big_hits += big as usize;
            small_hits += small as usize;
        }
        assert!(small_hits >= big_hits);
    }

    #[test]
    fn default_dimensions() {
        let cfg = ExperimentConfig::new(ExperimentKind::DisperserZeroRestrictions, 16, 2.5, 1, 1);
        // 3 · √(ln 16) · 16^(1/4) = 9.99...
        assert_eq!(cfg.dimension(), 10);
        let cfg = ExperimentConfig::new(ExperimentKind::DisperserFlats, 12, 2.5, 1, 1);
        assert_eq!(cfg.dimension(), 12);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::SamplerStats, 10, 2.5, 0, 1);
        assert!(run(&cfg).is_err());
        cfg.trials = 1;
        cfg.s = 3.5;
        assert!(matches!(run(&cfg), Err(Error::InvalidConfig(_))));
        let mut flats = ExperimentConfig::new(ExperimentKind::DisperserFlats, 30, 2.5, 1, 1);
        flats.k = Some(25);
        assert!(matches!(run(&flats), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn single_trial_report_echoes_sparsity() {
        let cfg = ExperimentConfig::new(ExperimentKind::SamplerStats, 12, 2.5, 1, 99);
        let r = run(&cfg).unwrap();
        assert_eq!(r.trials.len(), 1);
        assert_eq!(r.sparsity.mean, r.trials[0].sparsity as f64);
        assert!(r.asymptotic_claim);
    }

    #[test]
    fn reports_are_independent_of_thread_count() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::DisperserFlats, 10, 2.5, 40, 3);
        cfg.k = Some(3);
        cfg.per_trial = 5;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run(&cfg)).unwrap();
        let b = four.install(|| run(&cfg)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.trials.len(), 40);
        assert!(a.to_csv().lines().count() == 41);
    }
}
