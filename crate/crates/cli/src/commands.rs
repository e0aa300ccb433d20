use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thickflat_core::experiments::{self, ExperimentConfig, ExperimentKind, SamplerKind};
use thickflat_core::generators::{self, Degree3SamplerConfig};
use thickflat_core::pipeline::{
    brute_force_normality, brute_force_thickness, find_constant_flat_with, verify_flat, Flat, FlatDoc, PipelineOptions,
    Verdict,
};
use thickflat_core::restriction::{
    exhaustive_hitting_set, greedy_lower_bound, greedy_restrict, occurrence_counts, StopRule,
};
use thickflat_core::{Anf, FunctionInput, TruthTable};

use crate::input::{emit, load_function, parse_anf_text, read_source, to_json};
use crate::{Command, ExperimentKindArg, Failure, Family, FunctionArgs, OracleKind, Repr, SamplerArg};

pub fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Analyze { function, json } => analyze(&function, json),
        Command::FindFlat { function, epsilon, samples, seed, out, json } => {
            find_flat(&function, epsilon, samples, seed, out.as_deref(), json)
        }
        Command::VerifyFlat { function, flat, constant, samples, seed, json } => {
            verify(&function, &flat, constant.map(|c| c == 1), samples, seed, json)
        }
        Command::Convert { from, to, file, n, cap, out, json } => {
            convert(from, to, &file, n, cap, out.as_deref(), json)
        }
        Command::Gen { family, n, m, s, multiplier, seed, out, json } => {
            gen(family, GenParams { n, m, s, multiplier, seed }, out.as_deref(), json)
        }
        Command::Oracle { kind, function, json } => oracle(kind, &function, json),
        Command::Experiment {
            kind,
            n,
            s,
            trials,
            seed,
            per_trial,
            k,
            multiplier,
            sampler,
            flat_constant,
            restriction_constant,
            out,
            csv,
            timing,
            json,
        } => {
            let kind = match kind {
                ExperimentKindArg::DisperserFlats => ExperimentKind::DisperserFlats,
                ExperimentKindArg::DisperserZeroRestrictions => ExperimentKind::DisperserZeroRestrictions,
                ExperimentKindArg::SamplerStats => ExperimentKind::SamplerStats,
            };
            let mut cfg = ExperimentConfig::new(kind, n, s, trials, seed);
            cfg.per_trial = per_trial;
            cfg.k = k;
            cfg.multiplier = multiplier;
            cfg.sampler = match sampler {
                SamplerArg::Sparse => SamplerKind::Sparse,
                SamplerArg::Half => SamplerKind::Half,
            };
            cfg.flat_constant = flat_constant;
            cfg.restriction_constant = restriction_constant;
            experiment(&cfg, out.as_deref(), csv.as_deref(), timing, json)
        }
    }
}

fn load(args: &FunctionArgs) -> Result<FunctionInput, Failure> {
    load_function(&args.file, args.format, args.n)
}

#[derive(Serialize)]
struct AnalyzeDoc {
    n: usize,
    sparsity: usize,
    degree: usize,
    crucial: usize,
    /// Crucial-term occurrences of x1..xn.
    occurrences: Vec<usize>,
    max_occurrence: usize,
    greedy_bound: usize,
    /// Whether the metrics describe `g` of a container with a bijection rather than `f` itself.
    bijection: bool,
}

fn analyze(args: &FunctionArgs, json: bool) -> Result<(), Failure> {
    let input = load(args)?;
    let g = input.g();
    let n = g.num_vars();
    let all: BTreeSet<usize> = (1..=n).collect();
    let occurrences: Vec<usize> = occurrence_counts(g, &all).into_values().collect();
    let doc = AnalyzeDoc {
        n,
        sparsity: g.sparsity(),
        degree: g.degree(),
        crucial: g.crucial_count(),
        max_occurrence: occurrences.iter().copied().max().unwrap_or(0),
        greedy_bound: greedy_lower_bound(g.crucial_count(), n),
        occurrences,
        bijection: input.bijection().is_some(),
    };
    if json {
        return emit(None, &to_json(&doc));
    }
    let mut s = String::new();
    if doc.bijection {
        s.push_str("metrics of g (input carries an affine bijection)\n");
    }
    let _ = writeln!(s, "variables: {}", doc.n);
    let _ = writeln!(s, "sparsity: {}", doc.sparsity);
    let _ = writeln!(s, "degree: {}", doc.degree);
    let _ = writeln!(s, "crucial terms: {}", doc.crucial);
    let _ = writeln!(s, "max occurrence: {}", doc.max_occurrence);
    let _ = writeln!(s, "greedy step bound: {}", doc.greedy_bound);
    let occ: Vec<String> = doc.occurrences.iter().enumerate().map(|(i, c)| format!("x{}:{c}", i + 1)).collect();
    let _ = writeln!(s, "occurrences: {}", occ.join(" "));
    emit(None, &s)
}

fn find_flat(
    args: &FunctionArgs,
    epsilon: Option<f64>,
    samples: u64,
    seed: u64,
    out: Option<&Path>,
    json: bool,
) -> Result<(), Failure> {
    let input = load(args)?;
    let report = find_constant_flat_with(&input, PipelineOptions { epsilon, sample_cap: samples, verify_seed: seed })?;
    let doc = report.to_doc();
    let text = to_json(&doc);
    if let Some(path) = out {
        emit(Some(path), &text)?;
    }
    if json {
        return emit(None, &text);
    }
    let mut s = String::new();
    let _ = writeln!(s, "dimension: {}", doc.dimension);
    let _ = writeln!(s, "constant: {}", doc.constant);
    let vars: Vec<String> = report.trace.vars().map(|v| format!("x{v}")).collect();
    let _ = writeln!(s, "zeroed: {}", if vars.is_empty() { "-".to_string() } else { vars.join(" ") });
    let _ = writeln!(s, "dickson: t = {}, type {:?}", report.dickson.t, report.dickson.form_type);
    if let (Some(e), Some(g)) = (doc.epsilon, doc.guaranteed_dim) {
        let _ = writeln!(s, "guaranteed dimension (epsilon = {e}): {g:.4}");
    }
    let v = &report.verification;
    match v.seed {
        Some(seed) => {
            let _ = writeln!(s, "verified: sampled, {} points, seed {seed:#x}", v.points);
        }
        None => {
            let _ = writeln!(s, "verified: exhaustive, {} points", v.points);
        }
    }
    s.push_str("flat:\n");
    s.push_str(&report.flat.to_text());
    emit(None, &s)
}

/// Flat file contents: a find-flat report (any extra fields ignored) or plain text.
#[derive(Deserialize)]
struct ClaimDoc {
    offset: String,
    basis: Vec<String>,
    #[serde(default)]
    dimension: Option<usize>,
    #[serde(default)]
    constant: Option<u8>,
}

fn load_flat(path: &str) -> Result<(Flat, Option<bool>), Failure> {
    let text = read_source(path)?;
    if !text.trim_start().starts_with('{') {
        return Ok((Flat::parse_text(&text)?, None));
    }
    let doc: ClaimDoc = serde_json::from_str(&text).map_err(|e| Failure::input(format!("{path}: {e}")))?;
    let flat = FlatDoc { offset: doc.offset, basis: doc.basis }.to_flat()?;
    if let Some(d) = doc.dimension.filter(|&d| d != flat.dimension()) {
        return Err(Failure::input(format!("{path}: dimension {d} but {} basis vectors", flat.dimension())));
    }
    let constant = match doc.constant {
        None => None,
        Some(0) => Some(false),
        Some(1) => Some(true),
        Some(c) => return Err(Failure::input(format!("{path}: constant must be 0 or 1, got {c}"))),
    };
    Ok((flat, constant))
}

#[derive(Serialize)]
struct WitnessDoc {
    point: String,
    value: u8,
}

#[derive(Serialize)]
struct VerifyDoc {
    verdict: &'static str,
    dimension: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    claimed: Option<u8>,
    matches: bool,
    mode: &'static str,
    points: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    witness: Vec<WitnessDoc>,
}

fn verify(
    args: &FunctionArgs,
    flat_path: &str,
    constant: Option<bool>,
    samples: u64,
    seed: u64,
    json: bool,
) -> Result<(), Failure> {
    let input = load(args)?;
    let (flat, stored) = load_flat(flat_path)?;
    let claimed = constant.or(stored);
    let verdict = verify_flat(&input, &flat, samples, seed)?;
    let k = flat.dimension();
    let exhaustive_points = if k < 64 { 1u64 << k } else { u64::MAX };
    let doc = match &verdict {
        Verdict::Constant(v) => VerifyDoc {
            verdict: "constant",
            dimension: k,
            value: Some(*v as u8),
            claimed: claimed.map(u8::from),
            matches: claimed.is_none_or(|c| c == *v),
            mode: "exhaustive",
            points: exhaustive_points,
            seed: None,
            witness: Vec::new(),
        },
        Verdict::SampledOk { samples, value } => VerifyDoc {
            verdict: "sampled_constant",
            dimension: k,
            value: Some(*value as u8),
            claimed: claimed.map(u8::from),
            matches: claimed.is_none_or(|c| c == *value),
            mode: "sampled",
            points: *samples,
            seed: Some(seed),
            witness: Vec::new(),
        },
        Verdict::NotConstant { first, second } => VerifyDoc {
            verdict: "not_constant",
            dimension: k,
            value: None,
            claimed: claimed.map(u8::from),
            matches: false,
            mode: if k < 63 && exhaustive_points <= samples { "exhaustive" } else { "sampled" },
            points: exhaustive_points.min(samples),
            seed: (exhaustive_points > samples).then_some(seed),
            witness: [first, second]
                .iter()
                .map(|(p, v)| WitnessDoc { point: p.to_bit_string(), value: *v as u8 })
                .collect(),
        },
    };
    if json {
        emit(None, &to_json(&doc))?;
    } else {
        let mut s = String::new();
        match &verdict {
            Verdict::Constant(v) => {
                let _ = writeln!(s, "constant {} on all {} points", *v as u8, doc.points);
            }
            Verdict::SampledOk { samples, value } => {
                let _ = writeln!(
                    s,
                    "sampled: {samples} random points (seed {seed:#x}) all gave {}; not exhaustive",
                    *value as u8
                );
            }
            Verdict::NotConstant { .. } => {
                s.push_str("not constant:\n");
                for w in &doc.witness {
                    let _ = writeln!(s, "  f({}) = {}", w.point, w.value);
                }
            }
        }
        if let Some(c) = doc.claimed {
            let _ = writeln!(s, "claimed constant {c}: {}", if doc.matches { "ok" } else { "MISMATCH" });
        }
        emit(None, &s)?;
    }
    if doc.matches {
        Ok(())
    } else {
        Err(Failure::negative(match doc.verdict {
            "not_constant" => "function is not constant on the flat".to_string(),
            _ => {
                format!("function is constant {} but {} was claimed", doc.value.unwrap_or(0), doc.claimed.unwrap_or(0))
            }
        }))
    }
}

#[derive(Serialize)]
struct ConvertDoc {
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    anf: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth_table: Option<String>,
}

fn convert(
    from: Repr,
    to: Repr,
    file: &str,
    n: Option<usize>,
    cap: usize,
    out: Option<&Path>,
    json: bool,
) -> Result<(), Failure> {
    let text = read_source(file)?;
    let anf = match from {
        Repr::Anf => parse_anf_text(&text, n)?,
        Repr::TruthTable => {
            let tt = TruthTable::parse(&text)?;
            if let Some(n) = n.filter(|&n| n != tt.num_vars()) {
                return Err(Failure::input(format!("--n {n} but the table has {} variables", tt.num_vars())));
            }
            tt.to_anf_capped(cap)?
        }
    };
    let doc = match to {
        Repr::Anf => ConvertDoc { n: anf.num_vars(), anf: Some(anf.to_string()), truth_table: None },
        Repr::TruthTable => ConvertDoc {
            n: anf.num_vars(),
            anf: None,
            truth_table: Some(anf.to_truth_table_capped(cap)?.to_bit_string()),
        },
    };
    let body = if json {
        to_json(&doc)
    } else {
        format!("{}\n", doc.anf.as_deref().or(doc.truth_table.as_deref()).unwrap_or_default())
    };
    emit(out, &body)
}

struct GenParams {
    n: Option<usize>,
    m: Option<usize>,
    s: Option<f64>,
    multiplier: f64,
    seed: u64,
}

fn require<T>(v: Option<T>, flag: &str, family: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::input(format!("{family} needs --{flag}")))
}

fn gen(family: Family, p: GenParams, out: Option<&Path>, json: bool) -> Result<(), Failure> {
    let (f, description): (Anf, String) = match family {
        Family::Majority => {
            let n = require(p.n, "n", "majority")?;
            (generators::majority(n)?, format!("majority n={n}"))
        }
        Family::AllOnes => {
            let n = require(p.n, "n", "all-ones")?;
            (generators::all_ones_indicator(n)?, format!("all-ones n={n}"))
        }
        Family::Prop6 => (generators::prop6_base(), "prop6".to_string()),
        Family::Prop6Family => {
            let m = require(p.m, "m", "prop6-family")?;
            (generators::prop6_family(m)?, format!("prop6-family m={m}"))
        }
        Family::Complete3 => {
            let n = require(p.n, "n", "complete3")?;
            (generators::complete_degree3(n)?, format!("complete3 n={n}"))
        }
        Family::Rand3Half => {
            let n = require(p.n, "n", "rand3-half")?;
            eprintln!("seed: {}", p.seed);
            (generators::random_degree3_half(n, p.seed), format!("rand3-half n={n} seed={}", p.seed))
        }
        Family::Rand3Sparse => {
            let n = require(p.n, "n", "rand3-sparse")?;
            let s = require(p.s, "s", "rand3-sparse")?;
            let cfg = Degree3SamplerConfig::new(n, s, p.seed)?.with_multiplier(p.multiplier)?;
            eprintln!("seed: {}", p.seed);
            (
                generators::random_degree3_sparse(&cfg)?,
                format!("rand3-sparse n={n} s={s} multiplier={} seed={}", p.multiplier, p.seed),
            )
        }
    };
    let body = if json { to_json(&FunctionInput::plain(f).to_container(Some(description))) } else { format!("{f}\n") };
    emit(out, &body)
}

#[derive(Serialize)]
struct OracleDoc {
    kind: &'static str,
    n: usize,
    value: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    flat: Option<FlatDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    set: Option<Vec<usize>>,
}

fn oracle(kind: OracleKind, args: &FunctionArgs, json: bool) -> Result<(), Failure> {
    let input = load(args)?;
    let g = input.g();
    let n = g.num_vars();
    // normality and thickness are invariant under affine bijections, so g stands in for f
    let doc = match kind {
        OracleKind::Normality => {
            let (k, flat) = brute_force_normality(g)?;
            let flat = match input.bijection() {
                Some(a) => flat.map_through(a)?,
                None => flat,
            };
            OracleDoc { kind: "normality", n, value: k, flat: Some(flat.to_doc()), set: None }
        }
        OracleKind::Thickness => {
            OracleDoc { kind: "thickness", n, value: brute_force_thickness(g)?, flat: None, set: None }
        }
        OracleKind::HittingSet => {
            let budget = greedy_restrict(g, StopRule::UntilNoCrucial).trace().len();
            let set = exhaustive_hitting_set(g, budget)?
                .ok_or_else(|| Failure::input("hitting-set search found nothing within the greedy budget"))?;
            OracleDoc { kind: "hitting-set", n, value: set.len(), flat: None, set: Some(set) }
        }
    };
    if json {
        return emit(None, &to_json(&doc));
    }
    let mut s = format!("{}: {}\n", doc.kind, doc.value);
    if let Some(flat) = &doc.flat {
        s.push_str("flat:\n");
        s.push_str(&FlatDoc::to_flat(flat)?.to_text());
    }
    if let Some(set) = &doc.set {
        let vars: Vec<String> = set.iter().map(|v| format!("x{v}")).collect();
        let _ = writeln!(s, "set: {}", if vars.is_empty() { "-".to_string() } else { vars.join(" ") });
    }
    emit(None, &s)
}

fn experiment(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
    csv: Option<&Path>,
    timing: bool,
    json: bool,
) -> Result<(), Failure> {
    eprintln!("master seed: {}", cfg.master_seed);
    let start = Instant::now();
    let mut report = experiments::run(cfg)?;
    if timing {
        report.wall_clock_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    let text = to_json(&report);
    if let Some(path) = out {
        emit(Some(path), &text)?;
    }
    if let Some(path) = csv {
        emit(Some(path), &report.to_csv())?;
    }
    if json {
        return emit(None, &text);
    }
    let mut s = String::new();
    let _ = writeln!(s, "kind: {:?}", report.kind);
    let _ = writeln!(s, "n = {}, s = {}, k = {}, p = {:.6}", cfg.n, cfg.s, report.k, report.probability);
    let _ = writeln!(s, "trials: {} (master seed {})", report.trials.len(), cfg.master_seed);
    if let Some(r) = &report.rate {
        let _ = writeln!(
            s,
            "rate: {}/{} = {:.6}, 95% Wilson CI [{:.6}, {:.6}]",
            r.successes, r.total, r.rate, r.ci_low, r.ci_high
        );
    }
    let sp = &report.sparsity;
    let _ = writeln!(
        s,
        "sparsity mean {:.3} (predicted {:.3}, z = {:.3}, within 4 sigma: {})",
        sp.mean, sp.predicted_mean, sp.z_score, sp.within_4_sigma
    );
    let _ = writeln!(s, "tail rate above n^s = {:.1}: {:.4}", sp.tail_threshold, sp.tail_rate);
    let _ = writeln!(s, "note: {}", report.note);
    emit(None, &s)
}
