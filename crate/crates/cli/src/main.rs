//! `thickflat`: analyse ANF inputs, find and check constant flats, run oracles
//! and experiments.
//!
//! Exit codes: 0 success, 2 input error, 3 internal verification failure,
//! 4 negative verdict from `verify-flat`.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thickflat_core::Error;

use input::{parse_seed, InputFormat};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn negative(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::VerificationFailed(_) => 3,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

#[derive(Parser, Debug)]
#[command(name = "thickflat", version, about = "Constant flats of Boolean functions of low algebraic thickness")]
struct Cli {
    /// Worker threads for parallel searches (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct FunctionArgs {
    /// Function file, or "-" for stdin
    file: String,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    format: InputFormat,
    /// Number of variables for bare ANF input (default: largest index used)
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sparsity, degree, crucial terms and occurrence counts
    Analyze {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long)]
        json: bool,
    },
    /// Greedy 0-restrictions plus Dickson decomposition, verified
    FindFlat {
        #[command(flatten)]
        function: FunctionArgs,
        /// Report the dimension guaranteed for crucial count <= n^(3-ε)
        #[arg(long)]
        epsilon: Option<f64>,
        /// Largest flat (in points) verified exhaustively; bigger flats are sampled
        #[arg(long, default_value_t = thickflat_core::pipeline::DEFAULT_SAMPLE_CAP)]
        samples: u64,
        #[arg(long, value_parser = parse_seed, default_value = "0x5EEDF1A7")]
        seed: u64,
        /// Also write the JSON report here
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Check that a function is constant on a flat
    VerifyFlat {
        #[command(flatten)]
        function: FunctionArgs,
        /// Flat as a find-flat JSON report or as text (offset line, then basis lines)
        flat: String,
        /// Claimed constant; overrides the one stored in a report
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        constant: Option<u8>,
        #[arg(long, default_value_t = thickflat_core::pipeline::DEFAULT_SAMPLE_CAP)]
        samples: u64,
        #[arg(long, value_parser = parse_seed, default_value = "0x5EEDF1A7")]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Truth table <-> ANF
    Convert {
        #[arg(long, value_enum)]
        from: Repr,
        #[arg(long, value_enum)]
        to: Repr,
        /// Input file, or "-" for stdin
        file: String,
        /// Number of variables for ANF input (default: largest index used)
        #[arg(long)]
        n: Option<usize>,
        /// Largest n for which a truth table is built
        #[arg(long, default_value_t = thickflat_core::anf::DEFAULT_TRUTH_TABLE_CAP)]
        cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Emit a function from a named family
    Gen {
        #[arg(value_enum)]
        family: Family,
        #[arg(long)]
        n: Option<usize>,
        /// Number of block groups for prop6-family (5m blocks on 30m variables)
        #[arg(long)]
        m: Option<usize>,
        /// Sparsity exponent for rand3-sparse
        #[arg(long)]
        s: Option<f64>,
        /// rand3-sparse inclusion probability is multiplier / n^(3-s)
        #[arg(long, default_value_t = 0.5)]
        multiplier: f64,
        #[arg(long, value_parser = parse_seed, default_value = "0")]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Exact small-n quantities by exhaustive search
    Oracle {
        #[arg(value_enum)]
        kind: OracleKind,
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long)]
        json: bool,
    },
    /// Seeded Monte-Carlo runs
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKindArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2.5)]
        s: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, value_parser = parse_seed, default_value = "0")]
        seed: u64,
        /// Flats or restrictions examined per sampled function
        #[arg(long, default_value_t = 1)]
        per_trial: usize,
        /// Dimension under test (default: from the kind's formula)
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        multiplier: f64,
        #[arg(long, value_enum, default_value_t = SamplerArg::Sparse)]
        sampler: SamplerArg,
        #[arg(long, default_value_t = thickflat_core::experiments::DEFAULT_FLAT_CONSTANT)]
        flat_constant: f64,
        #[arg(long, default_value_t = thickflat_core::experiments::DEFAULT_RESTRICTION_CONSTANT)]
        restriction_constant: f64,
        /// Write the JSON report here
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write per-trial rows as CSV here
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Record wall-clock time in the report (makes it non-reproducible)
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Repr {
    Anf,
    TruthTable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[allow(clippy::enum_variant_names)]
enum Family {
    Majority,
    AllOnes,
    Prop6,
    Prop6Family,
    Complete3,
    Rand3Half,
    Rand3Sparse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    Normality,
    Thickness,
    HittingSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExperimentKindArg {
    DisperserFlats,
    DisperserZeroRestrictions,
    SamplerStats,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SamplerArg {
    Sparse,
    Half,
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::input("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::input(format!("thread pool: {e}")))?;
    }
    commands::dispatch(cli.command)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
