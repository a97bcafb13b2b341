//! Command-line front end: file ingestion, transforms, bound checks, and
//! report emission over the line-oriented puzzle formats.
//!
//! Exit codes: 0 success, 1 bound violation, 2 parse/validation error,
//! 3 support cap exceeded.

use clap::{Parser, Subcommand, ValueEnum};
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use puzzlelab_core::dist::{prob_f64, rat, Kl, Prob};
use puzzlelab_core::error::Error;
use puzzlelab_core::fmt::{
    parse_nicom, parse_otsig, parse_pdprg, parse_puzzle, report_prob, serialize_puzzle, Report,
};
use puzzlelab_core::primitives::{puzzle_from_commitment, puzzle_from_ots, puzzle_from_prg};
use puzzlelab_core::puzzle::{
    break_floor, correctness_error, distributional_gap, joint_pinsker, kl_sampling_hardness,
    optimal_break, Puzzle,
};
use puzzlelab_core::transforms::{
    and_repeat, bot_guard, combine, correctness_guarantee, or_repeat, random_input, ver_relax,
    Candidate, GuaranteeMode, TransformReport,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "puzzlelab", version, about = "Exact measurements and transforms for one-way puzzle files")]
struct Cli {
    /// Cap on the number of outcomes any product construction may build.
    #[arg(long, global = true, default_value_t = puzzlelab_core::DEFAULT_SUPPORT_CAP)]
    max_support: usize,

    /// Tolerance for floating-point comparisons in reports.
    #[arg(long, global = true, default_value_t = puzzlelab_core::DEFAULT_TOLERANCE)]
    tolerance: f64,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Measure a puzzle file and emit a report of its exact parameters.
    Analyze {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
        /// Write the report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Apply a puzzle-to-puzzle transform and write the result.
    Transform {
        /// Input puzzle file(s); `combine` takes two or more.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum)]
        op: OpName,
        /// Repetition count for the repeat transforms.
        #[arg(long)]
        t: Option<u32>,
        /// Failure threshold for `ver-relax`, as `num/den`.
        #[arg(long)]
        threshold: Option<String>,
        /// Security parameter for guarantee and combine.
        #[arg(long)]
        lambda: Option<u32>,
        #[arg(long, value_enum, default_value_t = ModeName::Ev)]
        mode: ModeName,
        /// Where to write the transformed puzzle.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
    },

    /// Bounds and constructions for the entropy-flattening pipeline.
    Efid {
        #[command(subcommand)]
        cmd: EfidCmd,
    },

    /// Parse a file and verify its invariants; exit nonzero on violations.
    Check { input: PathBuf },

    /// Convert a signature, commitment, or generator block into a puzzle.
    Convert {
        input: PathBuf,
        #[arg(long, value_enum)]
        from: SourceKind,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        lambda: u32,
    },
}

#[derive(Subcommand)]
enum EfidCmd {
    /// Print the entropy-deficit-to-distance bound δ/(2m−δ) − 2^{−δ/2}.
    Bounds {
        /// Bit length m.
        #[arg(long)]
        m: usize,
        /// Entropy deficit δ, as an integer or `num/den`.
        #[arg(long)]
        delta: String,
    },
    /// Run the flattening-and-extraction pipeline on a puzzle's marginal.
    Build {
        input: PathBuf,
        /// Block count m.
        #[arg(long)]
        m: usize,
        /// Equalizer copies ℓ.
        #[arg(long)]
        ell: usize,
        /// Repetition count a.
        #[arg(long)]
        a: u64,
        /// Extracted bits per column.
        #[arg(long, default_value_t = 0)]
        rbits: usize,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpName {
    OrRepeat,
    AndRepeat,
    VerRelax,
    BotGuard,
    CorrectnessGuarantee,
    RandomInput,
    Combine,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeName {
    General,
    Ev,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceKind {
    Otsig,
    Nicom,
    Pdprg,
}

/// Everything that can stop a command, mapped onto the exit codes.
enum Failure {
    /// Exit 1: a certified bound did not hold.
    Bound(String),
    /// Exit 2 or 3 depending on the underlying error.
    Core(Error),
    /// Exit 2: command-level validation (bad flag combinations, IO).
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Bound(msg)) => {
            eprintln!("bound violation: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("{e}");
            match e {
                Error::Resource { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cap = cli.max_support;
    let tol = cli.tolerance;
    match cli.cmd {
        Cmd::Analyze {
            input,
            format,
            output,
        } => {
            let p = read_puzzle(&input)?;
            let report = analyze(&p, tol);
            emit(&report, format, output.as_deref())?;
            if report.all_satisfied() {
                Ok(())
            } else {
                Err(Failure::Bound(format!(
                    "{} report row(s) unsatisfied",
                    report.rows.iter().filter(|r| !r.satisfied).count()
                )))
            }
        }
        Cmd::Transform {
            inputs,
            op,
            t,
            threshold,
            lambda,
            mode,
            output,
            format,
        } => {
            let puzzles: Vec<Puzzle> = inputs
                .iter()
                .map(|p| read_puzzle(p))
                .collect::<Result<_, _>>()?;
            let (out, rep) = apply_transform(&puzzles, op, t, threshold, lambda, mode, cap)?;
            write_text(&output, &serialize_puzzle(&out, cap)?)?;
            let report = transform_report(&rep);
            emit(&report, format, None)?;
            if rep.certified {
                Ok(())
            } else {
                Err(Failure::Bound("transform claim not certified".into()))
            }
        }
        Cmd::Efid { cmd } => run_efid(cmd, cap, tol),
        Cmd::Check { input } => {
            let text = read_text(&input)?;
            let p = parse_puzzle(&text)?;
            let canonical = serialize_puzzle(&p, cap)?;
            let reparsed = parse_puzzle(&canonical)?;
            let stable = serialize_puzzle(&reparsed, cap)? == canonical;
            let alpha = correctness_error(&p);
            let beta = optimal_break(&p).0;
            let mut report = Report::default();
            report.push(
                "round_trip_stable",
                stable.to_string(),
                "true",
                "canonical-serialization",
                stable,
            );
            let floor = Prob::one() - &alpha;
            report.push(
                "optimal_break",
                report_prob(&beta),
                report_prob(&floor),
                "honest-key-replay",
                beta >= floor,
            );
            emit(&report, OutFormat::Csv, None)?;
            if report.all_satisfied() {
                Ok(())
            } else {
                Err(Failure::Bound("file invariants violated".into()))
            }
        }
        Cmd::Convert {
            input,
            from,
            output,
            lambda,
        } => {
            let text = read_text(&input)?;
            let p = match from {
                SourceKind::Otsig => puzzle_from_ots(&parse_otsig(&text)?, lambda)?,
                SourceKind::Nicom => puzzle_from_commitment(&parse_nicom(&text)?, lambda)?,
                SourceKind::Pdprg => puzzle_from_prg(&parse_pdprg(&text)?, lambda, cap)?,
            };
            write_text(&output, &serialize_puzzle(&p, cap)?)?;
            Ok(())
        }
    }
}

fn run_efid(cmd: EfidCmd, cap: usize, tol: f64) -> Result<(), Failure> {
    match cmd {
        EfidCmd::Bounds { m, delta } => {
            let delta = parse_ratio(&delta)?;
            if delta.is_negative() || delta > rat(m as i64, 1) {
                return Err(Failure::Usage(format!(
                    "delta must lie in [0, {m}]"
                )));
            }
            // δ/(2m−δ) − 2^{−δ/2}: exact when δ is an even-numerator rational
            // with denominator 1 after halving, i.e. δ/2 is an integer.
            let half = &delta / rat(2, 1);
            if half.is_integer() {
                let exp = half.to_integer().to_u32().ok_or_else(|| {
                    Failure::Usage("delta too large".into())
                })?;
                let tail = BigRational::new(BigInt::one(), BigInt::from(2u32).pow(exp));
                let bound = &delta / (rat(2 * m as i64, 1) - &delta) - tail;
                println!("{bound}");
            } else {
                let d = prob_f64(&delta);
                let bound =
                    puzzlelab_core::efid::entropy_to_sd_bound(m, d).map_err(Failure::Core)?;
                println!("{bound}");
            }
            Ok(())
        }
        EfidCmd::Build {
            input,
            m,
            ell,
            a,
            rbits,
            format,
        } => {
            let p = read_puzzle(&input)?;
            let x = p.puzzle_marginal();
            let params = puzzlelab_core::efid::PipelineParams {
                omega: 0.0,
                gamma: 0.0,
                delta: 0.0,
                gap: 1.0,
                nu_star: 0.0,
                m,
                ell,
                kappa: 1,
                a,
                rbits,
                q: 1,
                d_nu: 0.0,
            };
            let (d, d_nu) =
                puzzlelab_core::efid::build_efid_candidate(&x, &params, cap)?;
            let seedlen = puzzlelab_core::efid::ToeplitzSeed::seed_len(a as usize, rbits);
            let ceiling = a as f64 * (ell as f64 * x.entropy() + (m as f64).log2()) + seedlen as f64;
            let mut report = Report::default();
            report.push(
                "output_entropy",
                format!("{}", d.entropy()),
                format!("{ceiling}"),
                "flattening-entropy-ceiling",
                d.entropy() <= ceiling + tol,
            );
            report.push(
                "output_support",
                d.support_len().to_string(),
                cap.to_string(),
                "support-cap",
                d.support_len() <= cap,
            );
            report.push(
                "output_length",
                d_nu.to_string(),
                d_nu.to_string(),
                "declared-length",
                true,
            );
            emit(&report, format, None)?;
            if report.all_satisfied() {
                Ok(())
            } else {
                Err(Failure::Bound("pipeline bound violated".into()))
            }
        }
    }
}

fn apply_transform(
    puzzles: &[Puzzle],
    op: OpName,
    t: Option<u32>,
    threshold: Option<String>,
    lambda: Option<u32>,
    mode: ModeName,
    cap: usize,
) -> Result<(Puzzle, TransformReport), Failure> {
    let single = || -> Result<&Puzzle, Failure> {
        if puzzles.len() == 1 {
            Ok(&puzzles[0])
        } else {
            Err(Failure::Usage("this transform takes exactly one input".into()))
        }
    };
    let need_t = || t.ok_or_else(|| Failure::Usage("--t is required for this transform".into()));
    let need_lambda =
        || lambda.ok_or_else(|| Failure::Usage("--lambda is required for this transform".into()));
    match op {
        OpName::OrRepeat => Ok(or_repeat(single()?, need_t()?, cap)?),
        OpName::AndRepeat => Ok(and_repeat(single()?, need_t()?, cap)?),
        OpName::VerRelax => {
            let raw = threshold
                .ok_or_else(|| Failure::Usage("--threshold is required for ver-relax".into()))?;
            Ok(ver_relax(single()?, &parse_ratio(&raw)?, cap)?)
        }
        OpName::BotGuard => Ok(bot_guard(single()?)?),
        OpName::CorrectnessGuarantee => {
            let m = match mode {
                ModeName::General => GuaranteeMode::General,
                ModeName::Ev => GuaranteeMode::Ev,
            };
            Ok(correctness_guarantee(single()?, m, need_lambda()?, cap)?)
        }
        OpName::RandomInput => Ok(random_input(single()?, cap)?),
        OpName::Combine => {
            if puzzles.len() < 2 {
                return Err(Failure::Usage("combine takes two or more inputs".into()));
            }
            let candidates: Vec<Candidate> =
                puzzles.iter().cloned().map(Candidate::bare).collect();
            Ok(combine(&candidates, need_lambda()?, cap)?)
        }
    }
}

/// The measurement report for a single puzzle.
fn analyze(p: &Puzzle, tol: f64) -> Report {
    let alpha = correctness_error(p);
    let (beta, adv) = optimal_break(p);
    let mut report = Report::default();

    let honest = Prob::one() - &alpha;
    report.push(
        "correctness_error",
        report_prob(&alpha),
        "1/1",
        "probability-range",
        alpha <= Prob::one(),
    );
    report.push(
        "optimal_break",
        report_prob(&beta),
        report_prob(&honest),
        "honest-key-replay",
        beta >= honest,
    );
    let floor_holds = alpha > rat(5, 6) || beta >= break_floor();
    report.push(
        "break_floor",
        report_prob(&beta),
        report_prob(&break_floor()),
        "weak-puzzle-floor",
        floor_holds,
    );

    let puzzle_marginal = p.puzzle_marginal();
    let key_marginal = p.sampler.map(|(k, _)| k.clone());
    for (name, d) in [("puzzle_entropy", &puzzle_marginal), ("key_entropy", &key_marginal)] {
        let ceiling = (d.support_len() as f64).log2();
        report.push(
            name,
            format!("{}", d.entropy()),
            format!("{ceiling}"),
            "support-ceiling",
            d.entropy() <= ceiling + tol,
        );
    }

    // Distributional measurements against the optimal adversary.
    if let Ok(gap) = distributional_gap(p, &adv) {
        let pin = joint_pinsker(p, &adv).expect("same adversary");
        report.push(
            "distributional_gap",
            report_prob(&gap),
            match &pin.kl {
                Kl::Finite(v) => format!("{}", (std::f64::consts::LN_2 / 2.0 * v).sqrt()),
                Kl::Infinite => "inf".into(),
            },
            "pinsker",
            pin.bound_ok,
        );
        let floor =
            puzzlelab_core::puzzle::distributional_kl_floor(&gap).expect("gap in range");
        let kl = kl_sampling_hardness(p, &adv).expect("same adversary");
        let kl_ok = match kl {
            Kl::Infinite => true,
            Kl::Finite(v) => v >= floor - tol,
        };
        report.push(
            "kl_sampling_hardness",
            match kl {
                Kl::Finite(v) => format!("{v}"),
                Kl::Infinite => "inf".into(),
            },
            format!("{floor}"),
            "quadratic-divergence-floor",
            kl_ok,
        );
    }
    report
}

/// Report rows for a transform: measured input, claimed bounds, measured
/// output, and whether the claim is certified.
fn transform_report(rep: &TransformReport) -> Report {
    let mut report = Report::default();
    report.push(
        "input_correctness_error",
        report_prob(&rep.input.alpha),
        "1/1",
        "measured-input",
        true,
    );
    report.push(
        "input_break",
        report_prob(&rep.input.beta),
        "1/1",
        "measured-input",
        true,
    );
    report.push(
        "output_correctness_error",
        report_prob(&rep.output.alpha),
        report_prob(&rep.claimed.alpha),
        "transform-claim",
        rep.output.alpha <= rep.claimed.alpha,
    );
    report.push(
        "output_break",
        report_prob(&rep.output.beta),
        report_prob(&rep.claimed.beta),
        "transform-claim",
        rep.output.beta <= rep.claimed.beta,
    );
    report.push(
        "certified",
        rep.certified.to_string(),
        "true",
        "transform-claim",
        rep.certified,
    );
    report
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn read_puzzle(path: &Path) -> Result<Puzzle, Failure> {
    Ok(parse_puzzle(&read_text(path)?)?)
}

fn parse_ratio(s: &str) -> Result<Prob, Failure> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| Failure::Usage(format!("bad rational {s:?}")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| Failure::Usage(format!("bad rational {s:?}")))?;
    if d.is_zero() {
        return Err(Failure::Usage(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(n, d))
}

fn emit(report: &Report, format: OutFormat, output: Option<&Path>) -> Result<(), Failure> {
    let text = match format {
        OutFormat::Csv => report.to_csv(),
        OutFormat::Json => report.to_json(),
    };
    match output {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
