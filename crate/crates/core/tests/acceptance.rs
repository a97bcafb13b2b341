//! The acceptance gate: every certified identity and inequality, checked at
//! full corpus scale with one verdict line per criterion.
//!
//! Run with `--nocapture` to see the per-criterion lines; the test fails if
//! any criterion fails, listing the offenders.

use num::{BigInt, One, Zero};
use puzzlelab_core::corpus;
use puzzlelab_core::dist::{
    apply_channel, bernoulli_kl, kl_divergence, pow_prob, prob_f64, product_sd_bernoulli, rat,
    statistical_distance, FiniteDist, Kl, Prob,
};
use puzzlelab_core::efid::{
    all_seeds, build_efid_candidate, delta_bound, delta_bound_via_kl, entropy_to_sd_bound,
    equalizer, qefid_to_owpuzz, sd_amp_reps, weak_puzzle_delta_floor, PipelineParams,
    ToeplitzSeed,
};
use puzzlelab_core::primitives::{
    forger_success, heavy_output_count, reduction_adversary_ots,
};
use puzzlelab_core::puzzle::{
    adversary_break, break_floor, correctness_error, optimal_break, verifier_dpi_witness,
    ParamPair, Puzzle,
};
use puzzlelab_core::token::{all_bitstrings, Token};
use puzzlelab_core::transforms::{
    and_repeat, bot_guard, combine, or_repeat, random_input, ver_relax, Candidate,
};
use std::time::Instant;

const CAP: usize = 1_000_000;
const TOL: f64 = 1e-9;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// The shared puzzle corpus: 500 sparse puzzles inside 8-key × 8-puzzle
/// universes, small enough that fourfold products stay exact and fast.
fn puzzle_corpus() -> Vec<Puzzle> {
    let mut r = corpus::rng(1001);
    (0..500)
        .map(|_| corpus::random_puzzle(&mut r, 3, 3, 8, 8, 5, 1))
        .collect()
}

/// Divergence never increases under a channel, 10⁴ triples, supports ≤ 16.
fn crit01() -> Result<(), String> {
    let mut r = corpus::rng(1101);
    for i in 0..10_000 {
        let n = if i % 10 == 0 { 4 } else { 3 };
        let p = corpus::random_dist(&mut r, n, 1 << n);
        let q = corpus::random_dist(&mut r, n, 1 << n);
        let f = corpus::random_channel(&mut r, n, 2);
        let before = kl_divergence(&p, &q);
        let after = kl_divergence(
            &apply_channel(&p, &f).map_err(err)?,
            &apply_channel(&q, &f).map_err(err)?,
        );
        ensure(
            after.le_with_tol(&before, TOL),
            format!("divergence grew under a channel: {after:?} > {before:?}"),
        )?;
    }
    Ok(())
}

/// OR-repetition: correctness error exactly α^t, break exactly 1−(1−β*)^t,
/// and ≤ t·β* whenever β* ≤ 1/t.
fn crit02(corpus: &[Puzzle], sink: &mut Vec<ParamPair>) -> Result<(), String> {
    for p in corpus {
        for t in [2u32, 3, 4] {
            let (_, rep) = or_repeat(p, t, CAP).map_err(err)?;
            let want_alpha = pow_prob(&rep.input.alpha, t);
            ensure(
                rep.output.alpha == want_alpha,
                format!("repeated correctness error is not alpha^{t}"),
            )?;
            let want_beta = Prob::one() - pow_prob(&(Prob::one() - &rep.input.beta), t);
            ensure(
                rep.output.beta == want_beta,
                format!("repeated break is not 1-(1-beta)^{t}"),
            )?;
            let t_rat = rat(t as i64, 1);
            if &rep.input.beta * &t_rat <= Prob::one() {
                ensure(
                    rep.output.beta <= &t_rat * &rep.input.beta,
                    format!("union bound t*beta missed at t={t}"),
                )?;
            }
            sink.push(rep.output.clone());
        }
    }
    Ok(())
}

/// AND-repetition: break exactly (β*)^t, correctness error ≤ t·α.
fn crit03(corpus: &[Puzzle], sink: &mut Vec<ParamPair>) -> Result<(), String> {
    for p in corpus {
        for t in [2u32, 3, 4] {
            let (_, rep) = and_repeat(p, t, CAP).map_err(err)?;
            ensure(
                rep.output.beta == pow_prob(&rep.input.beta, t),
                format!("conjunction break is not beta^{t}"),
            )?;
            ensure(
                rep.output.alpha <= rat(t as i64, 1) * &rep.input.alpha,
                format!("conjunction correctness error exceeds {t}*alpha"),
            )?;
            sink.push(rep.output.clone());
        }
    }
    Ok(())
}

/// Verifier relaxation at thresholds 1/4 and 1/2: correctness error < t and
/// break ≤ β* + α/t.
fn crit04(corpus: &[Puzzle], sink: &mut Vec<ParamPair>) -> Result<(), String> {
    for p in corpus {
        for (tn, td) in [(1i64, 4i64), (1, 2)] {
            let t = rat(tn, td);
            let (_, rep) = ver_relax(p, &t, CAP).map_err(err)?;
            ensure(
                rep.output.alpha < t,
                format!("relaxed correctness error not below {tn}/{td}"),
            )?;
            ensure(
                rep.output.beta <= &rep.input.beta + &rep.input.alpha / &t,
                "relaxed break exceeds beta + alpha/t",
            )?;
            sink.push(rep.output.clone());
        }
    }
    Ok(())
}

/// The ⊥ guard: correctness error ≤ 1/4 and break ≤ β* + α.
fn crit05(corpus: &[Puzzle], sink: &mut Vec<ParamPair>) -> Result<(), String> {
    for p in corpus {
        let (_, rep) = bot_guard(p).map_err(err)?;
        ensure(
            rep.output.alpha <= rat(1, 4),
            "guarded correctness error above 1/4",
        )?;
        ensure(
            rep.output.beta <= &rep.input.beta + &rep.input.alpha,
            "guarded break exceeds beta + alpha",
        )?;
        sink.push(rep.output.clone());
    }
    Ok(())
}

/// Combining a declared-good candidate with an arbitrary one at λ = 4: the
/// certified break bound from the declared parameters is ≤ 2⁻⁴ and the
/// measured combined correctness error is ≤ 2·2⁻⁴.
fn crit06(sink: &mut Vec<ParamPair>) -> Result<(), String> {
    let mut r = corpus::rng(1106);
    let lambda = 4u32;
    for _ in 0..200 {
        let planted = Candidate {
            puzzle: corpus::random_puzzle(&mut r, 2, 2, 2, 2, 2, lambda),
            declared: Some(ParamPair {
                alpha: Prob::zero(),
                beta: rat(1, 256),
            }),
        };
        let other = Candidate::bare(corpus::random_puzzle(&mut r, 2, 2, 2, 2, 2, lambda));
        let (_, rep) = combine(&[planted, other], lambda, CAP).map_err(err)?;
        ensure(
            rep.claimed.beta <= rat(1, 16),
            "combined break bound above 2^-4",
        )?;
        ensure(
            rep.output.alpha <= rat(2, 16),
            "combined correctness error above 2*2^-4",
        )?;
        sink.push(rep.output.clone());
    }
    Ok(())
}

/// Key padding: parameters preserved exactly, padded marginal exactly
/// uniform, full corpus.
fn crit07(corpus: &[Puzzle], sink: &mut Vec<ParamPair>) -> Result<(), String> {
    let uniform_keys = FiniteDist::uniform(all_bitstrings(3)).map_err(err)?;
    for p in corpus {
        let (out, rep) = random_input(p, CAP).map_err(err)?;
        ensure(
            rep.output.alpha == rep.input.alpha && rep.output.beta == rep.input.beta,
            "padding changed a measured parameter",
        )?;
        let marginal = out.sampler.map(|(k, _)| k.clone());
        ensure(
            marginal == uniform_keys,
            "padded key marginal is not uniform",
        )?;
        sink.push(rep.output.clone());
    }
    Ok(())
}

/// Entropy deficit lower-bounds distance from uniform, 10⁴ distributions
/// over up to 8 bits.
fn crit08() -> Result<(), String> {
    let mut r = corpus::rng(1108);
    let uniforms: Vec<FiniteDist<Token>> = (1..=8)
        .map(|m| FiniteDist::uniform(all_bitstrings(m)).unwrap())
        .collect();
    for i in 0..10_000usize {
        let m = 1 + (i % 8);
        let x = corpus::random_dist(&mut r, m, 1 << m);
        let delta = (m as f64 - x.entropy()).max(0.0);
        let bound = entropy_to_sd_bound(m, delta).map_err(err)?;
        let sd = prob_f64(&statistical_distance(&x, &uniforms[m - 1]));
        ensure(
            sd >= bound - TOL,
            format!("distance {sd} below bound {bound} at m={m}"),
        )?;
    }
    Ok(())
}

/// Distance amplification at Bernoulli scale: at q = ⌈12t/δ²⌉ repetitions
/// the exact product distance reaches 1 − 2e⁻ᵗ.
fn crit09() -> Result<(), String> {
    for (dn, dd) in [(1i64, 4i64), (1, 2), (3, 4)] {
        let delta = rat(dn, dd);
        let p = (Prob::one() - &delta) / rat(2, 1);
        let q = (Prob::one() + &delta) / rat(2, 1);
        for t in 1u32..=3 {
            let amp = sd_amp_reps(&delta, &rat(t as i64, 1)).map_err(err)?;
            let want_q = (rat(12 * t as i64, 1) / (&delta * &delta))
                .ceil()
                .to_integer();
            ensure(
                BigInt::from(amp.q) == want_q,
                format!("repetition count at delta={dn}/{dd}, t={t}"),
            )?;
            let sd = product_sd_bernoulli(&p, &q, amp.q as u32).map_err(err)?;
            ensure(
                prob_f64(&sd) >= amp.guarantee,
                format!(
                    "product distance {} below 1-2e^-{t} at delta={dn}/{dd}",
                    prob_f64(&sd)
                ),
            )?;
        }
    }
    Ok(())
}

/// The divergence formula agrees with the Bernoulli divergence on a
/// 100-point grid, and the verifier's acceptance-divergence never exceeds
/// the joint divergence under any optimal adversary.
fn crit10(corpus: &[Puzzle]) -> Result<(), String> {
    for i in 0..25i64 {
        for j in 1..=4i64 {
            let omega = rat(i, 25);
            let gamma = rat(j, 5);
            let direct = delta_bound(&omega, &gamma).map_err(err)?;
            let via_kl = delta_bound_via_kl(&omega, &gamma).map_err(err)?;
            ensure(
                (direct - via_kl).abs() < 1e-12,
                format!("formula mismatch at omega={i}/25, gamma={j}/5"),
            )?;
            match bernoulli_kl(&(Prob::one() - &omega), &gamma) {
                Kl::Finite(v) => ensure(
                    (direct - v).abs() < 1e-12,
                    "formula differs from the Bernoulli divergence",
                )?,
                Kl::Infinite => return Err("unexpected infinite divergence on grid".into()),
            }
        }
    }
    for p in corpus {
        let (_, adv) = optimal_break(p);
        let w = verifier_dpi_witness(p, &adv).map_err(err)?;
        ensure(
            w.ok,
            format!("verifier divergence exceeded joint divergence: {w:?}"),
        )?;
    }
    Ok(())
}

/// The divergence floor at inverse-polynomial security levels.
fn crit11() -> Result<(), String> {
    for lambda in [2u32, 4, 8, 16, 32] {
        for c in [1u32, 2] {
            let f = weak_puzzle_delta_floor(lambda, c).map_err(err)?;
            ensure(
                f.ok && f.delta >= prob_f64(&f.floor),
                format!("floor missed at lambda={lambda}, c={c}"),
            )?;
        }
    }
    Ok(())
}

/// The extraction pipeline on micro instances: output entropy ceiling,
/// equalizer length, and exact pairwise independence of the hash family.
fn crit12() -> Result<(), String> {
    let mut r = corpus::rng(1112);

    // Equalizer length is (ℓ−1)·m for every offset.
    for ell in 2usize..=3 {
        for m in 1usize..=2 {
            let samples: Vec<Vec<Token>> = (0..ell)
                .map(|i| {
                    (0..m)
                        .map(|j| Token::bits(if (i + j) % 2 == 0 { "0" } else { "1" }).unwrap())
                        .collect()
                })
                .collect();
            for i in 1..=m {
                let out = equalizer(i, &samples).map_err(err)?;
                ensure(
                    out.len() == (ell - 1) * m,
                    format!("equalizer length at ell={ell}, m={m}, i={i}"),
                )?;
            }
        }
    }

    // Output entropy ≤ a(ℓH(X) + log₂ m) + seed length.
    for m in 1usize..=2 {
        for ell in 2usize..=3 {
            for a in 1u64..=2 {
                for rbits in 0..=(a as usize).min(1) {
                    for _ in 0..5 {
                        let x = corpus::random_dist(&mut r, m, 1 << m);
                        let params = PipelineParams {
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
                        let (d, _) = build_efid_candidate(&x, &params, CAP).map_err(err)?;
                        let seedlen = ToeplitzSeed::seed_len(a as usize, rbits) as f64;
                        let ceiling =
                            a as f64 * (ell as f64 * x.entropy() + (m as f64).log2()) + seedlen;
                        ensure(
                            d.entropy() <= ceiling + TOL,
                            format!(
                                "entropy {} above ceiling {ceiling} at m={m}, ell={ell}, a={a}, r={rbits}",
                                d.entropy()
                            ),
                        )?;
                    }
                }
            }
        }
    }

    // Exact pairwise independence for a ≤ 4.
    for a in 1usize..=4 {
        for rbits in 1..=a.min(2) {
            let seeds = all_seeds(a, rbits).map_err(err)?;
            let inputs = all_bitstrings(a);
            let expected = seeds.len() / (1usize << (2 * rbits));
            for x in &inputs {
                for y in &inputs {
                    if x >= y {
                        continue;
                    }
                    let mut counts =
                        vec![vec![0usize; 1 << rbits]; 1 << rbits];
                    for seed in &seeds {
                        let hx = seed.hash(&x.to_bools()).map_err(err)?;
                        let hy = seed.hash(&y.to_bools()).map_err(err)?;
                        let ix = hx.iter().fold(0usize, |acc, b| 2 * acc + *b as usize);
                        let iy = hy.iter().fold(0usize, |acc, b| 2 * acc + *b as usize);
                        counts[ix][iy] += 1;
                    }
                    for row in &counts {
                        for &c in row {
                            ensure(
                                c == expected,
                                format!("hash family not pairwise independent at a={a}, r={rbits}"),
                            )?;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Generator output counting: best-seed mass ≤ 2ⁿ and heavy count ≤ 2²ⁿ on
/// 500 generators.
fn crit13() -> Result<(), String> {
    let mut r = corpus::rng(1113);
    for i in 0..500usize {
        let n = 1 + (i % 3);
        let g = corpus::random_prg(&mut r, n);
        let h = heavy_output_count(&g).map_err(err)?;
        ensure(
            h.mass_ok && h.mass <= rat(1 << n, 1),
            format!("best-seed mass above 2^{n}"),
        )?;
        ensure(
            h.ok && h.count <= 1u64 << (2 * n),
            format!("heavy count above 2^{}", 2 * n),
        )?;
    }
    Ok(())
}

/// Far pairs to puzzles: correctness error exactly 1 − ((acc₀+acc₁)/2)^λ
/// and test advantage exactly the statistical distance.
fn crit14(sink: &mut Vec<ParamPair>) -> Result<(), String> {
    let mut r = corpus::rng(1114);
    for i in 0..100u32 {
        let n = 1 + (i as usize % 2);
        let pair = corpus::random_efid_pair(&mut r, n);
        let lambda = 1 + (i % 4);
        let (puz, rep) = qefid_to_owpuzz(&pair, lambda, CAP).map_err(err)?;
        let mean = (&rep.acc0 + &rep.acc1) / rat(2, 1);
        let want = Prob::one() - pow_prob(&mean, lambda);
        ensure(rep.alpha == want, "correctness error formula missed")?;
        ensure(
            correctness_error(&puz) == want,
            "measured correctness error differs from the report",
        )?;
        ensure(
            rep.advantage == statistical_distance(&pair.d0, &pair.d1),
            "test advantage is not the statistical distance",
        )?;
        ensure(rep.unbounded_break.is_one(), "unbounded break is not 1")?;
        sink.push(ParamPair {
            alpha: rep.alpha.clone(),
            beta: rep.unbounded_break.clone(),
        });
    }
    Ok(())
}

/// The forging reduction is an exact identity: forger success equals the
/// reduction adversary's break, 200 micro instances.
fn crit15() -> Result<(), String> {
    let mut r = corpus::rng(1115);
    for _ in 0..200 {
        let p = corpus::random_puzzle(&mut r, 1, 1, 2, 2, 3, 1);
        let forger = corpus::random_forger(&mut r, &p);
        let success = forger_success(&p, &forger).map_err(err)?;
        let adv = reduction_adversary_ots(&forger, &p).map_err(err)?;
        ensure(
            adversary_break(&p, &adv).map_err(err)? == success,
            "reduction break differs from forger success",
        )?;
    }
    Ok(())
}

/// The unbounded break floor: β* ≥ 1 − α on every puzzle measured anywhere
/// in this gate, hence ≥ 1/6 whenever α ≤ 5/6.
fn crit16(corpus: &[Puzzle], sink: &[ParamPair]) -> Result<(), String> {
    let mut pairs: Vec<ParamPair> = sink.to_vec();
    for p in corpus {
        pairs.push(ParamPair {
            alpha: correctness_error(p),
            beta: optimal_break(p).0,
        });
    }
    ensure(pairs.len() > 500, "no measured parameters to check")?;
    let floor = break_floor();
    for pp in &pairs {
        ensure(
            pp.beta >= Prob::one() - &pp.alpha,
            format!("break {} below 1 - correctness error {}", pp.beta, pp.alpha),
        )?;
        if pp.alpha <= rat(5, 6) {
            ensure(
                pp.beta >= floor,
                format!("break {} below the 1/6 floor", pp.beta),
            )?;
        }
    }
    Ok(())
}

#[test]
fn acceptance_gate() {
    let corpus = puzzle_corpus();
    let mut sink: Vec<ParamPair> = Vec::new();
    let mut failures = Vec::new();

    let mut run = |idx: usize, name: &str, outcome: Result<(), String>, start: Instant| {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("criterion {idx:02} {name}: pass ({secs:.1}s)"),
            Err(msg) => {
                println!("criterion {idx:02} {name}: FAIL ({msg})");
                failures.push(format!("{idx:02} {name}: {msg}"));
            }
        }
    };

    macro_rules! timed {
        ($idx:expr, $name:expr, $call:expr) => {{
            let start = Instant::now();
            let outcome = $call;
            run($idx, $name, outcome, start);
        }};
    }

    timed!(1, "divergence data processing", crit01());
    timed!(2, "success amplification by disjunction", crit02(&corpus, &mut sink));
    timed!(3, "security amplification by conjunction", crit03(&corpus, &mut sink));
    timed!(4, "verifier relaxation", crit04(&corpus, &mut sink));
    timed!(5, "bottom-symbol guard", crit05(&corpus, &mut sink));
    timed!(6, "candidate combiner", crit06(&mut sink));
    timed!(7, "uniform key padding", crit07(&corpus, &mut sink));
    timed!(8, "entropy deficit to distance", crit08());
    timed!(9, "distance amplification", crit09());
    timed!(10, "divergence formula and verifier witness", crit10(&corpus));
    timed!(11, "divergence floor", crit11());
    timed!(12, "extraction pipeline", crit12());
    timed!(13, "generator output counting", crit13());
    timed!(14, "far pair to puzzle", crit14(&mut sink));
    timed!(15, "forging reduction identity", crit15());
    timed!(16, "unbounded break floor", crit16(&corpus, &sink));

    assert!(
        failures.is_empty(),
        "acceptance criteria failed:\n{}",
        failures.join("\n")
    );
}
