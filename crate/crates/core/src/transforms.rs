//! Puzzle-to-puzzle operators with exact parameter bookkeeping.
//!
//! Every operator returns the transformed puzzle together with a
//! [`TransformReport`] relating three parameter pairs:
//!
//! - `input`: the input puzzle's measured correctness error and unbounded
//!   optimal break;
//! - `output`: the same quantities measured exactly on the output puzzle;
//! - `claimed`: the bound the construction promises as a function of the
//!   input (or declared) parameters.
//!
//! The `certified` flag records that the adversary-uniform inequalities of
//! the construction hold at the optimal adversary. Note that the *unbounded*
//! break always dominates one minus the correctness error, so a claimed
//! security bound below that line is bookkeeping against declared
//! computational parameters, never a statement about unbounded adversaries;
//! reports carry both so the distinction stays visible.

use crate::dist::{pow_prob, rat, FiniteDist, Prob};
use crate::error::{Error, Result};
use crate::puzzle::{
    correctness_error, flatten_verifier, optimal_break, ParamPair, Puzzle, Verifier,
    VerifierTable,
};
use crate::token::{all_bitstrings, Token};
use num::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// Exact measured/claimed parameter bookkeeping for one transform.
#[derive(Clone, Debug)]
pub struct TransformReport {
    pub input: ParamPair,
    pub output: ParamPair,
    pub claimed: ParamPair,
    pub certified: bool,
    pub notes: Vec<String>,
}

fn measured(p: &Puzzle) -> ParamPair {
    ParamPair {
        alpha: correctness_error(p),
        beta: optimal_break(p).0,
    }
}

fn clamp1(p: Prob) -> Prob {
    if p > Prob::one() {
        Prob::one()
    } else {
        p
    }
}

/// `t`-fold independent product of a sampler, dot-joining each coordinate.
fn sampler_power(
    sampler: &FiniteDist<(Token, Token)>,
    t: u32,
    cap: usize,
) -> Result<FiniteDist<(Token, Token)>> {
    let mut needed: usize = 1;
    for _ in 0..t {
        needed = needed
            .checked_mul(sampler.support_len())
            .filter(|&n| n <= cap)
            .ok_or(Error::Resource { needed: usize::MAX, cap })?;
    }
    sampler_product(&vec![sampler.clone(); t as usize], cap)
}

/// Independent product of several samplers, dot-joining coordinates.
fn sampler_product(
    samplers: &[FiniteDist<(Token, Token)>],
    cap: usize,
) -> Result<FiniteDist<(Token, Token)>> {
    let mut needed: usize = 1;
    for s in samplers {
        needed = needed
            .checked_mul(s.support_len())
            .filter(|&n| n <= cap)
            .ok_or(Error::Resource { needed: usize::MAX, cap })?;
    }
    let mut acc: Vec<(Vec<Token>, Vec<Token>, Prob)> = vec![(Vec::new(), Vec::new(), Prob::one())];
    for s in samplers {
        let mut next = Vec::with_capacity(acc.len() * s.support_len());
        for (ks, ss, w) in &acc {
            for ((k, sv), pv) in s.outcomes() {
                let mut ks2 = ks.clone();
                let mut ss2 = ss.clone();
                ks2.push(k.clone());
                ss2.push(sv.clone());
                next.push((ks2, ss2, w * pv));
            }
        }
        acc = next;
    }
    FiniteDist::new(
        acc.into_iter()
            .map(|(ks, ss, w)| ((Token::join(&ks), Token::join(&ss)), w))
            .collect(),
    )
}

/// Parallel repetition with an OR verifier: `(α^t, 1 − (1−β*)^t)`.
///
/// The verifier is the exact noisy-OR `1 − Π(1 − vᵢ)`; boolean verifiers
/// reduce to "accept if some coordinate verifies" verbatim.
pub fn or_repeat(p: &Puzzle, t: u32, cap: usize) -> Result<(Puzzle, TransformReport)> {
    if t == 0 {
        return Err(Error::Contract("repetition count must be ≥ 1".into()));
    }
    let input = measured(p);
    let out = if t == 1 {
        p.clone()
    } else {
        Puzzle::new(
            sampler_power(&p.sampler, t, cap)?,
            Verifier::Any(vec![p.verifier.clone(); t as usize]),
            p.ev,
            p.lambda,
        )?
    };
    let output = measured(&out);
    let one = Prob::one();
    let exact_alpha = pow_prob(&input.alpha, t);
    let exact_beta = &one - pow_prob(&(&one - &input.beta), t);
    let claimed = ParamPair {
        alpha: exact_alpha.clone(),
        beta: clamp1(rat(t as i64, 1) * &input.beta),
    };
    let small_beta = rat(t as i64, 1) * &input.beta <= one;
    let certified = output.alpha == exact_alpha
        && output.beta == exact_beta
        && (!small_beta || output.beta <= claimed.beta);
    Ok((
        out,
        TransformReport {
            input,
            output,
            claimed,
            certified,
            notes: vec![format!("or-repeat t={t}")],
        },
    ))
}

/// Parallel repetition with an AND verifier: `(≤ tα, (β*)^t)`.
pub fn and_repeat(p: &Puzzle, t: u32, cap: usize) -> Result<(Puzzle, TransformReport)> {
    if t == 0 {
        return Err(Error::Contract("repetition count must be ≥ 1".into()));
    }
    let input = measured(p);
    let out = if t == 1 {
        p.clone()
    } else {
        Puzzle::new(
            sampler_power(&p.sampler, t, cap)?,
            Verifier::All(vec![p.verifier.clone(); t as usize]),
            p.ev,
            p.lambda,
        )?
    };
    let output = measured(&out);
    let one = Prob::one();
    let exact_alpha = &one - pow_prob(&(&one - &input.alpha), t);
    let exact_beta = pow_prob(&input.beta, t);
    let claimed = ParamPair {
        alpha: clamp1(rat(t as i64, 1) * &input.alpha),
        beta: exact_beta.clone(),
    };
    let certified =
        output.alpha == exact_alpha && output.alpha <= claimed.alpha && output.beta == exact_beta;
    Ok((
        out,
        TransformReport {
            input,
            output,
            claimed,
            certified,
            notes: vec![format!("and-repeat t={t}")],
        },
    ))
}

/// Verification relaxation: auto-accept every puzzle value whose conditional
/// honest-failure probability is at least `t`. Yields `(< t, β* + α/t)` and
/// strips the efficiency flag (the new verifier consults the sampler's
/// conditional statistics).
pub fn ver_relax(p: &Puzzle, t: &Prob, cap: usize) -> Result<(Puzzle, TransformReport)> {
    let _ = cap;
    if t <= &Prob::zero() || t > &Prob::one() {
        return Err(Error::Contract("threshold must satisfy 0 < t ≤ 1".into()));
    }
    let input = measured(p);
    // Conditional failure per puzzle value: 1 − Σ_k Pr[k|s]·Ver(k,s).
    let mut fail_mass: BTreeMap<Token, Prob> = BTreeMap::new();
    let mut total_mass: BTreeMap<Token, Prob> = BTreeMap::new();
    for ((k, s), w) in p.sampler.outcomes() {
        *total_mass.entry(s.clone()).or_insert_with(Prob::zero) += w;
        *fail_mass.entry(s.clone()).or_insert_with(Prob::zero) +=
            w * (Prob::one() - p.verifier.accept(k, s));
    }
    let mut auto = BTreeSet::new();
    for (s, mass) in &total_mass {
        let fail = &fail_mass[s] / mass;
        if &fail >= t {
            auto.insert(s.clone());
        }
    }
    let out = Puzzle {
        sampler: p.sampler.clone(),
        verifier: Verifier::AutoAccept {
            auto,
            inner: Box::new(p.verifier.clone()),
        },
        ev: false,
        lambda: p.lambda,
    };
    let output = measured(&out);
    let claimed = ParamPair {
        alpha: t.clone(),
        beta: clamp1(&input.beta + &input.alpha / t),
    };
    let certified = &output.alpha < t && output.beta <= claimed.beta;
    Ok((
        out,
        TransformReport {
            input,
            output,
            claimed,
            certified,
            notes: vec![format!("ver-relax t={t}")],
        },
    ))
}

/// Guard an efficiently-verifiable puzzle: re-sample through the verifier,
/// routing honest failures to an always-accepted `(⊥,⊥)` outcome. Yields
/// `(≤ 1/4, β* + α)`.
pub fn bot_guard(p: &Puzzle) -> Result<(Puzzle, TransformReport)> {
    if !p.ev {
        return Err(Error::Contract(
            "bot-guard requires an efficiently verifiable puzzle".into(),
        ));
    }
    let input = measured(p);
    let mut rows: Vec<((Token, Token), Prob)> = Vec::new();
    let mut accepted = Prob::zero();
    for ((k, s), w) in p.sampler.outcomes() {
        let v = p.verifier.accept(k, s);
        let mass = w * &v;
        if !mass.is_zero() {
            rows.push(((k.clone(), s.clone()), mass.clone()));
        }
        accepted += mass;
    }
    let rest = Prob::one() - accepted;
    if !rest.is_zero() {
        rows.push(((Token::bot(), Token::bot()), rest));
    }
    let sampler = FiniteDist::new(rows)?;
    let mut auto = BTreeSet::new();
    auto.insert(Token::bot());
    let out = Puzzle {
        sampler,
        verifier: Verifier::AutoAccept {
            auto,
            inner: Box::new(p.verifier.clone()),
        },
        ev: true,
        lambda: p.lambda,
    };
    let output = measured(&out);
    let claimed = ParamPair {
        alpha: rat(1, 4),
        beta: clamp1(&input.beta + &input.alpha),
    };
    let certified = output.alpha <= claimed.alpha && output.beta <= claimed.beta;
    Ok((
        out,
        TransformReport {
            input,
            output,
            claimed,
            certified,
            notes: vec!["bot-guard".into()],
        },
    ))
}

/// Which correctness-guaranteeing route to take.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GuaranteeMode {
    /// Relax at threshold 1/2, then OR-repeat λ times: `(2^{−λ}, λ(α/2+β))`.
    General,
    /// Guard through the verifier, then OR-repeat λ times: `(4^{−λ}, λ(α+β))`.
    Ev,
}

/// Make correctness unconditional while preserving claimed security.
pub fn correctness_guarantee(
    p: &Puzzle,
    mode: GuaranteeMode,
    lambda: u32,
    cap: usize,
) -> Result<(Puzzle, TransformReport)> {
    if lambda == 0 {
        return Err(Error::Contract("lambda must be ≥ 1".into()));
    }
    let input = measured(p);
    let lam = rat(lambda as i64, 1);
    let (stage, claimed) = match mode {
        GuaranteeMode::General => {
            let (q, _) = ver_relax(p, &rat(1, 2), cap)?;
            let claimed = ParamPair {
                alpha: rat(1, 2).pow(lambda as i32),
                beta: clamp1(&lam * (&input.alpha / rat(2, 1) + &input.beta)),
            };
            (q, claimed)
        }
        GuaranteeMode::Ev => {
            let (q, _) = bot_guard(p)?;
            let claimed = ParamPair {
                alpha: rat(1, 4).pow(lambda as i32),
                beta: clamp1(&lam * (&input.alpha + &input.beta)),
            };
            (q, claimed)
        }
    };
    let stage_params = measured(&stage);
    let (out, _) = or_repeat(&stage, lambda, cap)?;
    let output = measured(&out);
    // The provable composite chain: the per-stage alpha bound raised to λ,
    // and λ times the relaxed/guarded break (1−(1−x)^λ ≤ λx always).
    let chain_beta = clamp1(&lam * &stage_params.beta);
    let certified = output.alpha <= claimed.alpha && output.beta <= chain_beta;
    Ok((
        out,
        TransformReport {
            input,
            output,
            claimed,
            certified,
            notes: vec![format!(
                "correctness-guarantee mode={mode:?} lambda={lambda}; provable break chain bound {chain_beta}"
            )],
        },
    ))
}

/// A combiner candidate: a puzzle plus (optionally) the correctness and
/// security parameters it is *declared* to have. Declared parameters feed
/// the claimed combined bound; when absent the measured parameters are used.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub puzzle: Puzzle,
    pub declared: Option<ParamPair>,
}

impl Candidate {
    pub fn bare(puzzle: Puzzle) -> Candidate {
        Candidate {
            puzzle,
            declared: None,
        }
    }
}

/// Combine ≥ 2 candidates: run each through the correctness guarantee, take
/// the product sampler and the AND of the guaranteed verifiers.
///
/// Measured combined break equals the product of the guaranteed candidates'
/// measured breaks exactly. The claimed combined break is the product of the
/// per-candidate guaranteed *claimed* bounds `min(1, λ(αᵢ/2 + βᵢ))`,
/// computed from declared parameters where given — this is the conditional
/// "secure if one candidate is" bookkeeping.
pub fn combine(candidates: &[Candidate], lambda: u32, cap: usize) -> Result<(Puzzle, TransformReport)> {
    if candidates.len() < 2 {
        return Err(Error::Contract("combine needs at least 2 candidates".into()));
    }
    combine_family(candidates, lambda, cap, "combine")
}

fn combine_family(
    candidates: &[Candidate],
    lambda: u32,
    cap: usize,
    label: &str,
) -> Result<(Puzzle, TransformReport)> {
    if candidates.is_empty() {
        return Err(Error::Contract("empty candidate family".into()));
    }
    if lambda == 0 {
        return Err(Error::Contract("lambda must be ≥ 1".into()));
    }
    let lam = rat(lambda as i64, 1);
    let all_ev = candidates.iter().all(|c| c.puzzle.ev);
    let mode = if all_ev {
        GuaranteeMode::Ev
    } else {
        GuaranteeMode::General
    };
    let mut guaranteed = Vec::with_capacity(candidates.len());
    let mut alpha_sum = Prob::zero();
    let mut measured_beta_product = Prob::one();
    let mut claimed_beta_product = Prob::one();
    let mut certified = true;
    for c in candidates {
        let (g, rep) = correctness_guarantee(&c.puzzle, mode, lambda, cap)?;
        certified &= rep.certified;
        alpha_sum += &rep.output.alpha;
        measured_beta_product *= &rep.output.beta;
        let declared = c.declared.clone().unwrap_or_else(|| rep.input.clone());
        let per_claim = match mode {
            GuaranteeMode::General => {
                clamp1(&lam * (&declared.alpha / rat(2, 1) + &declared.beta))
            }
            GuaranteeMode::Ev => clamp1(&lam * (&declared.alpha + &declared.beta)),
        };
        claimed_beta_product *= per_claim;
        guaranteed.push(g);
    }
    let sampler = sampler_product(
        &guaranteed.iter().map(|g| g.sampler.clone()).collect::<Vec<_>>(),
        cap,
    )?;
    let verifier = Verifier::All(guaranteed.iter().map(|g| g.verifier.clone()).collect());
    let out = Puzzle::new(sampler, verifier, all_ev, lambda)?;
    let output = measured(&out);
    let input = ParamPair {
        alpha: clamp1(alpha_sum.clone()),
        beta: clamp1(measured_beta_product.clone()),
    };
    let claimed = ParamPair {
        alpha: clamp1(alpha_sum.clone()),
        beta: clamp1(claimed_beta_product),
    };
    certified &= output.beta == measured_beta_product && output.alpha <= alpha_sum;
    Ok((
        out,
        TransformReport {
            input,
            output,
            claimed,
            certified,
            notes: vec![format!(
                "{label}: {} candidates, mode {:?}, measured break = product of guaranteed breaks",
                candidates.len(),
                mode
            )],
        },
    ))
}

/// One-time-pad the key: new uniform key `k'`, new puzzle `(k ⊕ k', s)`,
/// verifier `Ver'(k', (a,b)) = Ver(a ⊕ k', b)`. Preserves correctness error
/// and optimal break exactly and makes the padded component's marginal
/// exactly uniform.
pub fn random_input(p: &Puzzle, cap: usize) -> Result<(Puzzle, TransformReport)> {
    let mut key_len = None;
    for ((k, _), _) in p.sampler.outcomes() {
        if k.part_count() != 1 || k.is_bot() {
            return Err(Error::Contract(
                "random-input requires flat fixed-length bitstring keys".into(),
            ));
        }
        match key_len {
            None => key_len = Some(k.bit_len()),
            Some(l) if l != k.bit_len() => {
                return Err(Error::Contract("variable-length keys".into()))
            }
            _ => {}
        }
    }
    let n = key_len.ok_or_else(|| Error::Contract("empty sampler".into()))?;
    let pads = all_bitstrings(n);
    let needed = p
        .sampler
        .support_len()
        .checked_mul(pads.len())
        .ok_or(Error::Resource { needed: usize::MAX, cap })?;
    if needed > cap {
        return Err(Error::Resource { needed, cap });
    }
    let input = measured(p);
    let table = flatten_verifier(p, cap)?;
    let pad_weight = Prob::new(1.into(), num::BigInt::from(pads.len()));

    let mut rows = Vec::with_capacity(needed);
    for ((k, s), w) in p.sampler.outcomes() {
        for pad in &pads {
            let a = k.xor(pad)?;
            rows.push(((pad.clone(), Token::join(&[a, s.clone()])), w * &pad_weight));
        }
    }
    let sampler = FiniteDist::new(rows)?;

    let mut entries = BTreeMap::new();
    for ((k, s), v) in &table.entries {
        for pad in &pads {
            let a = k.xor(pad)?;
            entries.insert((pad.clone(), Token::join(&[a, s.clone()])), v.clone());
        }
    }
    let mut accept_all = BTreeSet::new();
    for s in &table.accept_all {
        for a in &pads {
            accept_all.insert(Token::join(&[a.clone(), s.clone()]));
        }
    }
    let verifier = Verifier::Table(VerifierTable {
        entries,
        accept_all,
        keys: pads.iter().cloned().collect(),
    });
    let out = Puzzle::new(sampler, verifier, p.ev, p.lambda)?;
    let output = measured(&out);
    // The padded (first) puzzle component must be exactly uniform.
    let first_marginal = out
        .puzzle_marginal()
        .map(|s| Token::parse(s.parts()[0]).unwrap());
    let uniform = FiniteDist::uniform(pads.clone())?;
    let pad_uniform = first_marginal == uniform;
    let certified = output == input && pad_uniform;
    Ok((
        out,
        TransformReport {
            claimed: input.clone(),
            input,
            output,
            certified,
            notes: vec![format!("random-input pad length {n}; padded marginal uniform: {pad_uniform}")],
        },
    ))
}

/// A registry entry for the universal construction: a named candidate
/// generator with a declared step cost.
pub struct CandidateGen {
    pub name: String,
    pub steps: u64,
    pub build: Box<dyn Fn(u32) -> Result<Puzzle>>,
}

/// The trivial always-accept puzzle substituted for over-budget entries.
pub fn trivial_puzzle(lambda: u32) -> Puzzle {
    let zero = Token::bits("0").unwrap();
    let sampler = FiniteDist::point((zero.clone(), zero.clone()));
    let mut accept_all = BTreeSet::new();
    accept_all.insert(zero.clone());
    let verifier = Verifier::Table(VerifierTable {
        entries: BTreeMap::new(),
        accept_all,
        keys: [zero].into_iter().collect(),
    });
    Puzzle::new(sampler, verifier, true, lambda).expect("trivial puzzle is valid")
}

/// Universal combination: instantiate the first λ registry entries (padding
/// with the trivial puzzle), form the λ² candidates pairing sampler `i` with
/// verifier `j`, and combine them all. Entries whose declared step cost
/// exceeds the λ³ budget are replaced by the trivial always-accept puzzle.
pub fn universal_ev(
    registry: &[CandidateGen],
    lambda: u32,
    cap: usize,
) -> Result<(Puzzle, TransformReport)> {
    if registry.is_empty() {
        return Err(Error::Contract("empty registry".into()));
    }
    if lambda == 0 {
        return Err(Error::Contract("lambda must be ≥ 1".into()));
    }
    let budget = (lambda as u64).pow(3);
    let mut instantiated: Vec<(String, Puzzle, bool)> = Vec::new();
    for idx in 0..lambda as usize {
        match registry.get(idx) {
            Some(entry) if entry.steps <= budget => {
                let puzzle = (entry.build)(lambda)?;
                if !puzzle.ev {
                    return Err(Error::Contract(format!(
                        "registry entry {} is not efficiently verifiable",
                        entry.name
                    )));
                }
                instantiated.push((entry.name.clone(), puzzle, true));
            }
            Some(entry) => {
                instantiated.push((
                    format!("{} (budget exceeded)", entry.name),
                    trivial_puzzle(lambda),
                    false,
                ));
            }
            None => instantiated.push(("(padding)".into(), trivial_puzzle(lambda), false)),
        }
    }
    let mut candidates = Vec::new();
    let mut contributors = Vec::new();
    for (i, (ni, pi, ci)) in instantiated.iter().enumerate() {
        for (j, (nj, pj, cj)) in instantiated.iter().enumerate() {
            let puzzle = Puzzle::new(
                pi.sampler.clone(),
                pj.verifier.clone(),
                pi.ev && pj.ev,
                lambda,
            )?;
            candidates.push(Candidate::bare(puzzle));
            if *ci && *cj {
                contributors.push(format!("({i},{j})=({ni},{nj})"));
            }
        }
    }
    let single = candidates.len() == 1;
    let (out, mut report) = if single {
        // λ = 1: a single candidate — the combined puzzle is just its
        // guaranteed form.
        let (g, rep) = correctness_guarantee(
            &candidates[0].puzzle,
            GuaranteeMode::Ev,
            lambda,
            cap,
        )?;
        (g, rep)
    } else {
        combine_family(&candidates, lambda, cap, "universal")?
    };
    report.notes.push(if contributors.is_empty() {
        "no registry entry contributed (all trivial)".into()
    } else {
        format!("contributors: {}", contributors.join(", "))
    });
    Ok((out, report))
}

/// Combine an advice-indexed family: advice values `1..=advice_bound` must
/// all be present; the machinery is identical to [`combine`] in advice order.
pub fn nonuniform_combine(
    family: &BTreeMap<u32, Puzzle>,
    advice_bound: u32,
    lambda: u32,
    cap: usize,
) -> Result<(Puzzle, TransformReport)> {
    if advice_bound == 0 {
        return Err(Error::Contract("advice bound must be ≥ 1".into()));
    }
    let mut candidates = Vec::with_capacity(advice_bound as usize);
    for nu in 1..=advice_bound {
        let p = family
            .get(&nu)
            .ok_or_else(|| Error::Contract(format!("missing advice index {nu}")))?;
        candidates.push(Candidate::bare(p.clone()));
    }
    combine_family(&candidates, lambda, cap, "nonuniform-combine")
}
