//! The puzzle abstraction and its exact measurements.
//!
//! A puzzle is a joint sampler over (key, puzzle) pairs plus a verifier: a
//! total map from (key, puzzle) pairs to exact acceptance probabilities,
//! defaulting to zero for unlisted pairs. Verifiers are data, not code —
//! that makes "possibly uncomputable" verifiers first-class desk-scale
//! objects; the `ev` flag is metadata recording whether the verifier is
//! declared efficient, and gates which transforms are legal.
//!
//! Security is never asserted absolutely here. The measurements expose the
//! exact quantities (correctness error, the unbounded optimal break, the
//! break of a given adversary, distributional gaps, KL sampling-hardness)
//! that the proof inequalities relate.

use crate::dist::{
    bernoulli_kl, kl_divergence, statistical_distance, apply_channel, Channel, FiniteDist, Kl,
    PinskerGap, Prob, pinsker_gap, rat,
};
use crate::error::{Error, Result};
use crate::token::Token;
use num::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// A verifier: exact acceptance probabilities for (key, puzzle) pairs.
///
/// The structured variants keep product constructions exact without
/// materializing exponentially many table rows: `Any`/`All` combine
/// coordinate verifiers by noisy-OR / product over dot-joined tokens, and
/// `AutoAccept` marks puzzle values on which every key is accepted (used by
/// relaxation and guard transforms).
#[derive(Clone, Debug)]
pub enum Verifier {
    Table(VerifierTable),
    /// Accept iff some coordinate accepts: probability `1 − Π(1 − vᵢ)`.
    Any(Vec<Verifier>),
    /// Accept iff every coordinate accepts: probability `Π vᵢ`.
    All(Vec<Verifier>),
    /// Accept any key on the listed puzzle values, defer otherwise.
    AutoAccept {
        auto: BTreeSet<Token>,
        inner: Box<Verifier>,
    },
}

/// A flat verifier table with an explicit key universe for argmax searches.
#[derive(Clone, Debug, Default)]
pub struct VerifierTable {
    /// Acceptance probability per (key, puzzle) pair; unlisted pairs are 0.
    pub entries: BTreeMap<(Token, Token), Prob>,
    /// Puzzle values accepted with probability 1 for every key.
    pub accept_all: BTreeSet<Token>,
    /// Keys the optimal adversary may choose among (sampled keys plus every
    /// key mentioned by the table).
    pub keys: BTreeSet<Token>,
}

impl VerifierTable {
    pub fn new(entries: BTreeMap<(Token, Token), Prob>) -> Result<Self> {
        for ((k, s), v) in &entries {
            if v.is_negative() || v > &Prob::one() {
                return Err(Error::Validation(format!(
                    "verifier entry ({k},{s}) outside [0,1]"
                )));
            }
        }
        let keys = entries.keys().map(|(k, _)| k.clone()).collect();
        Ok(VerifierTable {
            entries,
            accept_all: BTreeSet::new(),
            keys,
        })
    }
}

impl Verifier {
    /// Number of flat token parts this verifier consumes per coordinate.
    pub fn arity(&self) -> usize {
        match self {
            Verifier::Table(_) => 1,
            Verifier::Any(parts) | Verifier::All(parts) => {
                parts.iter().map(|p| p.arity()).sum()
            }
            Verifier::AutoAccept { inner, .. } => inner.arity(),
        }
    }

    fn child_arities(parts: &[Verifier]) -> Vec<usize> {
        parts.iter().map(|p| p.arity()).collect()
    }

    /// Exact acceptance probability for a (key, puzzle) pair.
    pub fn accept(&self, k: &Token, s: &Token) -> Prob {
        match self {
            Verifier::Table(t) => {
                if t.accept_all.contains(s) {
                    Prob::one()
                } else {
                    t.entries
                        .get(&(k.clone(), s.clone()))
                        .cloned()
                        .unwrap_or_else(Prob::zero)
                }
            }
            Verifier::Any(parts) => {
                let ar = Self::child_arities(parts);
                match (k.split_arities(&ar), s.split_arities(&ar)) {
                    (Ok(ks), Ok(ss)) => {
                        let mut reject = Prob::one();
                        for ((part, kp), sp) in parts.iter().zip(&ks).zip(&ss) {
                            reject *= Prob::one() - part.accept(kp, sp);
                        }
                        Prob::one() - reject
                    }
                    _ => Prob::zero(),
                }
            }
            Verifier::All(parts) => {
                let ar = Self::child_arities(parts);
                match (k.split_arities(&ar), s.split_arities(&ar)) {
                    (Ok(ks), Ok(ss)) => {
                        let mut acc = Prob::one();
                        for ((part, kp), sp) in parts.iter().zip(&ks).zip(&ss) {
                            acc *= part.accept(kp, sp);
                        }
                        acc
                    }
                    _ => Prob::zero(),
                }
            }
            Verifier::AutoAccept { auto, inner } => {
                if auto.contains(s) {
                    Prob::one()
                } else {
                    inner.accept(k, s)
                }
            }
        }
    }

    /// Best acceptance probability over the key universe for a fixed puzzle
    /// value, with the lexicographically smallest achieving key.
    ///
    /// The memo is keyed per verifier node so repeated product structure is
    /// evaluated once per distinct coordinate puzzle value.
    fn best_for(
        &self,
        s: &Token,
        memo: &mut HashMap<(usize, Token), (Prob, Token)>,
    ) -> (Prob, Token) {
        let node = self as *const Verifier as usize;
        if let Some(hit) = memo.get(&(node, s.clone())) {
            return hit.clone();
        }
        let result = match self {
            Verifier::Table(t) => {
                let fallback_key = || {
                    t.keys
                        .iter()
                        .next()
                        .cloned()
                        .unwrap_or_else(Token::bot)
                };
                if t.accept_all.contains(s) {
                    (Prob::one(), fallback_key())
                } else {
                    let mut best = Prob::zero();
                    let mut best_key = fallback_key();
                    // Keys iterate in lexicographic order, so the first
                    // strict improvement fixes the canonical argmax.
                    for k in &t.keys {
                        let v = t
                            .entries
                            .get(&(k.clone(), s.clone()))
                            .cloned()
                            .unwrap_or_else(Prob::zero);
                        if v > best {
                            best = v;
                            best_key = k.clone();
                        }
                    }
                    (best, best_key)
                }
            }
            Verifier::Any(parts) => {
                let ar = Self::child_arities(parts);
                match s.split_arities(&ar) {
                    Err(_) => (Prob::zero(), Token::bot()),
                    Ok(ss) => {
                        let mut reject = Prob::one();
                        let mut keys = Vec::with_capacity(parts.len());
                        for (part, sp) in parts.iter().zip(&ss) {
                            let (v, k) = part.best_for(sp, memo);
                            reject *= Prob::one() - v;
                            keys.push(k);
                        }
                        (Prob::one() - reject, Token::join(&keys))
                    }
                }
            }
            Verifier::All(parts) => {
                let ar = Self::child_arities(parts);
                match s.split_arities(&ar) {
                    Err(_) => (Prob::zero(), Token::bot()),
                    Ok(ss) => {
                        let mut acc = Prob::one();
                        let mut keys = Vec::with_capacity(parts.len());
                        for (part, sp) in parts.iter().zip(&ss) {
                            let (v, k) = part.best_for(sp, memo);
                            acc *= v;
                            keys.push(k);
                        }
                        (acc, Token::join(&keys))
                    }
                }
            }
            Verifier::AutoAccept { auto, inner } => {
                if auto.contains(s) {
                    let key = if s.is_bot() {
                        Token::bot()
                    } else {
                        inner.best_for(s, memo).1
                    };
                    (Prob::one(), key)
                } else {
                    inner.best_for(s, memo)
                }
            }
        };
        memo.insert((node, s.clone()), result.clone());
        result
    }
}

/// A one-way puzzle: joint (key, puzzle) sampler, verifier, efficiency flag,
/// and a security-parameter label.
#[derive(Clone, Debug)]
pub struct Puzzle {
    pub sampler: FiniteDist<(Token, Token)>,
    pub verifier: Verifier,
    pub ev: bool,
    pub lambda: u32,
}

impl Puzzle {
    /// Build a puzzle, folding the sampled keys into the verifier table's
    /// key universe and checking coordinate length uniformity.
    pub fn new(
        sampler: FiniteDist<(Token, Token)>,
        mut verifier: Verifier,
        ev: bool,
        lambda: u32,
    ) -> Result<Puzzle> {
        if lambda == 0 {
            return Err(Error::Validation("lambda must be positive".into()));
        }
        check_uniform_lengths(&sampler)?;
        if let Verifier::Table(ref mut t) = verifier {
            for ((k, _), _) in sampler.outcomes() {
                t.keys.insert(k.clone());
            }
        }
        Ok(Puzzle {
            sampler,
            verifier,
            ev,
            lambda,
        })
    }

    /// Marginal distribution of the puzzle coordinate.
    pub fn puzzle_marginal(&self) -> FiniteDist<Token> {
        self.sampler.map(|(_, s)| s.clone())
    }

    /// Joint distribution reordered as (puzzle, key).
    pub fn joint_sk(&self) -> FiniteDist<(Token, Token)> {
        self.sampler.map(|(k, s)| (s.clone(), k.clone()))
    }
}

fn check_uniform_lengths(sampler: &FiniteDist<(Token, Token)>) -> Result<()> {
    // Within each coordinate, non-⊥ flat parts must agree positionally in
    // length whenever both are plain bitstrings.
    for coord in 0..2 {
        let mut shape: Option<Vec<Option<usize>>> = None;
        for ((k, s), _) in sampler.outcomes() {
            let tok = if coord == 0 { k } else { s };
            let this: Vec<Option<usize>> = tok
                .parts()
                .iter()
                .map(|p| if *p == crate::token::BOT { None } else { Some(p.len()) })
                .collect();
            match &shape {
                None => shape = Some(this),
                Some(prev) => {
                    if prev.len() != this.len()
                        || prev.iter().zip(&this).any(|(a, b)| {
                            matches!((a, b), (Some(x), Some(y)) if x != y)
                        })
                    {
                        return Err(Error::Validation(
                            "sampler coordinate lengths are not uniform".into(),
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Correctness and security parameters of a puzzle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamPair {
    pub alpha: Prob,
    pub beta: Prob,
}

impl ParamPair {
    pub fn new(alpha: Prob, beta: Prob) -> Result<ParamPair> {
        for (name, v) in [("alpha", &alpha), ("beta", &beta)] {
            if v.is_negative() || v > &Prob::one() {
                return Err(Error::Validation(format!("{name} outside [0,1]")));
            }
        }
        Ok(ParamPair { alpha, beta })
    }
}

/// An adversary: a channel from puzzle values to key values.
#[derive(Clone, Debug)]
pub struct Adversary {
    pub channel: Channel<Token, Token>,
}

/// Exact correctness error `1 − Σ Pr[(k,s)]·Ver(k,s)`.
pub fn correctness_error(p: &Puzzle) -> Prob {
    let mut accept = Prob::zero();
    for ((k, s), w) in p.sampler.outcomes() {
        accept += w * p.verifier.accept(k, s);
    }
    Prob::one() - accept
}

/// The unbounded optimal break: `Σ_s Pr[s]·max_k Ver(k,s)`, together with
/// the deterministic argmax adversary (ties to the lexicographically
/// smallest key).
pub fn optimal_break(p: &Puzzle) -> (Prob, Adversary) {
    let marginal = p.puzzle_marginal();
    let mut memo = HashMap::new();
    let mut beta = Prob::zero();
    let mut map = BTreeMap::new();
    for (s, w) in marginal.outcomes() {
        let (best, key) = p.verifier.best_for(s, &mut memo);
        beta += w * best;
        map.insert(s.clone(), FiniteDist::point(key));
    }
    (
        beta,
        Adversary {
            channel: Channel::new(map),
        },
    )
}

/// Exact success probability of a given adversary.
pub fn adversary_break(p: &Puzzle, a: &Adversary) -> Result<Prob> {
    let marginal = p.puzzle_marginal();
    let mut total = Prob::zero();
    for (s, w) in marginal.outcomes() {
        let image = a.channel.image(s)?;
        for (k, pk) in image.outcomes() {
            total += w * pk * p.verifier.accept(k, s);
        }
    }
    Ok(total)
}

/// Joint distribution of `(a(s), s)` with `s` from the puzzle marginal.
fn adversary_joint(p: &Puzzle, a: &Adversary) -> Result<FiniteDist<(Token, Token)>> {
    let marginal = p.puzzle_marginal();
    let mut rows: Vec<((Token, Token), Prob)> = Vec::new();
    for (s, w) in marginal.outcomes() {
        let image = a.channel.image(s)?;
        for (k, pk) in image.outcomes() {
            rows.push(((k.clone(), s.clone()), w * pk));
        }
    }
    FiniteDist::new(rows)
}

/// Exact statistical distance between the honest joint `(k,s)` and the
/// adversary's joint `(a(s), s)`.
pub fn distributional_gap(p: &Puzzle, a: &Adversary) -> Result<Prob> {
    let adv = adversary_joint(p, a)?;
    Ok(statistical_distance(&p.sampler, &adv))
}

/// `KL((s,k) ‖ (s, a(s)))` in bits.
pub fn kl_sampling_hardness(p: &Puzzle, a: &Adversary) -> Result<Kl> {
    let adv = adversary_joint(p, a)?;
    Ok(kl_divergence(&p.sampler, &adv))
}

/// Data-processing witness for the verifier-as-channel step: the divergence
/// of the two acceptance Bernoullis is bounded by the joint divergence.
#[derive(Clone, Debug)]
pub struct DpiWitness {
    pub lhs: Kl,
    pub rhs: Kl,
    pub ok: bool,
}

pub fn verifier_dpi_witness(p: &Puzzle, a: &Adversary) -> Result<DpiWitness> {
    let mut honest_accept = Prob::zero();
    for ((k, s), w) in p.sampler.outcomes() {
        honest_accept += w * p.verifier.accept(k, s);
    }
    let adv_accept = adversary_break(p, a)?;
    let lhs = bernoulli_kl(&honest_accept, &adv_accept);
    let rhs = kl_sampling_hardness(p, a)?;
    let ok = lhs.le_with_tol(&rhs, 1e-9);
    Ok(DpiWitness { lhs, rhs, ok })
}

/// The certified KL lower bound `(2/ln 2)·gap²` fed to the extraction
/// pipeline. The constant is the Pinsker-consistent `2/ln 2`.
pub fn distributional_kl_floor(gap: &Prob) -> Result<f64> {
    if gap.is_negative() || gap > &Prob::one() {
        return Err(Error::Domain("gap must lie in [0,1]".into()));
    }
    let g = crate::dist::prob_f64(gap);
    Ok(2.0 / std::f64::consts::LN_2 * g * g)
}

/// Pinsker's inequality applied to the honest and adversarial joints.
pub fn joint_pinsker(p: &Puzzle, a: &Adversary) -> Result<PinskerGap> {
    let adv = adversary_joint(p, a)?;
    Ok(pinsker_gap(&p.sampler, &adv))
}

/// The error-minimizing deterministic verifier for a sampler, found by
/// exhaustive search over all 0/1 tables on the sampled key × puzzle grid.
///
/// Minimizes correctness error plus optimal break; supported only up to 16
/// grid cells (65536 tables) — larger instances are refused.
pub fn min_error_verifier(
    sampler: &FiniteDist<(Token, Token)>,
    lambda: u32,
) -> Result<(Puzzle, Prob)> {
    let keys: Vec<Token> = sampler
        .outcomes()
        .iter()
        .map(|((k, _), _)| k.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let puzzles: Vec<Token> = sampler
        .outcomes()
        .iter()
        .map(|((_, s), _)| s.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let cells = keys.len() * puzzles.len();
    if cells > 16 {
        return Err(Error::Resource {
            needed: 1usize << cells.min(63),
            cap: 1 << 16,
        });
    }
    let mut best: Option<(Puzzle, Prob)> = None;
    for mask in 0u32..(1u32 << cells) {
        let mut entries = BTreeMap::new();
        for (i, k) in keys.iter().enumerate() {
            for (j, s) in puzzles.iter().enumerate() {
                if (mask >> (i * puzzles.len() + j)) & 1 == 1 {
                    entries.insert((k.clone(), s.clone()), Prob::one());
                }
            }
        }
        let table = VerifierTable::new(entries)?;
        let puzzle = Puzzle::new(sampler.clone(), Verifier::Table(table), false, lambda)?;
        let total = correctness_error(&puzzle) + optimal_break(&puzzle).0;
        match &best {
            Some((_, t)) if *t <= total => {}
            _ => best = Some((puzzle, total)),
        }
    }
    Ok(best.expect("at least the all-zero table was scanned"))
}

/// Flatten a puzzle's verifier into a plain table over the key universe and
/// the puzzle values it can meet, guarded by the support cap.
pub fn flatten_verifier(p: &Puzzle, cap: usize) -> Result<VerifierTable> {
    match &p.verifier {
        Verifier::Table(t) => Ok(t.clone()),
        _ => {
            let keys = key_universe(p);
            let puzzles: BTreeSet<Token> = p
                .puzzle_marginal()
                .outcomes()
                .iter()
                .map(|(s, _)| s.clone())
                .collect();
            let needed = keys.len().saturating_mul(puzzles.len());
            if needed > cap {
                return Err(Error::Resource { needed, cap });
            }
            let mut entries = BTreeMap::new();
            let mut accept_all = BTreeSet::new();
            for s in &puzzles {
                let mut all_one = true;
                let mut row = Vec::new();
                for k in &keys {
                    let v = p.verifier.accept(k, s);
                    if !v.is_one() {
                        all_one = false;
                    }
                    if !v.is_zero() {
                        row.push(((k.clone(), s.clone()), v));
                    }
                }
                if all_one && !keys.is_empty() {
                    accept_all.insert(s.clone());
                } else {
                    entries.extend(row);
                }
            }
            Ok(VerifierTable {
                entries,
                accept_all,
                keys,
            })
        }
    }
}

/// The key universe of a puzzle: sampled keys plus, for flat tables, every
/// key the table mentions; for structured verifiers, the product of the
/// coordinate universes restricted to sampled combinations plus per-part
/// argmax candidates. For break computations only the sampled and mentioned
/// keys matter (all others accept with probability 0 except on auto-accept
/// puzzles, which accept every key anyway).
pub fn key_universe(p: &Puzzle) -> BTreeSet<Token> {
    let mut keys: BTreeSet<Token> = p
        .sampler
        .outcomes()
        .iter()
        .map(|((k, _), _)| k.clone())
        .collect();
    collect_table_keys(&p.verifier, &mut keys);
    keys
}

fn collect_table_keys(v: &Verifier, out: &mut BTreeSet<Token>) {
    match v {
        Verifier::Table(t) => out.extend(t.keys.iter().cloned()),
        Verifier::Any(parts) | Verifier::All(parts) => {
            // Product keys: combinations of part keys. Only used for
            // flattening at micro scale; build the full cartesian product.
            let mut combos: Vec<Vec<Token>> = vec![Vec::new()];
            for part in parts {
                let mut part_keys = BTreeSet::new();
                collect_table_keys(part, &mut part_keys);
                let mut next = Vec::new();
                for combo in &combos {
                    for k in &part_keys {
                        let mut c = combo.clone();
                        c.push(k.clone());
                        next.push(c);
                    }
                }
                combos = next;
            }
            for combo in combos {
                if !combo.is_empty() {
                    out.insert(Token::join(&combo));
                }
            }
        }
        Verifier::AutoAccept { inner, .. } => collect_table_keys(inner, out),
    }
}

/// Convenience: honest acceptance probability (one minus correctness error).
pub fn honest_accept(p: &Puzzle) -> Prob {
    Prob::one() - correctness_error(p)
}

/// Apply a deterministic test channel to a distribution and read off the
/// acceptance probability. Shared helper for verifier-style bookkeeping.
pub fn acceptance_probability(
    d: &FiniteDist<Token>,
    test: &Channel<Token, Token>,
) -> Result<Prob> {
    let pushed = apply_channel(d, test)?;
    Ok(pushed.prob(&Token::bits("1").unwrap()))
}

/// One sixth, the desk-scale break floor used in reports: whenever the
/// correctness error is at most 5/6 the optimal break is at least 1/6.
pub fn break_floor() -> Prob {
    rat(1, 6)
}
