//! Reductions between puzzles and one-time signatures, non-interactive
//! commitments, and pseudodeterministic generators.
//!
//! Each reduction is an exact construction on tables; the proof's
//! probability identities (forger success equals reduction-adversary break,
//! the heavy-output counting bound, collision-probability bookkeeping) are
//! computed with exact rationals.

use crate::dist::{marginal_and_conditional, rat, Channel, FiniteDist, Prob};
use crate::error::{Error, Result};
use crate::puzzle::{Adversary, Puzzle, Verifier, VerifierTable};
use crate::token::{all_bitstrings, Token};
use num::{BigInt, One, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// A one-time signature scheme as explicit tables.
#[derive(Clone, Debug)]
pub struct OneTimeSig {
    /// Joint distribution over (verification key, signing key) pairs.
    pub keygen: FiniteDist<(Token, Token)>,
    /// Signing: (signing key, message) → distribution over signatures.
    pub sign: Channel<(Token, Token), Token>,
    /// Verification acceptance probability per (vk, message, signature);
    /// unlisted triples are 0.
    pub verify: BTreeMap<(Token, Token, Token), Prob>,
    pub messages: Vec<Token>,
}

impl OneTimeSig {
    pub fn verify_prob(&self, vk: &Token, m: &Token, sig: &Token) -> Prob {
        self.verify
            .get(&(vk.clone(), m.clone(), sig.clone()))
            .cloned()
            .unwrap_or_else(Prob::zero)
    }

    /// Exact failure probability of honest signing for one message.
    pub fn failure_for_message(&self, m: &Token) -> Result<Prob> {
        let mut accept = Prob::zero();
        for ((vk, sk), w) in self.keygen.outcomes() {
            let sigs = self.sign.image(&(sk.clone(), m.clone()))?;
            for (sig, ps) in sigs.outcomes() {
                accept += w * ps * self.verify_prob(vk, m, sig);
            }
        }
        Ok(Prob::one() - accept)
    }

    /// Scheme correctness error: the worst failure probability over messages.
    pub fn correctness_error(&self) -> Result<Prob> {
        let mut worst = Prob::zero();
        for m in &self.messages {
            let f = self.failure_for_message(m)?;
            if f > worst {
                worst = f;
            }
        }
        Ok(worst)
    }
}

/// A non-interactive commitment as explicit tables.
#[derive(Clone, Debug)]
pub struct NiCommitment {
    pub messages: Vec<Token>,
    /// Committing: message → distribution over (commitment, decommitment).
    pub commit: Channel<Token, (Token, Token)>,
    /// Receiving: (commitment, decommitment) → message, or `None` for ⊥.
    pub receive: BTreeMap<(Token, Token), Option<Token>>,
}

/// A pseudodeterministic generator as an explicit table.
#[derive(Clone, Debug)]
pub struct PseudoDetPrg {
    /// Seed bits.
    pub n: usize,
    /// Output bits; must exceed `n`.
    pub ell: usize,
    /// Generator: seed → distribution over outputs.
    pub gen: Channel<Token, Token>,
}

impl PseudoDetPrg {
    pub fn new(n: usize, ell: usize, gen: Channel<Token, Token>) -> Result<PseudoDetPrg> {
        if ell <= n {
            return Err(Error::Validation(
                "generator must stretch: output bits > seed bits".into(),
            ));
        }
        for seed in all_bitstrings(n) {
            let image = gen.image(&seed)?;
            for (y, _) in image.outcomes() {
                if y.bit_len() != ell {
                    return Err(Error::Validation(
                        "generator outputs must have the declared length".into(),
                    ));
                }
            }
        }
        Ok(PseudoDetPrg { n, ell, gen })
    }
}

/// Puzzle from a signature scheme: key = signing key, puzzle = verification
/// key (the construction's verifier `V(s, m, S(k, m))` types only with this
/// reading), verifier = acceptance averaged over a uniform message.
pub fn puzzle_from_ots(sig: &OneTimeSig, lambda: u32) -> Result<Puzzle> {
    if sig.messages.is_empty() {
        return Err(Error::Contract("empty message space".into()));
    }
    let msg_weight = Prob::new(BigInt::one(), BigInt::from(sig.messages.len()));
    let sampler = sig.keygen.map(|(vk, sk)| (sk.clone(), vk.clone()));
    // Verifier table over every (sk, vk) combination the tables mention.
    let sks: BTreeSet<Token> = sig
        .keygen
        .outcomes()
        .iter()
        .map(|((_, sk), _)| sk.clone())
        .collect();
    let vks: BTreeSet<Token> = sig
        .keygen
        .outcomes()
        .iter()
        .map(|((vk, _), _)| vk.clone())
        .collect();
    let mut entries = BTreeMap::new();
    for sk in &sks {
        for vk in &vks {
            let mut accept = Prob::zero();
            for m in &sig.messages {
                let sigs = sig.sign.image(&(sk.clone(), m.clone()))?;
                for (s, ps) in sigs.outcomes() {
                    accept += &msg_weight * ps * sig.verify_prob(vk, m, s);
                }
            }
            if !accept.is_zero() {
                entries.insert((sk.clone(), vk.clone()), accept);
            }
        }
    }
    let table = VerifierTable::new(entries)?;
    Puzzle::new(sampler, Verifier::Table(table), true, lambda)
}

/// A Lamport-style scheme from a puzzle: two independent sampler copies,
/// `vk = (s₀,s₁)`, `sk = (k₀,k₁)`, signing message `b` reveals `k_b`,
/// verifying checks the puzzle verifier against `s_b`.
pub fn lamport_from_puzzle(p: &Puzzle) -> Result<OneTimeSig> {
    if !p.ev {
        return Err(Error::Contract(
            "the Lamport construction needs an efficiently verifiable puzzle".into(),
        ));
    }
    let mut keygen_rows = Vec::new();
    for ((k0, s0), w0) in p.sampler.outcomes() {
        for ((k1, s1), w1) in p.sampler.outcomes() {
            keygen_rows.push((
                (
                    Token::join(&[s0.clone(), s1.clone()]),
                    Token::join(&[k0.clone(), k1.clone()]),
                ),
                w0 * w1,
            ));
        }
    }
    let keygen = FiniteDist::new(keygen_rows)?;
    let messages = vec![Token::bits("0").unwrap(), Token::bits("1").unwrap()];
    let key_arity = p
        .sampler
        .outcomes()
        .first()
        .map(|((k, _), _)| k.part_count())
        .unwrap_or(1);
    let puz_arity = p
        .sampler
        .outcomes()
        .first()
        .map(|((_, s), _)| s.part_count())
        .unwrap_or(1);
    let mut sign_map = BTreeMap::new();
    let mut verify = BTreeMap::new();
    let mut vk_values: BTreeSet<Token> = BTreeSet::new();
    let mut sig_values: BTreeSet<Token> = BTreeSet::new();
    for ((vk, sk), _) in keygen.outcomes() {
        vk_values.insert(vk.clone());
        let parts = sk.split_arities(&[key_arity, key_arity])?;
        for (b, m) in messages.iter().enumerate() {
            sign_map.insert(
                (sk.clone(), m.clone()),
                FiniteDist::point(parts[b].clone()),
            );
            sig_values.insert(parts[b].clone());
        }
    }
    for vk in &vk_values {
        let svals = vk.split_arities(&[puz_arity, puz_arity])?;
        for (b, m) in messages.iter().enumerate() {
            for sig in &sig_values {
                let v = p.verifier.accept(sig, &svals[b]);
                if !v.is_zero() {
                    verify.insert((vk.clone(), m.clone(), sig.clone()), v);
                }
            }
        }
    }
    Ok(OneTimeSig {
        keygen,
        sign: Channel::new(sign_map),
        verify,
        messages,
    })
}

/// A forger against the Lamport scheme: given `(s₀, s₁, k₀)` — the
/// verification key and the signature on message 0 — output a forgery
/// attempt for message 1.
pub type Forger = Channel<(Token, Token, Token), Token>;

/// Exact forgery success of a forger against the scheme built from `p`:
/// the probability that the forged signature verifies for message 1.
pub fn forger_success(p: &Puzzle, forger: &Forger) -> Result<Prob> {
    let mut total = Prob::zero();
    for ((k0, s0), w0) in p.sampler.outcomes() {
        for ((_k1, s1), w1) in p.sampler.outcomes() {
            let forged = forger.image(&(s0.clone(), s1.clone(), k0.clone()))?;
            for (sig, ps) in forged.outcomes() {
                total += w0 * w1 * ps * p.verifier.accept(sig, s1);
            }
        }
    }
    Ok(total)
}

/// The proof's reduction: on target puzzle value `s`, draw a fresh sample
/// `(k', s')`, plant `s` in the challenged slot, and forward the forger's
/// output. Its break of `p` equals the forger's success exactly.
pub fn reduction_adversary_ots(forger: &Forger, p: &Puzzle) -> Result<Adversary> {
    let marginal = p.sampler.map(|(_, s)| s.clone());
    let mut map = BTreeMap::new();
    for (s, _) in marginal.outcomes() {
        let mut rows: BTreeMap<Token, Prob> = BTreeMap::new();
        for ((k_fresh, s_fresh), w) in p.sampler.outcomes() {
            let image = forger.image(&(s_fresh.clone(), s.clone(), k_fresh.clone()))?;
            for (sig, ps) in image.outcomes() {
                *rows.entry(sig.clone()).or_insert_with(Prob::zero) += w * ps;
            }
        }
        map.insert(s.clone(), FiniteDist::new(rows.into_iter().collect())?);
    }
    Ok(Adversary {
        channel: Channel::new(map),
    })
}

/// Puzzle from a commitment: uniform message, key = (message, decommitment),
/// puzzle = commitment, verifier checks that receiving recovers the message.
pub fn puzzle_from_commitment(c: &NiCommitment, lambda: u32) -> Result<Puzzle> {
    if c.messages.is_empty() {
        return Err(Error::Contract("empty message space".into()));
    }
    let msg_dist = FiniteDist::uniform(c.messages.clone())?;
    let mut rows = Vec::new();
    for (m, wm) in msg_dist.outcomes() {
        let image = c.commit.image(m)?;
        for ((com, dec), w) in image.outcomes() {
            rows.push((
                (Token::join(&[m.clone(), dec.clone()]), com.clone()),
                wm * w,
            ));
        }
    }
    let sampler = FiniteDist::new(rows)?;
    let mut entries = BTreeMap::new();
    for ((com, dec), recovered) in &c.receive {
        if let Some(m) = recovered {
            entries.insert(
                (Token::join(&[m.clone(), dec.clone()]), com.clone()),
                Prob::one(),
            );
        }
    }
    let table = VerifierTable::new(entries)?;
    Puzzle::new(sampler, Verifier::Table(table), true, lambda)
}

/// Per-seed collision probability `Σ_y Pr[G(k)=y]²` averaged over seeds.
pub fn expected_collision(g: &PseudoDetPrg) -> Result<Prob> {
    let seeds = all_bitstrings(g.n);
    let seed_weight = Prob::new(BigInt::one(), BigInt::from(seeds.len()));
    let mut total = Prob::zero();
    for seed in &seeds {
        let image = g.gen.image(seed)?;
        let mut coll = Prob::zero();
        for (_, py) in image.outcomes() {
            coll += py * py;
        }
        total += &seed_weight * coll;
    }
    Ok(total)
}

/// Puzzle from a generator: λ independent uniform seeds, puzzle is the
/// concatenated generator outputs; the verifier redraws each coordinate and
/// accepts if any fresh output collides with the sampled one.
pub fn puzzle_from_prg(g: &PseudoDetPrg, lambda: u32, cap: usize) -> Result<Puzzle> {
    if g.ell < 3 * g.n {
        return Err(Error::Contract(
            "the construction requires stretch ℓ ≥ 3n".into(),
        ));
    }
    if lambda == 0 {
        return Err(Error::Contract("lambda must be ≥ 1".into()));
    }
    let seeds = all_bitstrings(g.n);
    let seed_weight = Prob::new(BigInt::one(), BigInt::from(seeds.len()));
    // Single-coordinate joint over (seed, output).
    let mut single_rows = Vec::new();
    for seed in &seeds {
        let image = g.gen.image(seed)?;
        for (y, py) in image.outcomes() {
            single_rows.push(((seed.clone(), y.clone()), &seed_weight * py));
        }
    }
    let single = FiniteDist::new(single_rows)?;
    // λ-fold product sampler.
    let mut needed: usize = 1;
    for _ in 0..lambda {
        needed = needed
            .checked_mul(single.support_len())
            .filter(|&n| n <= cap)
            .ok_or(Error::Resource { needed: usize::MAX, cap })?;
    }
    let mut acc: Vec<(Vec<Token>, Vec<Token>, Prob)> =
        vec![(Vec::new(), Vec::new(), Prob::one())];
    for _ in 0..lambda {
        let mut next = Vec::with_capacity(acc.len() * single.support_len());
        for (ks, ys, w) in &acc {
            for ((seed, y), pv) in single.outcomes() {
                let mut ks2 = ks.clone();
                let mut ys2 = ys.clone();
                ks2.push(seed.clone());
                ys2.push(y.clone());
                next.push((ks2, ys2, w * pv));
            }
        }
        acc = next;
    }
    let sampler = FiniteDist::new(
        acc.iter()
            .map(|(ks, ys, w)| ((Token::join(ks), Token::join(ys)), w.clone()))
            .collect(),
    )?;
    // Verifier entries for every (key combo, sampled puzzle combo):
    // acceptance = 1 − Π_i (1 − Pr[G(k_i) = s_i]).
    let puzzles: BTreeSet<Token> = sampler
        .outcomes()
        .iter()
        .map(|((_, s), _)| s.clone())
        .collect();
    let mut key_combos: Vec<Vec<Token>> = vec![Vec::new()];
    for _ in 0..lambda {
        let mut next = Vec::with_capacity(key_combos.len() * seeds.len());
        for combo in &key_combos {
            for seed in &seeds {
                let mut c2 = combo.clone();
                c2.push(seed.clone());
                next.push(c2);
            }
        }
        key_combos = next;
    }
    if key_combos.len().saturating_mul(puzzles.len()) > cap {
        return Err(Error::Resource {
            needed: key_combos.len().saturating_mul(puzzles.len()),
            cap,
        });
    }
    let mut entries = BTreeMap::new();
    for combo in &key_combos {
        for s in &puzzles {
            let sparts = s.split_arities(&vec![1; lambda as usize])?;
            let mut reject = Prob::one();
            for (seed, target) in combo.iter().zip(&sparts) {
                let image = g.gen.image(seed)?;
                reject *= Prob::one() - image.prob(target);
            }
            let accept = Prob::one() - reject;
            if !accept.is_zero() {
                entries.insert((Token::join(combo), s.clone()), accept);
            }
        }
    }
    let table = VerifierTable::new(entries)?;
    Puzzle::new(sampler, Verifier::Table(table), true, lambda)
}

/// Heavy-output counting: the number of outputs some seed hits with
/// probability at least `2^{−n}`, with the `≤ 2^{2n}` bound and the mass
/// identity `Σ_y max_x Pr[G(x)=y] ≤ 2^n`.
#[derive(Clone, Debug)]
pub struct HeavyCount {
    pub count: u64,
    pub ok: bool,
    pub mass: Prob,
    pub mass_ok: bool,
}

pub fn heavy_output_count(g: &PseudoDetPrg) -> Result<HeavyCount> {
    let threshold = Prob::new(BigInt::one(), BigInt::from(1u64 << g.n));
    let mut max_per_output: BTreeMap<Token, Prob> = BTreeMap::new();
    for seed in all_bitstrings(g.n) {
        let image = g.gen.image(&seed)?;
        for (y, py) in image.outcomes() {
            let entry = max_per_output.entry(y.clone()).or_insert_with(Prob::zero);
            if py > entry {
                *entry = py.clone();
            }
        }
    }
    let count = max_per_output
        .values()
        .filter(|p| **p >= threshold)
        .count() as u64;
    let mass: Prob = max_per_output.values().cloned().sum();
    let ok = count <= 1u64 << (2 * g.n);
    let mass_ok = mass <= rat(1i64 << g.n, 1);
    Ok(HeavyCount {
        count,
        ok,
        mass,
        mass_ok,
    })
}

/// The smallest μ such that a (1−μ)-fraction of seeds have a (1−μ)-heavy
/// output, by exact enumeration over the candidate breakpoints.
pub fn pseudodeterminism_error(g: &PseudoDetPrg) -> Result<Prob> {
    let seeds = all_bitstrings(g.n);
    let total = BigInt::from(seeds.len());
    // Heaviest-output probability per seed.
    let mut heavy: Vec<Prob> = Vec::with_capacity(seeds.len());
    for seed in &seeds {
        let image = g.gen.image(seed)?;
        let h = image
            .outcomes()
            .iter()
            .map(|(_, p)| p.clone())
            .max()
            .unwrap_or_else(Prob::zero);
        heavy.push(h);
    }
    // Candidate μ values: 1 − h_k for every seed, and fraction breakpoints.
    let mut candidates: BTreeSet<Prob> = BTreeSet::new();
    for h in &heavy {
        candidates.insert(Prob::one() - h);
    }
    for i in 0..=seeds.len() {
        candidates.insert(Prob::one() - Prob::new(BigInt::from(i), total.clone()));
    }
    let satisfies = |mu: &Prob| -> bool {
        let good = heavy
            .iter()
            .filter(|h| *h >= &(Prob::one() - mu))
            .count();
        Prob::new(BigInt::from(good), total.clone()) >= Prob::one() - mu
    };
    candidates
        .into_iter()
        .find(|mu| satisfies(mu))
        .ok_or_else(|| Error::Domain("no feasible pseudodeterminism level".into()))
}

/// Conditional key distribution of a puzzle given a puzzle value — exposed
/// here because signature/commitment reductions reason about it.
pub fn conditional_key(p: &Puzzle, s: &Token) -> Result<FiniteDist<Token>> {
    marginal_and_conditional(&p.joint_sk(), s)
}
