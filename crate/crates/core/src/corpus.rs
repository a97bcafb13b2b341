//! Seeded random generators for test corpora.
//!
//! Every generator takes an explicit RNG so corpora are reproducible; the
//! invariant suites and the acceptance gate all draw from here with fixed
//! seeds. Weights are built as integer numerators over a common denominator,
//! so distributions are exact by construction.

use crate::dist::{Channel, FiniteDist, Prob};
use crate::primitives::{Forger, PseudoDetPrg};
use crate::puzzle::{Adversary, Puzzle, Verifier, VerifierTable};
use crate::token::{all_bitstrings, Token};
use num::BigInt;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use std::collections::{BTreeMap, BTreeSet};

/// A reproducible RNG from a fixed seed.
pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Exact random weights: positive integer numerators normalized by their sum.
pub fn random_weights(r: &mut StdRng, count: usize) -> Vec<Prob> {
    let nums: Vec<u64> = (0..count).map(|_| r.gen_range(1..=20)).collect();
    let total: u64 = nums.iter().sum();
    nums.into_iter()
        .map(|n| Prob::new(BigInt::from(n), BigInt::from(total)))
        .collect()
}

/// A random distribution over a subset of the `n`-bit strings.
pub fn random_dist(r: &mut StdRng, n: usize, max_support: usize) -> FiniteDist<Token> {
    let mut universe = all_bitstrings(n);
    universe.shuffle(r);
    let k = r.gen_range(1..=max_support.min(universe.len()));
    let values: Vec<Token> = universe.into_iter().take(k).collect();
    let weights = random_weights(r, values.len());
    FiniteDist::new(values.into_iter().zip(weights).collect()).expect("weights normalize")
}

/// A random acceptance probability from a small palette including 0 and 1.
fn random_accept_prob(r: &mut StdRng) -> Prob {
    let palette: [(i64, i64); 6] = [(0, 1), (1, 4), (1, 2), (3, 4), (1, 1), (1, 1)];
    let (num, den) = palette[r.gen_range(0..palette.len())];
    Prob::new(BigInt::from(num), BigInt::from(den))
}

/// A random puzzle with at most `max_keys` distinct keys, `max_puzzles`
/// distinct puzzle values, and `max_pairs` sampled pairs.
pub fn random_puzzle(
    r: &mut StdRng,
    key_bits: usize,
    puz_bits: usize,
    max_keys: usize,
    max_puzzles: usize,
    max_pairs: usize,
    lambda: u32,
) -> Puzzle {
    let mut keys = all_bitstrings(key_bits);
    keys.shuffle(r);
    keys.truncate(r.gen_range(1..=max_keys.min(keys.len())));
    let mut puzzles = all_bitstrings(puz_bits);
    puzzles.shuffle(r);
    puzzles.truncate(r.gen_range(1..=max_puzzles.min(puzzles.len())));

    let mut pairs: Vec<(Token, Token)> = Vec::new();
    let mut seen = BTreeSet::new();
    let want = r.gen_range(1..=max_pairs);
    for _ in 0..want * 3 {
        if pairs.len() >= want {
            break;
        }
        let k = keys[r.gen_range(0..keys.len())].clone();
        let s = puzzles[r.gen_range(0..puzzles.len())].clone();
        if seen.insert((k.clone(), s.clone())) {
            pairs.push((k, s));
        }
    }
    let weights = random_weights(r, pairs.len());
    let sampler = FiniteDist::new(pairs.iter().cloned().zip(weights).collect())
        .expect("weights normalize");

    // Verifier: biased toward accepting sampled pairs, with extra noise rows.
    let mut entries = BTreeMap::new();
    for (k, s) in &pairs {
        if r.gen_bool(0.8) {
            let v = random_accept_prob(r);
            if !num::Zero::is_zero(&v) {
                entries.insert((k.clone(), s.clone()), v);
            }
        }
    }
    for _ in 0..r.gen_range(0..=max_pairs) {
        let k = keys[r.gen_range(0..keys.len())].clone();
        let s = puzzles[r.gen_range(0..puzzles.len())].clone();
        let v = random_accept_prob(r);
        if !num::Zero::is_zero(&v) {
            entries.entry((k, s)).or_insert(v);
        }
    }
    let table = VerifierTable::new(entries).expect("palette probabilities valid");
    Puzzle::new(sampler, Verifier::Table(table), true, lambda).expect("generated puzzle valid")
}

/// A random adversary for a puzzle: per puzzle value, a random distribution
/// over the puzzle's key universe.
pub fn random_adversary(r: &mut StdRng, p: &Puzzle) -> Adversary {
    let keys: Vec<Token> = crate::puzzle::key_universe(p).into_iter().collect();
    let mut map = BTreeMap::new();
    for (s, _) in p.puzzle_marginal().outcomes() {
        let mut picks = keys.clone();
        picks.shuffle(r);
        picks.truncate(r.gen_range(1..=picks.len().min(3)));
        let weights = random_weights(r, picks.len());
        map.insert(
            s.clone(),
            FiniteDist::new(picks.into_iter().zip(weights).collect()).expect("normalized"),
        );
    }
    Adversary {
        channel: Channel::new(map),
    }
}

/// A random channel from the `n`-bit strings to the `m`-bit strings.
pub fn random_channel(r: &mut StdRng, n: usize, m: usize) -> Channel<Token, Token> {
    let outputs = all_bitstrings(m);
    let mut map = BTreeMap::new();
    for x in all_bitstrings(n) {
        let mut picks = outputs.clone();
        picks.shuffle(r);
        picks.truncate(r.gen_range(1..=picks.len().min(4)));
        let weights = random_weights(r, picks.len());
        map.insert(
            x,
            FiniteDist::new(picks.into_iter().zip(weights).collect()).expect("normalized"),
        );
    }
    Channel::new(map)
}

/// A random pseudodeterministic generator with `n` seed bits and `3n`
/// output bits, mixing deterministic and noisy seeds.
pub fn random_prg(r: &mut StdRng, n: usize) -> PseudoDetPrg {
    let ell = 3 * n;
    let outputs = all_bitstrings(ell);
    let mut map = BTreeMap::new();
    for seed in all_bitstrings(n) {
        if r.gen_bool(0.5) {
            let y = outputs[r.gen_range(0..outputs.len())].clone();
            map.insert(seed, FiniteDist::point(y));
        } else {
            let mut picks = outputs.clone();
            picks.shuffle(r);
            picks.truncate(r.gen_range(1..=4));
            let weights = random_weights(r, picks.len());
            map.insert(
                seed,
                FiniteDist::new(picks.into_iter().zip(weights).collect()).expect("normalized"),
            );
        }
    }
    PseudoDetPrg::new(n, ell, Channel::new(map)).expect("generated generator valid")
}

/// A random forger against the Lamport scheme built from `p`: for every
/// `(s₀, s₁, k₀)` triple the construction can produce, a random distribution
/// over candidate signatures (keys of `p`).
pub fn random_forger(r: &mut StdRng, p: &Puzzle) -> Forger {
    let keys: Vec<Token> = crate::puzzle::key_universe(p).into_iter().collect();
    let mut map = BTreeMap::new();
    for ((k0, s0), _) in p.sampler.outcomes() {
        for ((_, s1), _) in p.sampler.outcomes() {
            let mut picks = keys.clone();
            picks.shuffle(r);
            picks.truncate(r.gen_range(1..=picks.len().min(3)));
            let weights = random_weights(r, picks.len());
            map.entry((s0.clone(), s1.clone(), k0.clone())).or_insert_with(|| {
                FiniteDist::new(picks.iter().cloned().zip(weights.iter().cloned()).collect())
                    .expect("normalized")
            });
        }
    }
    Channel::new(map)
}

/// A random EFID-style pair over `n`-bit strings.
pub fn random_efid_pair(r: &mut StdRng, n: usize) -> crate::efid::EfidPair {
    let d0 = random_dist(r, n, 1 << n);
    let d1 = random_dist(r, n, 1 << n);
    crate::efid::EfidPair::new(d0, d1).expect("same length by construction")
}
