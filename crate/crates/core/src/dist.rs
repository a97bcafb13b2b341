//! Exact finite distributions and the information-theoretic measures built on
//! them.
//!
//! Probabilities are exact arbitrary-precision rationals; entropies and KL
//! divergences are floating values (the summands are generally irrational)
//! with a documented tolerance of `1e-9`. The conventions `0·log 0 = 0` and
//! `0·log(0/0) = 0` are fixed globally, and an infinite KL divergence is a
//! distinguished sentinel value ordered above every finite value, not an
//! error.

use crate::error::{Error, Result};
use crate::token::Token;
use num::bigint::BigInt;
use num::{BigRational, One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// Exact probability type.
pub type Prob = BigRational;

/// Convenience constructor for a rational `n/d`.
pub fn rat(n: i64, d: i64) -> Prob {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Lossy conversion to `f64` (used only for entropy-style outputs).
pub fn prob_f64(p: &Prob) -> f64 {
    p.to_f64().expect("rational convertible to f64")
}

/// `p^t` for a non-negative integer exponent.
pub fn pow_prob(p: &Prob, t: u32) -> Prob {
    let mut acc = Prob::one();
    for _ in 0..t {
        acc *= p;
    }
    acc
}

/// A KL divergence in bits: finite, or the infinite sentinel.
///
/// The sentinel orders above every finite value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kl {
    Finite(f64),
    Infinite,
}

impl Kl {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Kl::Infinite)
    }

    /// Finite value, or `None` for the sentinel.
    pub fn finite(&self) -> Option<f64> {
        match self {
            Kl::Finite(v) => Some(*v),
            Kl::Infinite => None,
        }
    }

    /// `self ≤ other + tol`, with the sentinel above all finite values.
    pub fn le_with_tol(&self, other: &Kl, tol: f64) -> bool {
        match (self, other) {
            (_, Kl::Infinite) => true,
            (Kl::Infinite, Kl::Finite(_)) => false,
            (Kl::Finite(a), Kl::Finite(b)) => *a <= *b + tol,
        }
    }

    pub fn add(&self, other: &Kl) -> Kl {
        match (self, other) {
            (Kl::Finite(a), Kl::Finite(b)) => Kl::Finite(a + b),
            _ => Kl::Infinite,
        }
    }
}

impl PartialOrd for Kl {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        match (self, other) {
            (Kl::Infinite, Kl::Infinite) => Some(Equal),
            (Kl::Infinite, Kl::Finite(_)) => Some(Greater),
            (Kl::Finite(_), Kl::Infinite) => Some(Less),
            (Kl::Finite(a), Kl::Finite(b)) => a.partial_cmp(b),
        }
    }
}

/// An explicit finite probability distribution with exact rational weights.
///
/// Outcomes are stored in canonical (lexicographic for tokens) order, weights
/// are strictly positive and sum to exactly one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteDist<T: Ord + Clone> {
    outcomes: Vec<(T, Prob)>,
}

impl<T: Ord + Clone> FiniteDist<T> {
    /// Build a distribution from weighted values. Duplicate values are
    /// merged, zero weights dropped; weights must be non-negative and sum to
    /// exactly one.
    pub fn new(pairs: Vec<(T, Prob)>) -> Result<Self> {
        let mut map: BTreeMap<T, Prob> = BTreeMap::new();
        for (v, w) in pairs {
            if w.is_negative() {
                return Err(Error::Validation("negative weight".into()));
            }
            *map.entry(v).or_insert_with(Prob::zero) += w;
        }
        let total: Prob = map.values().cloned().sum();
        if !total.is_one() {
            return Err(Error::Validation(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let outcomes = map.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        Ok(FiniteDist { outcomes })
    }

    /// Build from non-negative weights by normalizing. Total must be positive.
    pub fn from_unnormalized(pairs: Vec<(T, Prob)>) -> Result<Self> {
        let total: Prob = pairs.iter().map(|(_, w)| w.clone()).sum();
        if total.is_zero() || total.is_negative() {
            return Err(Error::Validation("total weight must be positive".into()));
        }
        Self::new(pairs.into_iter().map(|(v, w)| (v, w / &total)).collect())
    }

    pub fn point(v: T) -> Self {
        FiniteDist {
            outcomes: vec![(v, Prob::one())],
        }
    }

    /// Uniform distribution over distinct values.
    pub fn uniform(values: Vec<T>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::Validation("uniform over empty set".into()));
        }
        let w = BigRational::new(BigInt::one(), BigInt::from(n));
        let set: BTreeSet<T> = values.iter().cloned().collect();
        if set.len() != n {
            return Err(Error::Validation("uniform values not distinct".into()));
        }
        Self::new(values.into_iter().map(|v| (v, w.clone())).collect())
    }

    pub fn outcomes(&self) -> &[(T, Prob)] {
        &self.outcomes
    }

    pub fn support_len(&self) -> usize {
        self.outcomes.len()
    }

    /// Probability of a value (zero off support).
    pub fn prob(&self, v: &T) -> Prob {
        match self.outcomes.binary_search_by(|(x, _)| x.cmp(v)) {
            Ok(i) => self.outcomes[i].1.clone(),
            Err(_) => Prob::zero(),
        }
    }

    /// Exact pushforward along a function.
    pub fn map<U: Ord + Clone>(&self, f: impl Fn(&T) -> U) -> FiniteDist<U> {
        let mut map: BTreeMap<U, Prob> = BTreeMap::new();
        for (v, w) in &self.outcomes {
            *map.entry(f(v)).or_insert_with(Prob::zero) += w;
        }
        FiniteDist {
            outcomes: map.into_iter().collect(),
        }
    }

    /// Shannon entropy in bits, `−Σ p log₂ p` with `0·log 0 = 0`.
    pub fn entropy(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|(_, w)| {
                let p = prob_f64(w);
                if p == 0.0 {
                    0.0
                } else {
                    -p * p.log2()
                }
            })
            .sum()
    }

    /// Min-entropy in bits, `−log₂ max p`.
    pub fn min_entropy(&self) -> f64 {
        let max = self
            .outcomes
            .iter()
            .map(|(_, w)| w)
            .max()
            .expect("non-empty distribution");
        -prob_f64(max).log2()
    }

    /// Independent product with another distribution, pairing values.
    pub fn product<U: Ord + Clone>(&self, other: &FiniteDist<U>) -> FiniteDist<(T, U)> {
        let mut outcomes = Vec::with_capacity(self.outcomes.len() * other.outcomes.len());
        for (a, wa) in &self.outcomes {
            for (b, wb) in &other.outcomes {
                outcomes.push(((a.clone(), b.clone()), wa * wb));
            }
        }
        outcomes.sort_by(|(x, _), (y, _)| x.cmp(y));
        FiniteDist { outcomes }
    }
}

/// KL divergence `KL(p ‖ q)` in bits.
pub fn kl_divergence<T: Ord + Clone>(p: &FiniteDist<T>, q: &FiniteDist<T>) -> Kl {
    let mut total = 0.0;
    for (v, pw) in p.outcomes() {
        let qw = q.prob(v);
        if qw.is_zero() {
            return Kl::Infinite;
        }
        let pf = prob_f64(pw);
        let ratio = prob_f64(&(pw / &qw));
        total += pf * ratio.log2();
    }
    Kl::Finite(total)
}

/// KL divergence between two Bernoulli distributions with success
/// probabilities `p` and `q`, in bits.
pub fn bernoulli_kl(p: &Prob, q: &Prob) -> Kl {
    kl_divergence(&bernoulli(p), &bernoulli(q))
}

/// Exact statistical (total-variation) distance `½ Σ |p − q|`.
pub fn statistical_distance<T: Ord + Clone>(p: &FiniteDist<T>, q: &FiniteDist<T>) -> Prob {
    let mut values: BTreeSet<&T> = BTreeSet::new();
    values.extend(p.outcomes().iter().map(|(v, _)| v));
    values.extend(q.outcomes().iter().map(|(v, _)| v));
    let mut total = Prob::zero();
    for v in values {
        total += (p.prob(v) - q.prob(v)).abs();
    }
    total / rat(2, 1)
}

/// The deterministic likelihood-ratio test `T*(x) = 1 iff p(x) > q(x)`
/// (ties map to 0). Its advantage equals the statistical distance exactly.
#[derive(Clone, Debug)]
pub struct LikelihoodTest<T: Ord + Clone> {
    accept: BTreeSet<T>,
}

impl<T: Ord + Clone> LikelihoodTest<T> {
    pub fn evaluate(&self, x: &T) -> bool {
        self.accept.contains(x)
    }

    pub fn accept_set(&self) -> &BTreeSet<T> {
        &self.accept
    }

    /// The test as a deterministic channel into `{0,1}` tokens, over an
    /// explicit domain.
    pub fn to_channel(&self, domain: impl IntoIterator<Item = T>) -> Channel<T, Token> {
        let one = Token::bits("1").unwrap();
        let zero = Token::bits("0").unwrap();
        let mut map = BTreeMap::new();
        for x in domain {
            let out = if self.evaluate(&x) { one.clone() } else { zero.clone() };
            map.insert(x, FiniteDist::point(out));
        }
        Channel { map }
    }
}

/// The optimal (unbounded) distinguisher between `p` and `q` together with
/// its exact advantage `Pr_p[T*=1] − Pr_q[T*=1]`.
pub fn optimal_distinguisher<T: Ord + Clone>(
    p: &FiniteDist<T>,
    q: &FiniteDist<T>,
) -> (LikelihoodTest<T>, Prob) {
    let mut accept = BTreeSet::new();
    let mut advantage = Prob::zero();
    let mut values: BTreeSet<&T> = BTreeSet::new();
    values.extend(p.outcomes().iter().map(|(v, _)| v));
    values.extend(q.outcomes().iter().map(|(v, _)| v));
    for v in values {
        let (pw, qw) = (p.prob(v), q.prob(v));
        if pw > qw {
            advantage += &pw - &qw;
            accept.insert(v.clone());
        }
    }
    (LikelihoodTest { accept }, advantage)
}

/// A total map from input values to output distributions.
#[derive(Clone, Debug)]
pub struct Channel<I: Ord + Clone, O: Ord + Clone> {
    map: BTreeMap<I, FiniteDist<O>>,
}

impl<I: Ord + Clone, O: Ord + Clone> Channel<I, O> {
    pub fn new(map: BTreeMap<I, FiniteDist<O>>) -> Self {
        Channel { map }
    }

    /// A deterministic channel over an explicit domain.
    pub fn deterministic(domain: impl IntoIterator<Item = I>, f: impl Fn(&I) -> O) -> Self {
        let map = domain
            .into_iter()
            .map(|x| {
                let y = f(&x);
                (x, FiniteDist::point(y))
            })
            .collect();
        Channel { map }
    }

    pub fn domain(&self) -> impl Iterator<Item = &I> {
        self.map.keys()
    }

    pub fn image(&self, x: &I) -> Result<&FiniteDist<O>> {
        self.map
            .get(x)
            .ok_or_else(|| Error::Domain("input outside channel domain".into()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&I, &FiniteDist<O>)> {
        self.map.iter()
    }
}

/// Exact pushforward of `d` through the channel `f`.
pub fn apply_channel<I: Ord + Clone, O: Ord + Clone>(
    d: &FiniteDist<I>,
    f: &Channel<I, O>,
) -> Result<FiniteDist<O>> {
    let mut acc: BTreeMap<O, Prob> = BTreeMap::new();
    for (x, px) in d.outcomes() {
        let image = f.image(x)?;
        for (y, py) in image.outcomes() {
            *acc.entry(y.clone()).or_insert_with(Prob::zero) += px * py;
        }
    }
    Ok(FiniteDist {
        outcomes: acc.into_iter().filter(|(_, w)| !w.is_zero()).collect(),
    })
}

impl FiniteDist<Token> {
    /// Bernoulli helper over tokens: `1` with probability `p`, else `0`.
    pub fn bernoulli(p: Prob) -> FiniteDist<Token> {
        bernoulli(&p)
    }

    /// Exact `t`-fold independent product over raw-concatenated values.
    pub fn product_iid(&self, t: u32, cap: usize) -> Result<FiniteDist<Token>> {
        let mut needed: usize = 1;
        for _ in 0..t {
            needed = needed
                .checked_mul(self.support_len())
                .filter(|&n| n <= cap)
                .ok_or(Error::Resource {
                    needed: usize::MAX,
                    cap,
                })?;
        }
        let mut acc: Vec<(Token, Prob)> = vec![(Token::bits("").unwrap(), Prob::one())];
        for _ in 0..t {
            let mut next = Vec::with_capacity(acc.len() * self.support_len());
            for (prefix, w) in &acc {
                for (v, pv) in self.outcomes() {
                    next.push((prefix.concat(v), w * pv));
                }
            }
            acc = next;
        }
        acc.sort_by(|(a, _), (b, _)| a.cmp(b));
        Ok(FiniteDist { outcomes: acc })
    }
}

fn bernoulli(p: &Prob) -> FiniteDist<Token> {
    let one = Token::bits("1").unwrap();
    let zero = Token::bits("0").unwrap();
    let mut outcomes = Vec::new();
    let q = Prob::one() - p;
    if !q.is_zero() {
        outcomes.push((zero, q));
    }
    if !p.is_zero() {
        outcomes.push((one, p.clone()));
    }
    FiniteDist { outcomes }
}

/// Exact `SD(Bern(p)^t, Bern(q)^t)` via the ones-count statistic.
///
/// The likelihood ratio of i.i.d. Bernoulli products depends only on the
/// ones count, so the count is a sufficient statistic and the distance is a
/// sum of `t+1` binomial terms instead of `2^t` product terms.
pub fn product_sd_bernoulli(p: &Prob, q: &Prob, t: u32) -> Result<Prob> {
    for (name, v) in [("p", p), ("q", q)] {
        if v.is_negative() || v > &Prob::one() {
            return Err(Error::Domain(format!("{name} must lie in [0,1]")));
        }
    }
    if t == 0 {
        return Err(Error::Domain("t must be at least 1".into()));
    }
    let one = Prob::one();
    let (pc, qc) = (&one - p, &one - q);
    // Power tables keep the walk linear in t.
    let powers = |base: &Prob| {
        let mut v = Vec::with_capacity(t as usize + 1);
        v.push(Prob::one());
        for j in 1..=t as usize {
            let next = &v[j - 1] * base;
            v.push(next);
        }
        v
    };
    let (p_pow, pc_pow, q_pow, qc_pow) = (powers(p), powers(&pc), powers(q), powers(&qc));
    let mut total = Prob::zero();
    // Walk j = 0..=t maintaining C(t,j) and the two point probabilities.
    let mut binom = BigInt::one();
    for j in 0..=t as usize {
        let term_p = &p_pow[j] * &pc_pow[t as usize - j];
        let term_q = &q_pow[j] * &qc_pow[t as usize - j];
        let coeff = BigRational::from_integer(binom.clone());
        total += coeff * (term_p - term_q).abs();
        if j < t as usize {
            binom = binom * BigInt::from(t as usize - j) / BigInt::from(j + 1);
        }
    }
    Ok(total / rat(2, 1))
}

/// Exact conditional distribution over the second coordinate of a joint,
/// given a first-coordinate value with positive marginal probability.
pub fn marginal_and_conditional<A: Ord + Clone, B: Ord + Clone>(
    joint: &FiniteDist<(A, B)>,
    first: &A,
) -> Result<FiniteDist<B>> {
    let mut mass = Prob::zero();
    let mut rows: Vec<(B, Prob)> = Vec::new();
    for ((a, b), w) in joint.outcomes() {
        if a == first {
            mass += w;
            rows.push((b.clone(), w.clone()));
        }
    }
    if mass.is_zero() {
        return Err(Error::Domain(
            "conditioning on a zero-probability value".into(),
        ));
    }
    FiniteDist::new(rows.into_iter().map(|(b, w)| (b, w / &mass)).collect())
}

/// A contiguous partition of a fixed-length bitstring into blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockStructure {
    lens: Vec<usize>,
}

impl BlockStructure {
    pub fn new(lens: Vec<usize>) -> Result<Self> {
        if lens.is_empty() || lens.iter().any(|&l| l == 0) {
            return Err(Error::Validation(
                "block structure needs non-empty positive blocks".into(),
            ));
        }
        Ok(BlockStructure { lens })
    }

    /// Equal blocks: `m` blocks of `w` bits.
    pub fn equal(m: usize, w: usize) -> Result<Self> {
        Self::new(vec![w; m])
    }

    pub fn lens(&self) -> &[usize] {
        &self.lens
    }

    pub fn block_count(&self) -> usize {
        self.lens.len()
    }

    pub fn total_len(&self) -> usize {
        self.lens.iter().sum()
    }

    /// `(offset, length)` of each block.
    pub fn offsets(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.lens.len());
        let mut off = 0;
        for &l in &self.lens {
            out.push((off, l));
            off += l;
        }
        out
    }
}

/// Exact chain-rule decomposition of `KL(p ‖ q)` over blocks.
///
/// Term `i` is the expected conditional divergence of block `i` given all
/// preceding blocks, under `p`'s prefix distribution; the terms sum to the
/// total divergence. An infinite conditional term yields the sentinel.
pub fn kl_chain_decomposition(
    p: &FiniteDist<Token>,
    q: &FiniteDist<Token>,
    blocks: &BlockStructure,
) -> Result<Vec<Kl>> {
    let total_len = blocks.total_len();
    for (v, _) in p.outcomes().iter().chain(q.outcomes()) {
        if v.bit_len() != total_len || v.part_count() != 1 {
            return Err(Error::Contract(format!(
                "value {v} does not match block structure of total length {total_len}"
            )));
        }
    }
    let mut terms = Vec::with_capacity(blocks.block_count());
    for (off, len) in blocks.offsets() {
        let prefix_of = |t: &Token| Token::bits(&t.as_str()[..off]).unwrap();
        let upto_of = |t: &Token| Token::bits(&t.as_str()[..off + len]).unwrap();
        let block_of = |t: &Token| Token::bits(&t.as_str()[off..off + len]).unwrap();
        let p_prefix = p.map(prefix_of);
        let p_upto = p.map(&upto_of);
        let q_upto = q.map(&upto_of);
        let mut term = Kl::Finite(0.0);
        for (w, pw) in p_prefix.outcomes() {
            // Conditional block distributions given the prefix `w`.
            let cond = |d: &FiniteDist<Token>| -> Option<FiniteDist<Token>> {
                let mut rows: BTreeMap<Token, Prob> = BTreeMap::new();
                for (v, pv) in d.outcomes() {
                    if v.as_str().starts_with(w.as_str()) {
                        *rows.entry(block_of(v)).or_insert_with(Prob::zero) += pv;
                    }
                }
                let mass: Prob = rows.values().cloned().sum();
                if mass.is_zero() {
                    None
                } else {
                    Some(FiniteDist {
                        outcomes: rows.into_iter().map(|(b, x)| (b, x / &mass)).collect(),
                    })
                }
            };
            let pc = cond(&p_upto).expect("prefix has positive p-mass");
            match cond(&q_upto) {
                None => {
                    term = Kl::Infinite;
                    break;
                }
                Some(qc) => match kl_divergence(&pc, &qc) {
                    Kl::Infinite => {
                        term = Kl::Infinite;
                        break;
                    }
                    Kl::Finite(v) => {
                        if let Kl::Finite(acc) = term {
                            term = Kl::Finite(acc + prob_f64(pw) * v);
                        }
                    }
                },
            }
        }
        terms.push(term);
    }
    Ok(terms)
}

/// Statistical distance, KL divergence, and the Pinsker inequality
/// `SD ≤ √((ln 2)/2 · KL)` between them.
#[derive(Clone, Debug)]
pub struct PinskerGap {
    pub sd: Prob,
    pub kl: Kl,
    pub bound_ok: bool,
}

pub fn pinsker_gap<T: Ord + Clone>(p: &FiniteDist<T>, q: &FiniteDist<T>) -> PinskerGap {
    let sd = statistical_distance(p, q);
    let kl = kl_divergence(p, q);
    let bound_ok = match kl {
        Kl::Infinite => true,
        Kl::Finite(k) => prob_f64(&sd) <= (std::f64::consts::LN_2 / 2.0 * k).sqrt() + 1e-9,
    };
    PinskerGap { sd, kl, bound_ok }
}
