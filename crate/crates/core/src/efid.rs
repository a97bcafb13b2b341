//! The entropy-flattening and extraction pipeline.
//!
//! This module implements the bookkeeping that turns a KL/entropy deficit
//! into statistical distance from uniform: the equalizer (row offset and
//! truncate), block repetition, pairwise-independent extraction with a
//! Toeplitz-plus-offset family, the entropy-to-statistical-distance bound,
//! statistical-distance amplification by repetition, the parameter
//! calculator, and the conversions between statistically-far distribution
//! pairs and puzzles.
//!
//! All distributions are built exactly and only at micro scale; above the
//! support caps only the parameter calculator runs.

use crate::dist::{
    bernoulli_kl, optimal_distinguisher, product_sd_bernoulli, prob_f64, rat, statistical_distance,
    FiniteDist, Kl, Prob,
};
use crate::error::{Error, Result};
use crate::puzzle::{correctness_error, optimal_break, Puzzle, Verifier, VerifierTable};
use crate::token::{all_bitstrings, Token};
use num::{BigInt, One, Signed, Zero};
use std::collections::BTreeMap;

/// Two same-length distributions over bitstrings.
#[derive(Clone, Debug)]
pub struct EfidPair {
    pub d0: FiniteDist<Token>,
    pub d1: FiniteDist<Token>,
    pub n: usize,
}

impl EfidPair {
    pub fn new(d0: FiniteDist<Token>, d1: FiniteDist<Token>) -> Result<EfidPair> {
        let mut n = None;
        for (v, _) in d0.outcomes().iter().chain(d1.outcomes()) {
            if v.part_count() != 1 || v.is_bot() {
                return Err(Error::Validation("pair values must be flat bitstrings".into()));
            }
            match n {
                None => n = Some(v.bit_len()),
                Some(l) if l != v.bit_len() => {
                    return Err(Error::Validation("pair values must share one length".into()))
                }
                _ => {}
            }
        }
        let n = n.ok_or_else(|| Error::Validation("empty pair".into()))?;
        Ok(EfidPair { d0, d1, n })
    }

    pub fn statistical_distance(&self) -> Prob {
        statistical_distance(&self.d0, &self.d1)
    }
}

/// Full parameter schedule of the pipeline.
#[derive(Clone, Debug)]
pub struct PipelineParams {
    /// Correctness error ω.
    pub omega: f64,
    /// Security error γ.
    pub gamma: f64,
    /// KL floor δ.
    pub delta: f64,
    /// Pseudoentropy gap Δ.
    pub gap: f64,
    /// Advice / entropy target ν*.
    pub nu_star: f64,
    /// Block count m.
    pub m: usize,
    /// Equalizer copies ℓ.
    pub ell: usize,
    /// Slack κ.
    pub kappa: u64,
    /// Repetition count a.
    pub a: u64,
    /// Extracted bits per column.
    pub rbits: usize,
    /// Repetitions of the whole pair.
    pub q: u64,
    /// Output length.
    pub d_nu: f64,
}

/// The KL deficit `δ = (1−ω)log₂((1−ω)/γ) + ω log₂(ω/(1−γ))`, which equals
/// the divergence of `Bern(1−ω)` from `Bern(γ)`.
pub fn delta_bound(omega: &Prob, gamma: &Prob) -> Result<f64> {
    if omega.is_negative() || omega >= &Prob::one() {
        return Err(Error::Domain("omega must lie in [0,1)".into()));
    }
    if gamma <= &Prob::zero() || gamma >= &Prob::one() {
        return Err(Error::Domain("gamma must lie in (0,1)".into()));
    }
    let (w, g) = (prob_f64(omega), prob_f64(gamma));
    let term = |p: f64, q: f64| if p == 0.0 { 0.0 } else { p * (p / q).log2() };
    Ok(term(1.0 - w, g) + term(w, 1.0 - g))
}

/// The same deficit via the Bernoulli-KL implementation (cross-check path).
pub fn delta_bound_via_kl(omega: &Prob, gamma: &Prob) -> Result<f64> {
    if gamma <= &Prob::zero() || gamma >= &Prob::one() {
        return Err(Error::Domain("gamma must lie in (0,1)".into()));
    }
    match bernoulli_kl(&(Prob::one() - omega), gamma) {
        Kl::Finite(v) => Ok(v),
        Kl::Infinite => Err(Error::Domain("divergence not finite".into())),
    }
}

/// The deficit floor for weak puzzles: `δ = delta_bound(0, 1 − λ^{−c})` is
/// at least `λ^{−(c+1)}`.
#[derive(Clone, Debug)]
pub struct DeltaFloor {
    pub delta: f64,
    pub floor: Prob,
    pub ok: bool,
}

pub fn weak_puzzle_delta_floor(lambda: u32, c: u32) -> Result<DeltaFloor> {
    if lambda < 2 {
        return Err(Error::Contract("lambda must be ≥ 2".into()));
    }
    if c == 0 {
        return Err(Error::Contract("c must be ≥ 1".into()));
    }
    let lam_pow_c = num::pow::pow(BigInt::from(lambda), c as usize);
    let gamma = Prob::one() - Prob::new(BigInt::one(), lam_pow_c);
    let delta = delta_bound(&Prob::zero(), &gamma)?;
    let floor = Prob::new(
        BigInt::one(),
        num::pow::pow(BigInt::from(lambda), (c + 1) as usize),
    );
    let ok = delta >= prob_f64(&floor) - 1e-12;
    Ok(DeltaFloor { delta, floor, ok })
}

/// The equalizer on explicit samples: given an offset `i ∈ [1,m]` and `ℓ`
/// samples of `m` blocks each, output
/// `x¹_i..x¹_m, x², …, x^{ℓ−1}, x^ℓ_1..x^ℓ_{i−1}` — always `(ℓ−1)·m` blocks.
pub fn equalizer(i: usize, samples: &[Vec<Token>]) -> Result<Vec<Token>> {
    let ell = samples.len();
    if ell < 2 {
        return Err(Error::Contract("equalizer needs ℓ ≥ 2 samples".into()));
    }
    let m = samples[0].len();
    if samples.iter().any(|s| s.len() != m) {
        return Err(Error::Contract("all samples need exactly m blocks".into()));
    }
    if i < 1 || i > m {
        return Err(Error::Contract(format!("offset {i} outside [1,{m}]")));
    }
    let mut out = Vec::with_capacity((ell - 1) * m);
    out.extend(samples[0][i - 1..].iter().cloned());
    for sample in &samples[1..ell - 1] {
        out.extend(sample.iter().cloned());
    }
    out.extend(samples[ell - 1][..i - 1].iter().cloned());
    Ok(out)
}

/// Exact distribution of the equalizer with a uniform offset and `ℓ` i.i.d.
/// copies of `x`, whose values are `m` equal blocks. Its entropy is at most
/// `ℓ·H(x) + log₂ m`.
pub fn equalizer_dist(
    x: &FiniteDist<Token>,
    m: usize,
    ell: usize,
    cap: usize,
) -> Result<FiniteDist<Token>> {
    if ell < 2 {
        return Err(Error::Contract("equalizer needs ℓ ≥ 2".into()));
    }
    let total_len = x
        .outcomes()
        .first()
        .map(|(v, _)| v.bit_len())
        .ok_or_else(|| Error::Validation("empty distribution".into()))?;
    if m == 0 || total_len % m != 0 {
        return Err(Error::Contract(format!(
            "block count {m} does not divide value length {total_len}"
        )));
    }
    let w = total_len / m;
    let mut needed: usize = m;
    for _ in 0..ell {
        needed = needed
            .checked_mul(x.support_len())
            .filter(|&n| n <= cap)
            .ok_or(Error::Resource { needed: usize::MAX, cap })?;
    }
    let blocks_of = |t: &Token| -> Vec<Token> {
        (0..m)
            .map(|j| Token::bits(&t.as_str()[j * w..(j + 1) * w]).unwrap())
            .collect()
    };
    // Enumerate the ℓ-fold product, then average over the offset.
    let mut tuples: Vec<(Vec<Vec<Token>>, Prob)> = vec![(Vec::new(), Prob::one())];
    for _ in 0..ell {
        let mut next = Vec::with_capacity(tuples.len() * x.support_len());
        for (tup, wgt) in &tuples {
            for (v, pv) in x.outcomes() {
                let mut t2 = tup.clone();
                t2.push(blocks_of(v));
                next.push((t2, wgt * pv));
            }
        }
        tuples = next;
    }
    let offset_weight = Prob::new(BigInt::one(), BigInt::from(m));
    let mut rows: BTreeMap<Token, Prob> = BTreeMap::new();
    for (tup, wgt) in &tuples {
        for i in 1..=m {
            let blocks = equalizer(i, tup)?;
            let joined = blocks
                .iter()
                .fold(Token::bits("").unwrap(), |acc, b| acc.concat(b));
            *rows.entry(joined).or_insert_with(Prob::zero) += wgt * &offset_weight;
        }
    }
    FiniteDist::new(rows.into_iter().collect())
}

/// Seed of the pairwise-independent hash family: a Toeplitz matrix over
/// GF(2) from `a` input bits to `rbits` output bits, plus an additive
/// offset. The matrix diagonals take `a + rbits − 1` seed bits and the
/// offset `rbits` more; the offset is what makes the family exactly
/// pairwise independent (a purely linear family fixes the image of the
/// all-zero input).
#[derive(Clone, Debug)]
pub struct ToeplitzSeed {
    pub a: usize,
    pub rbits: usize,
    /// `a + rbits − 1` diagonal bits followed by `rbits` offset bits;
    /// empty when `rbits = 0`.
    pub bits: Vec<bool>,
}

impl ToeplitzSeed {
    pub fn seed_len(a: usize, rbits: usize) -> usize {
        if rbits == 0 {
            0
        } else {
            a + 2 * rbits - 1
        }
    }

    pub fn new(a: usize, rbits: usize, bits: Vec<bool>) -> Result<ToeplitzSeed> {
        if rbits > a {
            return Err(Error::Contract("rbits must not exceed a".into()));
        }
        if bits.len() != Self::seed_len(a, rbits) {
            return Err(Error::Validation(format!(
                "seed needs {} bits, got {}",
                Self::seed_len(a, rbits),
                bits.len()
            )));
        }
        Ok(ToeplitzSeed { a, rbits, bits })
    }

    fn diag(&self) -> &[bool] {
        if self.rbits == 0 {
            &[]
        } else {
            &self.bits[..self.a + self.rbits - 1]
        }
    }

    fn offset(&self) -> &[bool] {
        if self.rbits == 0 {
            &[]
        } else {
            &self.bits[self.a + self.rbits - 1..]
        }
    }

    /// The linear (matrix) part: output bit `i` is `Σ_j d[i+j]·x_j` mod 2.
    pub fn apply_linear(&self, x: &[bool]) -> Result<Vec<bool>> {
        if x.len() != self.a {
            return Err(Error::Contract(format!(
                "input has {} bits, matrix expects {}",
                x.len(),
                self.a
            )));
        }
        if self.rbits == 0 {
            return Ok(Vec::new());
        }
        let d = self.diag();
        Ok((0..self.rbits)
            .map(|i| x.iter().enumerate().fold(false, |acc, (j, &xj)| acc ^ (xj && d[i + j])))
            .collect())
    }

    /// The full hash: matrix action plus offset.
    pub fn hash(&self, x: &[bool]) -> Result<Vec<bool>> {
        let mut y = self.apply_linear(x)?;
        for (bit, off) in y.iter_mut().zip(self.offset()) {
            *bit ^= off;
        }
        Ok(y)
    }

    pub fn seed_token(&self) -> Token {
        Token::from_bools(&self.bits)
    }
}

/// Extract from each block with one shared seed: output is the seed followed
/// by the hash of every block.
pub fn toeplitz_extract(blocks: &[Token], seed: &ToeplitzSeed) -> Result<Token> {
    let mut out = seed.seed_token();
    for b in blocks {
        let h = seed.hash(&b.to_bools())?;
        out = out.concat(&Token::from_bools(&h));
    }
    Ok(out)
}

/// All seeds of the family, in lexicographic order of their bit patterns.
pub fn all_seeds(a: usize, rbits: usize) -> Result<Vec<ToeplitzSeed>> {
    let len = ToeplitzSeed::seed_len(a, rbits);
    all_bitstrings(len)
        .into_iter()
        .map(|t| ToeplitzSeed::new(a, rbits, t.to_bools()))
        .collect()
}

/// Exact output distribution of the full pipeline on `x` (an `m`-block
/// distribution): equalize with `ℓ` copies, take `a` independent copies,
/// stack the copies into per-position columns, and extract `rbits` from
/// every column with one uniform seed. Returns the distribution and its
/// output length `d_ν = seedlen + (ℓ−1)·m·rbits`.
pub fn build_efid_candidate(
    x: &FiniteDist<Token>,
    params: &PipelineParams,
    cap: usize,
) -> Result<(FiniteDist<Token>, usize)> {
    let (m, ell, a, rbits) = (params.m, params.ell, params.a as usize, params.rbits);
    let eq = equalizer_dist(x, m, ell, cap)?;
    let ncols = (ell - 1) * m;
    let w = eq
        .outcomes()
        .first()
        .map(|(v, _)| v.bit_len() / ncols)
        .unwrap_or(0);
    let col_len = a * w;
    if rbits > col_len {
        return Err(Error::Contract(format!(
            "rbits {rbits} exceeds column length {col_len}"
        )));
    }
    let seeds = all_seeds(col_len, rbits)?;
    let mut needed: usize = seeds.len().max(1);
    for _ in 0..a {
        needed = needed
            .checked_mul(eq.support_len())
            .filter(|&n| n <= cap)
            .ok_or(Error::Resource { needed: usize::MAX, cap })?;
    }
    // a-fold product of the equalized distribution.
    let mut copies: Vec<(Vec<Token>, Prob)> = vec![(Vec::new(), Prob::one())];
    for _ in 0..a {
        let mut next = Vec::with_capacity(copies.len() * eq.support_len());
        for (tup, wgt) in &copies {
            for (v, pv) in eq.outcomes() {
                let mut t2 = tup.clone();
                t2.push(v.clone());
                next.push((t2, wgt * pv));
            }
        }
        copies = next;
    }
    let seed_weight = Prob::new(BigInt::one(), BigInt::from(seeds.len().max(1)));
    let seedlen = ToeplitzSeed::seed_len(col_len, rbits);
    let d_nu = seedlen + ncols * rbits;
    let mut rows: BTreeMap<Token, Prob> = BTreeMap::new();
    for (tup, wgt) in &copies {
        // Column j stacks block j of every copy.
        let columns: Vec<Token> = (0..ncols)
            .map(|j| {
                tup.iter().fold(Token::bits("").unwrap(), |acc, copy| {
                    acc.concat(&Token::bits(&copy.as_str()[j * w..(j + 1) * w]).unwrap())
                })
            })
            .collect();
        for seed in &seeds {
            let out = toeplitz_extract(&columns, seed)?;
            *rows.entry(out).or_insert_with(Prob::zero) += wgt * &seed_weight;
        }
    }
    let dist = FiniteDist::new(rows.into_iter().collect())?;
    Ok((dist, d_nu))
}

/// The entropy-deficit-to-statistical-distance bound `δ/(2m−δ) − 2^{−δ/2}`:
/// any distribution over `m`-bit strings with entropy at most `m − δ` has at
/// least this statistical distance from uniform. May be negative (vacuous);
/// returned raw so callers can see the slack.
pub fn entropy_to_sd_bound(m: usize, delta: f64) -> Result<f64> {
    if delta < 0.0 || delta > m as f64 {
        return Err(Error::Contract(format!(
            "delta {delta} outside [0, {m}]"
        )));
    }
    Ok(delta / (2.0 * m as f64 - delta) - (2.0f64).powf(-delta / 2.0))
}

/// Repetitions needed to amplify statistical distance `δ` to `1 − 2e^{−t}`:
/// `q = max(1, ⌈12t/δ²⌉)`, reported with the guarantee value.
#[derive(Clone, Debug)]
pub struct SdAmp {
    pub q: u64,
    pub guarantee: f64,
}

pub fn sd_amp_reps(delta: &Prob, t: &Prob) -> Result<SdAmp> {
    if delta <= &Prob::zero() {
        return Err(Error::Domain("delta must be positive".into()));
    }
    if t <= &Prob::zero() {
        return Err(Error::Domain("t must be positive".into()));
    }
    let ratio = rat(12, 1) * t / (delta * delta);
    let q = ratio.ceil().to_integer().max(BigInt::one());
    let q = u64::try_from(q).map_err(|_| Error::Resource {
        needed: usize::MAX,
        cap: usize::MAX,
    })?;
    let guarantee = 1.0 - 2.0 * (-prob_f64(t)).exp();
    Ok(SdAmp { q, guarantee })
}

/// q-fold product of both sides of a pair, materialized exactly.
pub fn repeat_efid(pair: &EfidPair, q: u32, cap: usize) -> Result<EfidPair> {
    let d0 = pair.d0.product_iid(q, cap)?;
    let d1 = pair.d1.product_iid(q, cap)?;
    EfidPair::new(d0, d1)
}

/// Exact statistical distance of the q-fold product of a pair.
///
/// Pairs supported on a common two-element universe reduce to the Bernoulli
/// count statistic, which bypasses the support cap entirely; other pairs
/// are materialized under the cap.
pub fn repeated_sd(pair: &EfidPair, q: u32, cap: usize) -> Result<Prob> {
    let mut universe: Vec<&Token> = pair
        .d0
        .outcomes()
        .iter()
        .chain(pair.d1.outcomes())
        .map(|(v, _)| v)
        .collect();
    universe.sort();
    universe.dedup();
    if universe.len() <= 2 {
        let top = universe.last().expect("non-empty pair");
        let p1 = pair.d1.prob(top);
        let p0 = pair.d0.prob(top);
        return product_sd_bernoulli(&p1, &p0, q);
    }
    let repeated = repeat_efid(pair, q, cap)?;
    Ok(repeated.statistical_distance())
}

/// The parameter calculator: pure formula evaluation, no distributions.
///
/// `ℓ = ⌈2(ν* + Δ + log₂ m)/Δ⌉`, `κ = ⌈λ/2⌉`,
/// `a = ⌈m²κ log₂²λ / Δ²⌉` (the asymptotic constant fixed at 1),
/// `q = 12·λ·p(λ)`, and the output-length arithmetic
/// `k = (ν* + Δ)/m`, `k' = a·k − √(aκ)·log₂(2a)`, `d_ν = a + m(ℓ−1)(k'−κ)`.
pub fn pipeline_params(
    lambda: u32,
    m: usize,
    gap: f64,
    nu_star: f64,
    p_of_lambda: u64,
) -> Result<PipelineParams> {
    if gap <= 0.0 {
        return Err(Error::Domain("pseudoentropy gap must be positive".into()));
    }
    if m == 0 {
        return Err(Error::Domain("block count must be positive".into()));
    }
    let mf = m as f64;
    let lamf = lambda as f64;
    let ell = (2.0 * (nu_star + gap + mf.log2()) / gap).ceil().max(2.0) as usize;
    let kappa = (lambda as u64).div_ceil(2);
    let log2lam = lamf.log2();
    let a = ((mf * mf * kappa as f64 * log2lam * log2lam) / (gap * gap))
        .ceil()
        .max(1.0) as u64;
    let q = 12 * lambda as u64 * p_of_lambda;
    let k = (nu_star + gap) / mf;
    let kprime = a as f64 * k - (a as f64 * kappa as f64).sqrt() * (2.0 * a as f64).log2();
    let d_nu = a as f64 + mf * (ell as f64 - 1.0) * (kprime - kappa as f64);
    Ok(PipelineParams {
        omega: 0.0,
        gamma: 0.0,
        delta: 0.0,
        gap,
        nu_star,
        m,
        ell,
        kappa,
        a,
        rbits: 1,
        q,
        d_nu,
    })
}

/// Report of the pair-to-puzzle conversion.
#[derive(Clone, Debug)]
pub struct QefidReport {
    /// Per-bit accuracy of the optimal test on side 0 / side 1.
    pub acc0: Prob,
    pub acc1: Prob,
    /// Measured correctness error; equals `1 − ((acc₀+acc₁)/2)^λ` exactly.
    pub alpha: Prob,
    /// Optimal distinguisher advantage (equals the pair's SD).
    pub advantage: Prob,
    /// Unbounded optimal break — always 1: the verifier is a function of the
    /// puzzle alone, so security here is computational-only and not asserted.
    pub unbounded_break: Prob,
}

/// Build a puzzle from a far pair: key `k` uniform over λ bits, puzzle
/// coordinate `i` drawn from side `k_i`, verifier accepts iff the optimal
/// test maps every coordinate back to its key bit.
pub fn qefid_to_owpuzz(pair: &EfidPair, lambda: u32, cap: usize) -> Result<(Puzzle, QefidReport)> {
    if lambda == 0 {
        return Err(Error::Contract("lambda must be ≥ 1".into()));
    }
    let (test, advantage) = optimal_distinguisher(&pair.d1, &pair.d0);
    let sides = [&pair.d0, &pair.d1];
    let max_side = pair.d0.support_len().max(pair.d1.support_len());
    let mut needed: usize = 1;
    for _ in 0..lambda {
        needed = needed
            .checked_mul(2 * max_side)
            .filter(|&n| n <= cap)
            .ok_or(Error::Resource { needed: usize::MAX, cap })?;
    }
    let keys = all_bitstrings(lambda as usize);
    let key_weight = Prob::new(BigInt::one(), BigInt::from(keys.len()));
    let mut rows: Vec<((Token, Token), Prob)> = Vec::new();
    let mut entries: BTreeMap<(Token, Token), Prob> = BTreeMap::new();
    for key in &keys {
        let bits = key.to_bools();
        let mut partial: Vec<(Vec<Token>, Prob)> = vec![(Vec::new(), key_weight.clone())];
        for &b in &bits {
            let side = sides[b as usize];
            let mut next = Vec::with_capacity(partial.len() * side.support_len());
            for (tup, wgt) in &partial {
                for (v, pv) in side.outcomes() {
                    let mut t2 = tup.clone();
                    t2.push(v.clone());
                    next.push((t2, wgt * pv));
                }
            }
            partial = next;
        }
        for (tup, wgt) in partial {
            let s = Token::join(&tup);
            // The unique accepting key for this puzzle value reads the
            // optimal test on every coordinate.
            let accept_key =
                Token::from_bools(&tup.iter().map(|v| test.evaluate(v)).collect::<Vec<_>>());
            entries.entry((accept_key, s.clone())).or_insert_with(Prob::one);
            rows.push(((key.clone(), s), wgt));
        }
    }
    let sampler = FiniteDist::new(rows)?;
    let mut table = VerifierTable::new(entries)?;
    table.keys.extend(keys.iter().cloned());
    let puzzle = Puzzle::new(sampler, Verifier::Table(table), true, lambda)?;

    let one_token = Token::bits("1").unwrap();
    let acc1 = {
        let pushed = pair
            .d1
            .map(|v| if test.evaluate(v) { one_token.clone() } else { Token::bits("0").unwrap() });
        pushed.prob(&one_token)
    };
    let acc0 = {
        let pushed = pair
            .d0
            .map(|v| if test.evaluate(v) { one_token.clone() } else { Token::bits("0").unwrap() });
        Prob::one() - pushed.prob(&one_token)
    };
    let alpha = correctness_error(&puzzle);
    let unbounded_break = optimal_break(&puzzle).0;
    Ok((
        puzzle,
        QefidReport {
            acc0,
            acc1,
            alpha,
            advantage,
            unbounded_break,
        },
    ))
}

/// One advice entry of the puzzle-to-pair direction.
#[derive(Clone, Debug)]
pub struct NuEntry {
    pub pair: EfidPair,
    pub d_nu: usize,
    /// Bits extracted per column at this advice value.
    pub rbits: usize,
    /// Entropy of the built distribution.
    pub entropy: f64,
    /// Whether the deficit check `H(D) ≤ d_ν − slack` holds (slack > 0).
    pub deficit_ok: bool,
}

/// For each advice value ν on the integer grid around the joint entropy,
/// build `(uniform, D_ν)` from the puzzle's joint (s,k) distribution.
///
/// The advice scales the extraction rate: `rbits_ν = ⌈a(ν + Δ)/m⌉` clamped
/// to the column length, so at ν near the true entropy the output length
/// exceeds the entropy ceiling by a positive deficit.
pub fn owpuzz_to_nonuniform_efid(
    p: &Puzzle,
    params: &PipelineParams,
    cap: usize,
) -> Result<BTreeMap<u64, NuEntry>> {
    // Joint (s,k) as concatenated flat bitstrings.
    let joint = p.sampler.map(|(k, s)| s.concat(k));
    for (v, _) in joint.outcomes() {
        if v.part_count() != 1 {
            return Err(Error::Contract(
                "puzzle joint must consist of flat bitstrings".into(),
            ));
        }
    }
    let h = joint.entropy();
    let nu_max = (h.ceil() as u64) + 1;
    let (m, ell, a) = (params.m, params.ell, params.a as usize);
    let eq_probe = equalizer_dist(&joint, m, ell, cap)?;
    let ncols = (ell - 1) * m;
    let w = eq_probe
        .outcomes()
        .first()
        .map(|(v, _)| v.bit_len() / ncols)
        .unwrap_or(0);
    let col_len = a * w;
    let mut out = BTreeMap::new();
    for nu in 0..=nu_max {
        let target = ((a as f64) * (nu as f64 + params.gap) / m as f64).ceil() as usize;
        let rbits = target.clamp(0, col_len);
        let nu_params = PipelineParams {
            rbits,
            ..params.clone()
        };
        let (d, d_nu) = build_efid_candidate(&joint, &nu_params, cap)?;
        if d_nu >= usize::BITS as usize || (1usize << d_nu) > cap {
            return Err(Error::Resource {
                needed: 1usize
                    .checked_shl(d_nu as u32)
                    .unwrap_or(usize::MAX),
                cap,
            });
        }
        let uniform = FiniteDist::uniform(all_bitstrings(d_nu))?;
        let entropy = d.entropy();
        let deficit_ok = entropy < d_nu as f64;
        let pair = EfidPair::new(uniform, d)?;
        out.insert(
            nu,
            NuEntry {
                pair,
                d_nu,
                rbits,
                entropy,
                deficit_ok,
            },
        );
    }
    Ok(out)
}
