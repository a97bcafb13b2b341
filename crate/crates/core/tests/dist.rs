//! Frozen-value and identity tests for the distribution layer.

use puzzlelab_core::dist::{
    apply_channel, bernoulli_kl, kl_chain_decomposition, kl_divergence, marginal_and_conditional,
    optimal_distinguisher, pinsker_gap, product_sd_bernoulli, prob_f64, rat, statistical_distance,
    BlockStructure, Channel, FiniteDist, Kl, Prob,
};
use puzzlelab_core::token::{all_bitstrings, Token};

const TOL: f64 = 1e-9;

fn tok(s: &str) -> Token {
    Token::parse(s).unwrap()
}

fn skew() -> FiniteDist<Token> {
    FiniteDist::new(vec![(tok("0"), rat(3, 4)), (tok("1"), rat(1, 4))]).unwrap()
}

#[test]
fn entropy_frozen_values() {
    let u4 = FiniteDist::uniform(all_bitstrings(2)).unwrap();
    assert!((u4.entropy() - 2.0).abs() < TOL);
    assert!((FiniteDist::point(tok("0")).entropy() - 0.0).abs() < TOL);
    assert!((skew().entropy() - 0.811_278_124_459).abs() < TOL);
}

#[test]
fn min_entropy_frozen_values() {
    let u4 = FiniteDist::uniform(all_bitstrings(2)).unwrap();
    assert!((u4.min_entropy() - 2.0).abs() < TOL);
    assert!((FiniteDist::point(tok("0")).min_entropy() - 0.0).abs() < TOL);
    assert!((skew().min_entropy() - 0.415_037_499_279).abs() < TOL);
}

#[test]
fn kl_frozen_values() {
    let p = skew();
    assert_eq!(kl_divergence(&p, &p), Kl::Finite(0.0));
    // Bern(1) vs Bern(1/2) → one bit.
    match bernoulli_kl(&rat(1, 1), &rat(1, 2)) {
        Kl::Finite(v) => assert!((v - 1.0).abs() < TOL),
        Kl::Infinite => panic!("expected finite"),
    }
    match bernoulli_kl(&rat(1, 2), &rat(1, 4)) {
        Kl::Finite(v) => assert!((v - 0.207_518_749_639).abs() < TOL),
        Kl::Infinite => panic!("expected finite"),
    }
    // Support mismatch yields the sentinel, which orders above everything.
    let inf = bernoulli_kl(&rat(1, 2), &rat(0, 1));
    assert!(inf.is_infinite());
    assert!(Kl::Finite(1e12) < Kl::Infinite);
}

#[test]
fn statistical_distance_frozen_values() {
    let b34 = FiniteDist::bernoulli(rat(3, 4));
    let b14 = FiniteDist::bernoulli(rat(1, 4));
    assert_eq!(statistical_distance(&b34, &b34), rat(0, 1));
    assert_eq!(statistical_distance(&b34, &b14), rat(1, 2));
    let disjoint_a = FiniteDist::point(tok("00"));
    let disjoint_b = FiniteDist::point(tok("11"));
    assert_eq!(statistical_distance(&disjoint_a, &disjoint_b), rat(1, 1));
}

#[test]
fn optimal_distinguisher_matches_distance() {
    let b34 = FiniteDist::bernoulli(rat(3, 4));
    let b14 = FiniteDist::bernoulli(rat(1, 4));
    let (test, adv) = optimal_distinguisher(&b34, &b14);
    assert_eq!(adv, rat(1, 2));
    assert!(test.evaluate(&tok("1")));
    assert!(!test.evaluate(&tok("0")));
    let (test2, adv2) = optimal_distinguisher(&b34, &b34);
    assert_eq!(adv2, rat(0, 1));
    assert!(test2.accept_set().is_empty());
}

#[test]
fn apply_channel_examples() {
    let u = FiniteDist::uniform(all_bitstrings(2)).unwrap();
    let identity = Channel::deterministic(all_bitstrings(2), |x: &Token| x.clone());
    assert_eq!(apply_channel(&u, &identity).unwrap(), u);
    let constant = Channel::deterministic(all_bitstrings(2), |_| tok("1"));
    assert_eq!(
        apply_channel(&u, &constant).unwrap(),
        FiniteDist::point(tok("1"))
    );
    // Parity of a uniform 2-bit string is an unbiased bit.
    let parity = Channel::deterministic(all_bitstrings(2), |x: &Token| {
        let ones = x.as_str().chars().filter(|c| *c == '1').count();
        if ones % 2 == 1 {
            tok("1")
        } else {
            tok("0")
        }
    });
    assert_eq!(
        apply_channel(&u, &parity).unwrap(),
        FiniteDist::bernoulli(rat(1, 2))
    );
    // Inputs outside the channel domain are a domain error.
    let narrow = Channel::deterministic([tok("00")], |x: &Token| x.clone());
    assert!(apply_channel(&u, &narrow).is_err());
}

#[test]
fn product_iid_examples() {
    let cap = 1_000_000;
    let point = FiniteDist::point(tok("1"));
    assert_eq!(
        point.product_iid(5, cap).unwrap(),
        FiniteDist::point(tok("11111"))
    );
    let fair = FiniteDist::bernoulli(rat(1, 2));
    assert_eq!(
        fair.product_iid(2, cap).unwrap(),
        FiniteDist::uniform(all_bitstrings(2)).unwrap()
    );
    let sq = skew().product_iid(2, cap).unwrap();
    assert_eq!(sq.prob(&tok("00")), rat(9, 16));
    assert_eq!(sq.prob(&tok("01")), rat(3, 16));
    assert_eq!(sq.prob(&tok("10")), rat(3, 16));
    assert_eq!(sq.prob(&tok("11")), rat(1, 16));
    // The cap is enforced.
    assert!(fair.product_iid(30, 1000).is_err());
}

#[test]
fn product_sd_bernoulli_examples_and_brute_force() {
    assert_eq!(
        product_sd_bernoulli(&rat(3, 4), &rat(1, 4), 1).unwrap(),
        rat(1, 2)
    );
    assert_eq!(
        product_sd_bernoulli(&rat(1, 3), &rat(1, 3), 7).unwrap(),
        rat(0, 1)
    );
    assert_eq!(
        product_sd_bernoulli(&rat(3, 4), &rat(1, 4), 2).unwrap(),
        rat(1, 2)
    );
    // Count-statistic value equals the materialized product for all t ≤ 12.
    let cap = 1 << 14;
    for (p, q) in [(rat(3, 4), rat(1, 4)), (rat(2, 3), rat(1, 5)), (rat(1, 8), rat(7, 9))] {
        let bp = FiniteDist::bernoulli(p.clone());
        let bq = FiniteDist::bernoulli(q.clone());
        for t in 1..=12u32 {
            let via_count = product_sd_bernoulli(&p, &q, t).unwrap();
            let via_product = statistical_distance(
                &bp.product_iid(t, cap).unwrap(),
                &bq.product_iid(t, cap).unwrap(),
            );
            assert_eq!(via_count, via_product, "t={t}");
        }
    }
}

#[test]
fn conditional_examples() {
    let joint = FiniteDist::new(vec![
        ((tok("0"), tok("0")), rat(1, 2)),
        ((tok("0"), tok("1")), rat(1, 4)),
        ((tok("1"), tok("1")), rat(1, 4)),
    ])
    .unwrap();
    let cond = marginal_and_conditional(&joint, &tok("0")).unwrap();
    assert_eq!(cond.prob(&tok("0")), rat(2, 3));
    assert_eq!(cond.prob(&tok("1")), rat(1, 3));
    let diag = marginal_and_conditional(&joint, &tok("1")).unwrap();
    assert_eq!(diag, FiniteDist::point(tok("1")));
    assert!(marginal_and_conditional(&joint, &tok("00")).is_err());
}

#[test]
fn chain_decomposition_sums_to_total() {
    // Correlated two-block joint versus a product reference.
    let p = FiniteDist::new(vec![
        (tok("00"), rat(1, 2)),
        (tok("01"), rat(1, 8)),
        (tok("10"), rat(1, 8)),
        (tok("11"), rat(1, 4)),
    ])
    .unwrap();
    let q = FiniteDist::new(vec![
        (tok("00"), rat(1, 4)),
        (tok("01"), rat(1, 4)),
        (tok("10"), rat(1, 4)),
        (tok("11"), rat(1, 4)),
    ])
    .unwrap();
    let blocks = BlockStructure::equal(2, 1).unwrap();
    let terms = kl_chain_decomposition(&p, &q, &blocks).unwrap();
    assert_eq!(terms.len(), 2);
    let total: f64 = terms.iter().map(|t| t.finite().unwrap()).sum();
    let direct = kl_divergence(&p, &q).finite().unwrap();
    assert!((total - direct).abs() < TOL);

    // Single block: one term equal to the total.
    let one_block = BlockStructure::new(vec![2]).unwrap();
    let single = kl_chain_decomposition(&p, &q, &one_block).unwrap();
    assert_eq!(single.len(), 1);
    assert!((single[0].finite().unwrap() - direct).abs() < TOL);

    // Support mismatch in a block propagates the sentinel.
    let q_small = FiniteDist::new(vec![(tok("00"), rat(1, 2)), (tok("01"), rat(1, 2))]).unwrap();
    let terms = kl_chain_decomposition(&p, &q_small, &blocks).unwrap();
    assert!(terms.iter().any(|t| t.is_infinite()));
}

#[test]
fn pinsker_examples() {
    let b34 = FiniteDist::bernoulli(rat(3, 4));
    let b14 = FiniteDist::bernoulli(rat(1, 4));
    let same = pinsker_gap(&b34, &b34);
    assert_eq!(same.sd, rat(0, 1));
    assert_eq!(same.kl, Kl::Finite(0.0));
    assert!(same.bound_ok);
    let gap = pinsker_gap(&b34, &b14);
    assert_eq!(gap.sd, rat(1, 2));
    assert!(gap.bound_ok);
    let disjoint = pinsker_gap(&FiniteDist::point(tok("0")), &FiniteDist::point(tok("1")));
    assert_eq!(disjoint.sd, rat(1, 1));
    assert!(disjoint.kl.is_infinite());
    assert!(disjoint.bound_ok);
}

#[test]
fn construction_validation() {
    // Weight sums must be exactly one.
    assert!(FiniteDist::new(vec![(tok("0"), rat(1, 2)), (tok("1"), rat(1, 3))]).is_err());
    // Negative weights rejected.
    assert!(FiniteDist::new(vec![(tok("0"), rat(3, 2)), (tok("1"), rat(-1, 2))]).is_err());
    // Duplicates merge, zeros drop.
    let d = FiniteDist::new(vec![
        (tok("0"), rat(1, 2)),
        (tok("0"), rat(1, 2)),
        (tok("1"), rat(0, 1)),
    ])
    .unwrap();
    assert_eq!(d.support_len(), 1);
    assert_eq!(d.prob(&tok("0")), Prob::from_integer(1.into()));
    // Normalization helper.
    let n = FiniteDist::from_unnormalized(vec![(tok("0"), rat(3, 1)), (tok("1"), rat(1, 1))])
        .unwrap();
    assert_eq!(n.prob(&tok("0")), rat(3, 4));
}

#[test]
fn entropy_of_products_is_additive() {
    let d = skew();
    let cap = 1_000_000;
    for t in 1..=6u32 {
        let prod = d.product_iid(t, cap).unwrap();
        assert!((prod.entropy() - t as f64 * d.entropy()).abs() < TOL);
    }
}

#[test]
fn kl_is_nonnegative_on_samples() {
    let d1 = skew();
    let d2 = FiniteDist::bernoulli(rat(2, 5));
    if let Kl::Finite(v) = kl_divergence(&d1, &d2) {
        assert!(v >= -TOL);
    }
    let f = prob_f64(&statistical_distance(&d1, &d2));
    assert!((0.0..=1.0).contains(&f));
}
