//! Line-oriented text formats and reports.
//!
//! The puzzle format is designed so that exact rationals survive round trips
//! and diffs are reviewable:
//!
//! ```text
//! OWPUZZ 1
//! EV true
//! LAMBDA 2
//! SAMPLE <key> <puzzle> <num>/<den>
//! VERIFY <key> <puzzle> <num>/<den>
//! VERIFYALL <puzzle>
//! ```
//!
//! `#` starts a comment; unlisted VERIFY pairs default to 0; `VERIFYALL`
//! marks puzzle values accepted under every key (produced by relaxation and
//! guard transforms). Tokens are raw 0/1 strings, `bot` for ⊥, with `.`
//! joining product coordinates. Serialization is canonical (sorted lines,
//! reduced fractions), so parse ∘ serialize is the identity byte-for-byte.
//!
//! The same family covers signature (`OTSIG 1`), commitment (`NICOM 1`),
//! and generator (`PDPRG 1`) blocks.

use crate::dist::{Channel, FiniteDist, Prob};
use crate::error::{Error, Result};
use crate::primitives::{NiCommitment, OneTimeSig, PseudoDetPrg};
use crate::puzzle::{flatten_verifier, Puzzle, Verifier, VerifierTable};
use crate::token::Token;
use num::{BigInt, BigRational, One, Signed, Zero};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

fn parse_prob(s: &str, line: usize) -> Result<Prob> {
    let err = |msg: &str| Error::Parse {
        line,
        msg: format!("{msg}: {s:?}"),
    };
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = num.parse().map_err(|_| err("bad numerator"))?;
    let d: BigInt = den.parse().map_err(|_| err("bad denominator"))?;
    if d.is_zero() {
        return Err(err("zero denominator"));
    }
    let p = BigRational::new(n, d);
    if p.is_negative() || p > BigRational::one() {
        return Err(err("probability outside [0,1]"));
    }
    Ok(p)
}

fn show_prob(p: &Prob) -> String {
    format!("{}/{}", p.numer(), p.denom())
}

fn parse_token(s: &str, line: usize) -> Result<Token> {
    Token::parse(s).map_err(|e| Error::Parse {
        line,
        msg: e.to_string(),
    })
}

/// Split a block of text into meaningful (line number, fields) rows.
fn rows(text: &str) -> Vec<(usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                None
            } else {
                Some((i + 1, stripped.split_whitespace().collect()))
            }
        })
        .collect()
}

/// Parse a puzzle file.
pub fn parse_puzzle(text: &str) -> Result<Puzzle> {
    let rows = rows(text);
    let mut it = rows.iter();
    match it.next() {
        Some((_, f)) if f.as_slice() == ["OWPUZZ", "1"] => {}
        Some((line, _)) => {
            return Err(Error::Parse {
                line: *line,
                msg: "expected header `OWPUZZ 1`".into(),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty file".into(),
            })
        }
    }
    let mut ev: Option<bool> = None;
    let mut lambda: Option<u32> = None;
    let mut samples: Vec<((Token, Token), Prob)> = Vec::new();
    let mut sample_seen: BTreeSet<(Token, Token)> = BTreeSet::new();
    let mut entries: BTreeMap<(Token, Token), Prob> = BTreeMap::new();
    let mut accept_all: BTreeSet<Token> = BTreeSet::new();
    for (line, f) in it {
        let line = *line;
        match f.as_slice() {
            ["EV", v] => {
                ev = Some(match *v {
                    "true" => true,
                    "false" => false,
                    _ => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("EV must be true or false, got {v:?}"),
                        })
                    }
                });
            }
            ["LAMBDA", v] => {
                lambda = Some(v.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad LAMBDA value {v:?}"),
                })?);
            }
            ["SAMPLE", k, s, w] => {
                let pair = (parse_token(k, line)?, parse_token(s, line)?);
                if !sample_seen.insert(pair.clone()) {
                    return Err(Error::Validation(format!(
                        "duplicate SAMPLE pair at line {line}"
                    )));
                }
                samples.push((pair, parse_prob(w, line)?));
            }
            ["VERIFY", k, s, w] => {
                let pair = (parse_token(k, line)?, parse_token(s, line)?);
                if entries.contains_key(&pair) {
                    return Err(Error::Validation(format!(
                        "duplicate VERIFY pair at line {line}"
                    )));
                }
                entries.insert(pair, parse_prob(w, line)?);
            }
            ["VERIFYALL", s] => {
                accept_all.insert(parse_token(s, line)?);
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unrecognized line: {}", f.join(" ")),
                })
            }
        }
    }
    let sampler = FiniteDist::new(samples)?;
    let mut table = VerifierTable::new(entries)?;
    table.accept_all = accept_all;
    Puzzle::new(
        sampler,
        Verifier::Table(table),
        ev.unwrap_or(false),
        lambda.unwrap_or(1),
    )
}

/// Serialize a puzzle canonically, flattening structured verifiers first.
pub fn serialize_puzzle(p: &Puzzle, cap: usize) -> Result<String> {
    let table = flatten_verifier(p, cap)?;
    let mut out = String::new();
    out.push_str("OWPUZZ 1\n");
    out.push_str(&format!("EV {}\n", p.ev));
    out.push_str(&format!("LAMBDA {}\n", p.lambda));
    for ((k, s), w) in p.sampler.outcomes() {
        out.push_str(&format!("SAMPLE {k} {s} {}\n", show_prob(w)));
    }
    for ((k, s), v) in &table.entries {
        if !v.is_zero() {
            out.push_str(&format!("VERIFY {k} {s} {}\n", show_prob(v)));
        }
    }
    for s in &table.accept_all {
        out.push_str(&format!("VERIFYALL {s}\n"));
    }
    Ok(out)
}

/// Parse a one-time-signature block:
/// `OTSIG 1`, `MESSAGE m`, `KEYGEN vk sk w`, `SIGN sk m sig w`,
/// `VERIFY vk m sig w`.
pub fn parse_otsig(text: &str) -> Result<OneTimeSig> {
    let rows = rows(text);
    let mut it = rows.iter();
    match it.next() {
        Some((_, f)) if f.as_slice() == ["OTSIG", "1"] => {}
        other => {
            return Err(Error::Parse {
                line: other.map(|(l, _)| *l).unwrap_or(1),
                msg: "expected header `OTSIG 1`".into(),
            })
        }
    }
    let mut messages = Vec::new();
    let mut keygen = Vec::new();
    let mut sign: BTreeMap<(Token, Token), Vec<(Token, Prob)>> = BTreeMap::new();
    let mut verify = BTreeMap::new();
    for (line, f) in it {
        let line = *line;
        match f.as_slice() {
            ["MESSAGE", m] => messages.push(parse_token(m, line)?),
            ["KEYGEN", vk, sk, w] => keygen.push((
                (parse_token(vk, line)?, parse_token(sk, line)?),
                parse_prob(w, line)?,
            )),
            ["SIGN", sk, m, sig, w] => {
                sign.entry((parse_token(sk, line)?, parse_token(m, line)?))
                    .or_default()
                    .push((parse_token(sig, line)?, parse_prob(w, line)?));
            }
            ["VERIFY", vk, m, sig, w] => {
                verify.insert(
                    (
                        parse_token(vk, line)?,
                        parse_token(m, line)?,
                        parse_token(sig, line)?,
                    ),
                    parse_prob(w, line)?,
                );
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unrecognized line: {}", f.join(" ")),
                })
            }
        }
    }
    let mut sign_map = BTreeMap::new();
    for (key, rows) in sign {
        sign_map.insert(key, FiniteDist::new(rows)?);
    }
    Ok(OneTimeSig {
        keygen: FiniteDist::new(keygen)?,
        sign: Channel::new(sign_map),
        verify,
        messages,
    })
}

pub fn serialize_otsig(sig: &OneTimeSig) -> String {
    let mut out = String::from("OTSIG 1\n");
    for m in &sig.messages {
        out.push_str(&format!("MESSAGE {m}\n"));
    }
    for ((vk, sk), w) in sig.keygen.outcomes() {
        out.push_str(&format!("KEYGEN {vk} {sk} {}\n", show_prob(w)));
    }
    for ((sk, m), d) in sig.sign.entries() {
        for (s, w) in d.outcomes() {
            out.push_str(&format!("SIGN {sk} {m} {s} {}\n", show_prob(w)));
        }
    }
    for ((vk, m, s), w) in &sig.verify {
        if !w.is_zero() {
            out.push_str(&format!("VERIFY {vk} {m} {s} {}\n", show_prob(w)));
        }
    }
    out
}

/// Parse a commitment block:
/// `NICOM 1`, `MESSAGE m`, `COMMIT m c d w`, `RECEIVE c d m|bot`.
pub fn parse_nicom(text: &str) -> Result<NiCommitment> {
    let rows = rows(text);
    let mut it = rows.iter();
    match it.next() {
        Some((_, f)) if f.as_slice() == ["NICOM", "1"] => {}
        other => {
            return Err(Error::Parse {
                line: other.map(|(l, _)| *l).unwrap_or(1),
                msg: "expected header `NICOM 1`".into(),
            })
        }
    }
    let mut messages = Vec::new();
    let mut commit: BTreeMap<Token, Vec<((Token, Token), Prob)>> = BTreeMap::new();
    let mut receive = BTreeMap::new();
    for (line, f) in it {
        let line = *line;
        match f.as_slice() {
            ["MESSAGE", m] => messages.push(parse_token(m, line)?),
            ["COMMIT", m, c, d, w] => {
                commit
                    .entry(parse_token(m, line)?)
                    .or_default()
                    .push((
                        (parse_token(c, line)?, parse_token(d, line)?),
                        parse_prob(w, line)?,
                    ));
            }
            ["RECEIVE", c, d, m] => {
                let recovered = if *m == crate::token::BOT {
                    None
                } else {
                    Some(parse_token(m, line)?)
                };
                receive.insert((parse_token(c, line)?, parse_token(d, line)?), recovered);
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unrecognized line: {}", f.join(" ")),
                })
            }
        }
    }
    let mut commit_map = BTreeMap::new();
    for (m, rows) in commit {
        commit_map.insert(m, FiniteDist::new(rows)?);
    }
    Ok(NiCommitment {
        messages,
        commit: Channel::new(commit_map),
        receive,
    })
}

pub fn serialize_nicom(c: &NiCommitment) -> String {
    let mut out = String::from("NICOM 1\n");
    for m in &c.messages {
        out.push_str(&format!("MESSAGE {m}\n"));
    }
    for (m, d) in c.commit.entries() {
        for ((com, dec), w) in d.outcomes() {
            out.push_str(&format!("COMMIT {m} {com} {dec} {}\n", show_prob(w)));
        }
    }
    for ((com, dec), m) in &c.receive {
        let shown = m
            .as_ref()
            .map(|t| t.to_string())
            .unwrap_or_else(|| crate::token::BOT.to_string());
        out.push_str(&format!("RECEIVE {com} {dec} {shown}\n"));
    }
    out
}

/// Parse a generator block: `PDPRG 1`, `N n`, `ELL ell`, `GEN seed out w`.
pub fn parse_pdprg(text: &str) -> Result<PseudoDetPrg> {
    let rows = rows(text);
    let mut it = rows.iter();
    match it.next() {
        Some((_, f)) if f.as_slice() == ["PDPRG", "1"] => {}
        other => {
            return Err(Error::Parse {
                line: other.map(|(l, _)| *l).unwrap_or(1),
                msg: "expected header `PDPRG 1`".into(),
            })
        }
    }
    let mut n = None;
    let mut ell = None;
    let mut gen: BTreeMap<Token, Vec<(Token, Prob)>> = BTreeMap::new();
    for (line, f) in it {
        let line = *line;
        match f.as_slice() {
            ["N", v] => {
                n = Some(v.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad N value {v:?}"),
                })?)
            }
            ["ELL", v] => {
                ell = Some(v.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad ELL value {v:?}"),
                })?)
            }
            ["GEN", seed, out, w] => {
                gen.entry(parse_token(seed, line)?)
                    .or_default()
                    .push((parse_token(out, line)?, parse_prob(w, line)?));
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unrecognized line: {}", f.join(" ")),
                })
            }
        }
    }
    let n = n.ok_or(Error::Validation("missing N line".into()))?;
    let ell = ell.ok_or(Error::Validation("missing ELL line".into()))?;
    let mut gen_map = BTreeMap::new();
    for (seed, rows) in gen {
        gen_map.insert(seed, FiniteDist::new(rows)?);
    }
    PseudoDetPrg::new(n, ell, Channel::new(gen_map))
}

pub fn serialize_pdprg(g: &PseudoDetPrg) -> String {
    let mut out = String::from("PDPRG 1\n");
    out.push_str(&format!("N {}\n", g.n));
    out.push_str(&format!("ELL {}\n", g.ell));
    for (seed, d) in g.gen.entries() {
        for (y, w) in d.outcomes() {
            out.push_str(&format!("GEN {seed} {y} {}\n", show_prob(w)));
        }
    }
    out
}

/// One report row: a metric, its measured value, the bound it is checked
/// against, a short label naming the certified inequality, and the verdict.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ReportRow {
    pub metric: String,
    pub value: String,
    pub bound: String,
    pub anchor: String,
    pub satisfied: bool,
}

/// A deterministic, ordered report with CSV and JSON emitters carrying
/// identical content.
#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn push(
        &mut self,
        metric: impl Into<String>,
        value: impl Into<String>,
        bound: impl Into<String>,
        anchor: impl Into<String>,
        satisfied: bool,
    ) {
        self.rows.push(ReportRow {
            metric: metric.into(),
            value: value.into(),
            bound: bound.into(),
            anchor: anchor.into(),
            satisfied,
        });
    }

    pub fn all_satisfied(&self) -> bool {
        self.rows.iter().all(|r| r.satisfied)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value,bound,anchor,satisfied\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.metric, r.value, r.bound, r.anchor, r.satisfied
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("report serializes")
    }
}

/// Render a probability as exact `num/den` for reports.
pub fn report_prob(p: &Prob) -> String {
    show_prob(p)
}
