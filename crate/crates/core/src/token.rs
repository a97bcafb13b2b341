//! Outcome values.
//!
//! A [`Token`] is a bitstring label, possibly structured. Flat tokens are
//! strings over `{0,1}`; the distinguished token `bot` stands for the ⊥
//! outcome produced by guarding transforms. Product constructions join
//! coordinate tokens with `.` separators, so a token is in general a
//! non-empty sequence of *parts*, each either a bitstring or `bot`.
//!
//! Tokens order lexicographically on their printed form, which fixes the
//! canonical outcome order used everywhere (and the argmax tie-break).

use crate::error::{Error, Result};
use std::fmt;

/// The printed form of the ⊥ outcome.
pub const BOT: &str = "bot";

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Token(String);

impl Token {
    /// A flat bitstring token. The empty string is permitted (it is the unit
    /// of concatenation inside product constructions).
    pub fn bits(s: &str) -> Result<Token> {
        if s.chars().all(|c| c == '0' || c == '1') {
            Ok(Token(s.to_string()))
        } else {
            Err(Error::Validation(format!("not a bitstring: {s:?}")))
        }
    }

    /// Parse a printed token: dot-separated parts, each `[01]+` or `bot`.
    pub fn parse(s: &str) -> Result<Token> {
        if s.is_empty() {
            return Err(Error::Validation("empty token".into()));
        }
        for part in s.split('.') {
            let ok = part == BOT
                || (!part.is_empty() && part.chars().all(|c| c == '0' || c == '1'));
            if !ok {
                return Err(Error::Validation(format!("bad token part {part:?} in {s:?}")));
            }
        }
        Ok(Token(s.to_string()))
    }

    pub fn bot() -> Token {
        Token(BOT.to_string())
    }

    /// True when the token is exactly the single part `bot`.
    pub fn is_bot(&self) -> bool {
        self.0 == BOT
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The flat parts of the token, in order.
    pub fn parts(&self) -> Vec<&str> {
        self.0.split('.').collect()
    }

    pub fn part_count(&self) -> usize {
        self.0.split('.').count()
    }

    /// Join tokens into a product token (flattening nested parts).
    pub fn join(parts: &[Token]) -> Token {
        Token(
            parts
                .iter()
                .map(|t| t.0.as_str())
                .collect::<Vec<_>>()
                .join("."),
        )
    }

    /// Split a product token into groups consuming `arities` flat parts each.
    pub fn split_arities(&self, arities: &[usize]) -> Result<Vec<Token>> {
        let parts = self.parts();
        let total: usize = arities.iter().sum();
        if parts.len() != total {
            return Err(Error::Domain(format!(
                "token {self} has {} parts, expected {total}",
                parts.len()
            )));
        }
        let mut out = Vec::with_capacity(arities.len());
        let mut idx = 0;
        for &a in arities {
            out.push(Token(parts[idx..idx + a].join(".")));
            idx += a;
        }
        Ok(out)
    }

    /// Bitwise XOR of two flat bitstrings of equal length.
    pub fn xor(&self, other: &Token) -> Result<Token> {
        let (a, b) = (self.as_str(), other.as_str());
        if self.part_count() != 1 || other.part_count() != 1 || self.is_bot() || other.is_bot() {
            return Err(Error::Domain(format!("xor needs flat bitstrings: {a} ^ {b}")));
        }
        if a.len() != b.len() {
            return Err(Error::Domain(format!("xor length mismatch: {a} ^ {b}")));
        }
        let s: String = a
            .bytes()
            .zip(b.bytes())
            .map(|(x, y)| if x == y { '0' } else { '1' })
            .collect();
        Ok(Token(s))
    }

    /// Raw concatenation of flat bitstrings (no separator).
    pub fn concat(&self, other: &Token) -> Token {
        Token(format!("{}{}", self.0, other.0))
    }

    /// Bit length of a flat bitstring token.
    pub fn bit_len(&self) -> usize {
        self.0.len()
    }

    /// The bits of a flat bitstring token as booleans.
    pub fn to_bools(&self) -> Vec<bool> {
        self.0.bytes().map(|b| b == b'1').collect()
    }

    pub fn from_bools(bits: &[bool]) -> Token {
        Token(bits.iter().map(|&b| if b { '1' } else { '0' }).collect())
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// All bitstrings of length `n` in lexicographic order.
pub fn all_bitstrings(n: usize) -> Vec<Token> {
    let mut out = Vec::with_capacity(1 << n);
    for v in 0u64..(1u64 << n) {
        let s: String = (0..n).map(|i| {
            if (v >> (n - 1 - i)) & 1 == 1 { '1' } else { '0' }
        }).collect();
        out.push(Token(s));
    }
    out
}
