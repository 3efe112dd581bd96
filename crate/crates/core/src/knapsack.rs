//! Super-increasing knapsack codes: generation, validation, subset encoding
//! and the greedy decode, plus selection of the prime modulus.
//!
//! Positions are 1-based everywhere they cross a public boundary, matching
//! the price positions they are paired with.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::UniformSource;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KnapsackError {
    #[error("invalid generator parameters: {0}")]
    InvalidParameters(&'static str),
    #[error("code set is empty")]
    Empty,
    #[error("code at position {0} does not exceed the sum of its predecessors")]
    NotSuperIncreasing(usize),
    #[error("code at position {0} is not positive")]
    NonPositive(usize),
    #[error("code values overflow 64 bits")]
    Overflow,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {modulus} does not exceed the code sum {sum}")]
    TooSmall { modulus: u64, sum: u64 },
    #[error("position {position} outside 1..={k}")]
    PositionOutOfRange { position: usize, k: usize },
    #[error("position {0} selected twice")]
    DuplicatePosition(usize),
    #[error("greedy decode left residual {0}")]
    NonZeroResidual(u64),
}

/// A validated super-increasing code sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct CodeSet {
    codes: Vec<u64>,
    sum: u64,
}

impl CodeSet {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Code at a 1-based position.
    pub fn get(&self, position: usize) -> Option<u64> {
        position.checked_sub(1).and_then(|i| self.codes.get(i).copied())
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.codes
    }

    pub fn sum(&self) -> u64 {
        self.sum
    }
}

impl TryFrom<Vec<u64>> for CodeSet {
    type Error = KnapsackError;

    fn try_from(codes: Vec<u64>) -> Result<Self, Self::Error> {
        validate_code_set(codes)
    }
}

impl From<CodeSet> for Vec<u64> {
    fn from(c: CodeSet) -> Self {
        c.codes
    }
}

/// Accepts `candidate` iff every code is positive and each one strictly
/// exceeds the sum of all earlier codes.
pub fn validate_code_set(candidate: Vec<u64>) -> Result<CodeSet, KnapsackError> {
    if candidate.is_empty() {
        return Err(KnapsackError::Empty);
    }
    let mut prefix: u64 = 0;
    for (i, &c) in candidate.iter().enumerate() {
        if c == 0 {
            return Err(KnapsackError::NonPositive(i + 1));
        }
        if c <= prefix {
            return Err(KnapsackError::NotSuperIncreasing(i + 1));
        }
        prefix = prefix.checked_add(c).ok_or(KnapsackError::Overflow)?;
    }
    Ok(CodeSet {
        codes: candidate,
        sum: prefix,
    })
}

/// Draws `k` codes: the first uniform in `[1, first_max]`, each later one the
/// running sum plus a gap uniform in `[1, gap_max]`.
pub fn gen_superincreasing(
    k: usize,
    src: &mut impl UniformSource,
    first_max: u64,
    gap_max: u64,
) -> Result<CodeSet, KnapsackError> {
    if k == 0 {
        return Err(KnapsackError::InvalidParameters("k must be at least 1"));
    }
    if first_max == 0 || gap_max == 0 {
        return Err(KnapsackError::InvalidParameters("bounds must be at least 1"));
    }
    let mut codes = Vec::with_capacity(k);
    let mut prefix = 0u64;
    for i in 0..k {
        let c = if i == 0 {
            src.uniform_inclusive(1, first_max)
        } else {
            prefix
                .checked_add(src.uniform_inclusive(1, gap_max))
                .ok_or(KnapsackError::Overflow)?
        };
        prefix = prefix.checked_add(c).ok_or(KnapsackError::Overflow)?;
        codes.push(c);
    }
    Ok(CodeSet { codes, sum: prefix })
}

/// A prime modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Modulus(u64);

impl Modulus {
    /// Wraps `q` after a primality check. No relation to any code set is
    /// checked here.
    pub fn new(q: u64) -> Result<Self, KnapsackError> {
        if is_prime(q) {
            Ok(Self(q))
        } else {
            Err(KnapsackError::NotPrime(q))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn add(self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.0 as u128) as u64
    }

    pub fn sub(self, a: u64, b: u64) -> u64 {
        let q = self.0 as u128;
        ((a as u128 % q + q - b as u128 % q) % q) as u64
    }

    pub fn reduce(self, a: u64) -> u64 {
        a % self.0
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Without `explicit`, the smallest prime above the code sum. With it, the
/// value must be prime and, in strict mode, exceed the code sum.
pub fn select_modulus(
    codes: &CodeSet,
    explicit: Option<u64>,
    strict: bool,
) -> Result<Modulus, KnapsackError> {
    match explicit {
        Some(q) => {
            let m = Modulus::new(q)?;
            if strict && q <= codes.sum() {
                return Err(KnapsackError::TooSmall {
                    modulus: q,
                    sum: codes.sum(),
                });
            }
            Ok(m)
        }
        None => {
            let mut n = codes.sum().checked_add(1).ok_or(KnapsackError::Overflow)?;
            while !is_prime(n) {
                n = n.checked_add(1).ok_or(KnapsackError::Overflow)?;
            }
            Ok(Modulus(n))
        }
    }
}

/// Sum of the codes at the given 1-based positions, unreduced.
pub fn encode_subset(codes: &CodeSet, selected: &[usize]) -> Result<u64, KnapsackError> {
    let mut seen = vec![false; codes.len()];
    let mut total = 0u64;
    for &p in selected {
        let c = codes.get(p).ok_or(KnapsackError::PositionOutOfRange {
            position: p,
            k: codes.len(),
        })?;
        if std::mem::replace(&mut seen[p - 1], true) {
            return Err(KnapsackError::DuplicatePosition(p));
        }
        total += c;
    }
    Ok(total)
}

/// One bit per code position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlagVector(Vec<bool>);

impl FlagVector {
    pub fn zeros(k: usize) -> Self {
        Self(vec![false; k])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Indicator vector of the given 1-based positions.
    pub fn indicator(k: usize, positions: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = vec![false; k];
        for p in positions {
            bits[p - 1] = true;
        }
        Self(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_set(&self, position: usize) -> bool {
        position
            .checked_sub(1)
            .and_then(|i| self.0.get(i).copied())
            .unwrap_or(false)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Set positions, ascending, 1-based.
    pub fn positions(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i + 1))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for FlagVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, &b) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str("}")
    }
}

impl Serialize for FlagVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|&b| b as u8))
    }
}

impl<'de> Deserialize<'de> for FlagVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = Vec::<u8>::deserialize(d)?;
        raw.into_iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(serde::de::Error::custom(format!("flag {other} is not 0 or 1"))),
            })
            .collect::<Result<_, _>>()
            .map(FlagVector)
    }
}

/// Greedy decode from the largest code down. A clean run ends with a zero
/// residual; anything else means the sum was not a subset sum of `codes`.
pub fn solve_knapsack(sigma: u64, codes: &CodeSet) -> Result<FlagVector, KnapsackError> {
    let mut residual = sigma;
    let mut bits = vec![false; codes.len()];
    for (bit, &c) in bits.iter_mut().zip(codes.as_slice()).rev() {
        if residual >= c {
            *bit = true;
            residual -= c;
        }
    }
    if residual != 0 {
        return Err(KnapsackError::NonZeroResidual(residual));
    }
    Ok(FlagVector(bits))
}

/// Deterministic Miller-Rabin; these bases are exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        r
    };
    'witness: for a in BASES {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
