//! Randomizers that cancel mod q, code randomization, and additive sharing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knapsack::Modulus;
use crate::rng::UniformSource;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SharingError {
    #[error("count must be at least 1")]
    ZeroCount,
    #[error("nothing to aggregate")]
    Empty,
    #[error("value {value} is not reduced mod {q}")]
    NotReduced { value: u64, q: u64 },
    #[error("randomizers sum to {sum} mod {q}, expected 0")]
    NonCancelling { sum: u64, q: u64 },
    #[error("shares sum to {sum} mod {q}, expected {expected}")]
    ShareMismatch { sum: u64, expected: u64, q: u64 },
    #[error("expected {expected} values, got {got}")]
    WrongLength { expected: usize, got: usize },
}

/// Residues r_1..r_n whose sum is 0 mod q.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RandomizerVector {
    entries: Vec<u64>,
    q: Modulus,
}

impl RandomizerVector {
    /// `n - 1` uniform residues and a closing one that cancels their sum.
    pub fn generate(
        n: usize,
        q: Modulus,
        src: &mut impl UniformSource,
    ) -> Result<Self, SharingError> {
        if n == 0 {
            return Err(SharingError::ZeroCount);
        }
        let mut entries: Vec<u64> = (0..n - 1).map(|_| src.below(q.get())).collect();
        let partial = entries.iter().fold(0, |acc, &r| q.add(acc, r));
        entries.push(q.sub(0, partial));
        Ok(Self { entries, q })
    }

    /// Wraps caller-supplied residues after checking range and cancellation.
    pub fn from_entries(entries: Vec<u64>, q: Modulus) -> Result<Self, SharingError> {
        if entries.is_empty() {
            return Err(SharingError::ZeroCount);
        }
        check_reduced(&entries, q)?;
        let sum = entries.iter().fold(0, |acc, &r| q.add(acc, r));
        if sum != 0 {
            return Err(SharingError::NonCancelling { sum, q: q.get() });
        }
        Ok(Self { entries, q })
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn modulus(&self) -> Modulus {
        self.q
    }
}

/// A code after adding a randomizer, reduced mod q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RandomizedCode(pub u64);

pub fn randomize_code(c: u64, r: u64, q: Modulus) -> Result<RandomizedCode, SharingError> {
    if r >= q.get() {
        return Err(SharingError::NotReduced { value: r, q: q.get() });
    }
    Ok(RandomizedCode(q.add(c, r)))
}

/// Splits `cprime` into `n` residues that sum back to it mod q.
pub fn split_shares(
    cprime: RandomizedCode,
    n: usize,
    q: Modulus,
    src: &mut impl UniformSource,
) -> Result<Vec<u64>, SharingError> {
    if n == 0 {
        return Err(SharingError::ZeroCount);
    }
    let mut shares: Vec<u64> = (0..n - 1).map(|_| src.below(q.get())).collect();
    let partial = shares.iter().fold(0, |acc, &s| q.add(acc, s));
    shares.push(q.sub(cprime.0, partial));
    Ok(shares)
}

/// Checks caller-pinned shares against the code they claim to split.
pub fn check_shares(
    shares: &[u64],
    cprime: RandomizedCode,
    q: Modulus,
) -> Result<(), SharingError> {
    if shares.is_empty() {
        return Err(SharingError::Empty);
    }
    check_reduced(shares, q)?;
    let sum = shares.iter().fold(0, |acc, &s| q.add(acc, s));
    if sum != q.reduce(cprime.0) {
        return Err(SharingError::ShareMismatch {
            sum,
            expected: cprime.0,
            q: q.get(),
        });
    }
    Ok(())
}

/// Modular sum of the shares one bidder received.
pub fn aggregate_column(shares_received: &[u64], q: Modulus) -> Result<u64, SharingError> {
    if shares_received.is_empty() {
        return Err(SharingError::Empty);
    }
    Ok(shares_received.iter().fold(0, |acc, &s| q.add(acc, s)))
}

/// The seller's knapsack value: modular sum of every bidder's aggregate.
pub fn combine_sigmas(sigmas: &[u64], q: Modulus) -> Result<u64, SharingError> {
    aggregate_column(sigmas, q)
}

/// `m[j][v]`: the share bidder `j` sends to bidder `v` (0-based here).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareMatrix {
    rows: Vec<Vec<u64>>,
}

impl ShareMatrix {
    pub fn new(rows: Vec<Vec<u64>>) -> Result<Self, SharingError> {
        let n = rows.len();
        if n == 0 {
            return Err(SharingError::Empty);
        }
        for row in &rows {
            if row.len() != n {
                return Err(SharingError::WrongLength {
                    expected: n,
                    got: row.len(),
                });
            }
        }
        Ok(Self { rows })
    }

    /// Splits every code with fresh randomness.
    pub fn split_all(
        codes: &[RandomizedCode],
        q: Modulus,
        src: &mut impl UniformSource,
    ) -> Result<Self, SharingError> {
        let rows = codes
            .iter()
            .map(|&c| split_shares(c, codes.len(), q, src))
            .collect::<Result<_, _>>()?;
        Self::new(rows)
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, j: usize) -> &[u64] {
        &self.rows[j]
    }

    pub fn column(&self, v: usize) -> Vec<u64> {
        self.rows.iter().map(|r| r[v]).collect()
    }

    /// Column aggregates σ_1..σ_n.
    pub fn sigmas(&self, q: Modulus) -> Result<Vec<u64>, SharingError> {
        (0..self.size())
            .map(|v| aggregate_column(&self.column(v), q))
            .collect()
    }
}

fn check_reduced(values: &[u64], q: Modulus) -> Result<(), SharingError> {
    match values.iter().find(|&&v| v >= q.get()) {
        Some(&value) => Err(SharingError::NotReduced { value, q: q.get() }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Scripted, Seeded};

    fn q(v: u64) -> Modulus {
        Modulus::new(v).unwrap()
    }

    #[test]
    fn scripted_randomizers_match_examples() {
        let r = RandomizerVector::generate(4, q(1987), &mut Scripted::new([900, 700, 300])).unwrap();
        assert_eq!(r.entries(), &[900, 700, 300, 87]);
        let r = RandomizerVector::generate(3, q(5209), &mut Scripted::new([2500, 1500])).unwrap();
        assert_eq!(r.entries(), &[2500, 1500, 1209]);
        let r = RandomizerVector::generate(1, q(101), &mut Seeded::new(3)).unwrap();
        assert_eq!(r.entries(), &[0]);
        assert_eq!(
            RandomizerVector::generate(0, q(101), &mut Seeded::new(3)),
            Err(SharingError::ZeroCount)
        );
    }

    #[test]
    fn injected_randomizers_are_checked() {
        assert!(RandomizerVector::from_entries(vec![900, 700, 300, 87], q(1987)).is_ok());
        assert_eq!(
            RandomizerVector::from_entries(vec![900, 700, 300, 88], q(1987)),
            Err(SharingError::NonCancelling { sum: 1, q: 1987 })
        );
        assert!(matches!(
            RandomizerVector::from_entries(vec![1987, 0], q(1987)),
            Err(SharingError::NotReduced { .. })
        ));
    }

    #[test]
    fn randomize_examples() {
        assert_eq!(randomize_code(5, 900, q(1987)).unwrap().0, 905);
        assert_eq!(randomize_code(2600, 1209, q(5209)).unwrap().0, 3809);
        assert_eq!(randomize_code(0, 0, q(7)).unwrap().0, 0);
        assert!(randomize_code(1, 7, q(7)).is_err());
    }

    #[test]
    fn split_examples() {
        let s = split_shares(RandomizedCode(905), 4, q(1987), &mut Scripted::new([200, 200, 200])).unwrap();
        assert_eq!(s, vec![200, 200, 200, 305]);
        let s = split_shares(RandomizedCode(42), 1, q(1987), &mut Seeded::new(0)).unwrap();
        assert_eq!(s, vec![42]);
        let mut src = Seeded::new(11);
        for _ in 0..200 {
            let c = RandomizedCode(src.below(5147));
            let s = split_shares(c, 8, q(5147), &mut src).unwrap();
            assert_eq!(s.iter().sum::<u64>() % 5147, c.0);
            assert!(s.iter().all(|&x| x < 5147));
        }
    }

    #[test]
    fn aggregate_and_combine_examples() {
        assert_eq!(aggregate_column(&[200, 100, 150, 50], q(1987)).unwrap(), 500);
        assert_eq!(aggregate_column(&[1000, 530, 1500], q(5209)).unwrap(), 3030);
        assert_eq!(aggregate_column(&[17], q(1987)).unwrap(), 17);
        assert_eq!(aggregate_column(&[], q(1987)), Err(SharingError::Empty));
        assert_eq!(combine_sigmas(&[500, 635, 780, 712], q(1987)).unwrap(), 640);
        assert_eq!(combine_sigmas(&[3030, 2309, 2507], q(5209)).unwrap(), 2637);
        assert_eq!(combine_sigmas(&[0, 0, 0], q(5209)).unwrap(), 0);
    }

    #[test]
    fn example_one_matrix_columns() {
        let m = ShareMatrix::new(vec![
            vec![200, 200, 200, 305],
            vec![100, 115, 400, 100],
            vec![150, 250, 100, 300],
            vec![50, 70, 80, 7],
        ])
        .unwrap();
        assert_eq!(m.sigmas(q(1987)).unwrap(), vec![500, 635, 780, 712]);
        assert!(ShareMatrix::new(vec![vec![1, 2], vec![3]]).is_err());
    }

    #[test]
    fn check_shares_detects_mismatch() {
        let q = q(1987);
        assert!(check_shares(&[200, 200, 200, 305], RandomizedCode(905), q).is_ok());
        assert!(matches!(
            check_shares(&[200, 200, 200, 304], RandomizedCode(905), q),
            Err(SharingError::ShareMismatch { .. })
        ));
    }
}
