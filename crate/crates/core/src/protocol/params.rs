use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AuctionConfig, PriceBook, ProtocolError};
use crate::knapsack::{gen_superincreasing, select_modulus, validate_code_set, CodeSet, FlagVector, Modulus};
use crate::ot::{encode_residue, OtOffer};
use crate::rng::{Seeded, UniformSource};
use crate::sharing::{randomize_code, RandomizedCode, RandomizerVector};

/// Seller values pinned by a scenario instead of drawn from the seed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectedParams {
    #[serde(default)]
    pub codes: Option<Vec<u64>>,
    #[serde(default)]
    pub q: Option<u64>,
    #[serde(default)]
    pub randomizers: Option<Vec<u64>>,
}

/// The seller's secret material for one auction instance. Not `Clone`: a
/// seller takes it by value, so one set of randomizers serves one run.
///
/// ```compile_fail
/// use knapsack_auction::protocol::{seller_init, AuctionConfig, InjectedParams, Seller};
/// let config = AuctionConfig::new("a", vec![1, 2, 3]);
/// let params = seller_init(&config, 1, 0, &InjectedParams::default()).unwrap();
/// let _first = Seller::new(config.clone(), params, Default::default());
/// let _again = Seller::new(config, params, Default::default());
/// ```
#[derive(Debug, PartialEq, Eq)]
pub struct AuctionParams {
    book: PriceBook,
    codes: CodeSet,
    q: Modulus,
    randomizers: RandomizerVector,
    flags: FlagVector,
    assignment: BTreeMap<String, u64>,
}

/// Codes, modulus and randomizers for `n_expected` bidders; flags zeroed.
pub fn seller_init(
    config: &AuctionConfig,
    n_expected: usize,
    seed: u64,
    injected: &InjectedParams,
) -> Result<AuctionParams, ProtocolError> {
    config.validate()?;
    if n_expected == 0 {
        return Err(ProtocolError::InvalidConfig("expected bidder count is zero".into()));
    }
    let book = config.book();
    let codes = match &injected.codes {
        Some(c) => validate_code_set(c.clone())?,
        None => gen_superincreasing(
            book.len(),
            &mut Seeded::derived(seed, "codes"),
            config.code_first_max,
            config.code_gap_max,
        )?,
    };
    if codes.len() != book.len() {
        return Err(ProtocolError::InvalidConfig(format!(
            "{} codes for {} prices",
            codes.len(),
            book.len()
        )));
    }
    let q = select_modulus(&codes, injected.q, config.strict_modulus)?;
    let randomizers = match &injected.randomizers {
        Some(r) if r.len() != n_expected => {
            return Err(ProtocolError::InvalidConfig(format!(
                "{} randomizers for {} bidders",
                r.len(),
                n_expected
            )))
        }
        Some(r) => RandomizerVector::from_entries(r.clone(), q)?,
        None => RandomizerVector::generate(n_expected, q, &mut Seeded::derived(seed, "randomizers"))?,
    };
    Ok(AuctionParams {
        flags: FlagVector::zeros(book.len()),
        book,
        codes,
        q,
        randomizers,
        assignment: BTreeMap::new(),
    })
}

impl AuctionParams {
    pub fn book(&self) -> &PriceBook {
        &self.book
    }

    pub fn codes(&self) -> &CodeSet {
        &self.codes
    }

    pub fn modulus(&self) -> Modulus {
        self.q
    }

    pub fn randomizers(&self) -> &RandomizerVector {
        &self.randomizers
    }

    pub fn flags(&self) -> &FlagVector {
        &self.flags
    }

    pub fn assignment(&self) -> &BTreeMap<String, u64> {
        &self.assignment
    }

    pub fn randomizer_for(&self, bidder: &str) -> Option<u64> {
        self.assignment.get(bidder).copied()
    }

    /// Hands one randomizer to each bidder in order. The vector is redrawn
    /// first if its size no longer matches the roster.
    pub fn assign(&mut self, bidders: &[String], src: &mut impl UniformSource) -> Result<(), ProtocolError> {
        if bidders.is_empty() {
            return Err(ProtocolError::AuctionVoid);
        }
        if self.randomizers.len() != bidders.len() {
            self.randomizers = RandomizerVector::generate(bidders.len(), self.q, src)?;
        }
        self.assignment = bidders
            .iter()
            .cloned()
            .zip(self.randomizers.entries().iter().copied())
            .collect();
        Ok(())
    }

    /// Draws a fresh vector for `bidders` and reassigns.
    pub fn refresh(&mut self, bidders: &[String], src: &mut impl UniformSource) -> Result<(), ProtocolError> {
        if bidders.is_empty() {
            return Err(ProtocolError::AuctionVoid);
        }
        self.randomizers = RandomizerVector::generate(bidders.len(), self.q, src)?;
        self.assign(bidders, src)
    }

    /// `c_p + r_j mod q` for the bidder's randomizer.
    pub fn randomized(&self, bidder: &str, position: usize) -> Result<RandomizedCode, ProtocolError> {
        let r = self
            .randomizer_for(bidder)
            .ok_or_else(|| ProtocolError::UnknownBidder(bidder.to_owned()))?;
        let c = self.codes.get(position).ok_or(ProtocolError::IndexOutOfRange {
            index: position,
            k: self.codes.len(),
        })?;
        Ok(randomize_code(c, r, self.q)?)
    }

    /// The k strings a bidder chooses from: every code masked by its `r_j`.
    pub fn offer_for(&self, bidder: &str, session_id: u64) -> Result<OtOffer, ProtocolError> {
        let payloads = (1..=self.codes.len())
            .map(|p| self.randomized(bidder, p).map(|c| encode_residue(c.0)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(OtOffer::new(session_id, payloads)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knapsack::KnapsackError;

    fn ex1_config(strict: bool) -> AuctionConfig {
        let mut c = AuctionConfig::new("ex1", vec![10, 100, 200, 250, 300, 350, 400, 450, 500]);
        c.strict_modulus = strict;
        c
    }

    fn ex1_injected() -> InjectedParams {
        InjectedParams {
            codes: Some(vec![5, 9, 15, 30, 60, 120, 250, 500, 1000]),
            q: Some(1987),
            randomizers: Some(vec![900, 700, 300, 87]),
        }
    }

    #[test]
    fn example_one_verbatim() {
        let p = seller_init(&ex1_config(false), 4, 0, &ex1_injected()).unwrap();
        assert_eq!(p.modulus().get(), 1987);
        assert_eq!(p.randomizers().entries(), &[900, 700, 300, 87]);
        assert_eq!(p.flags(), &FlagVector::zeros(9));
    }

    #[test]
    fn strict_mode_rejects_example_one_modulus() {
        assert!(matches!(
            seller_init(&ex1_config(true), 4, 0, &ex1_injected()),
            Err(ProtocolError::Knapsack(KnapsackError::TooSmall { modulus: 1987, sum: 1989 }))
        ));
    }

    #[test]
    fn minimal_params() {
        let p = seller_init(&AuctionConfig::new("m", vec![5]), 1, 3, &InjectedParams::default()).unwrap();
        assert_eq!(p.codes().len(), 1);
        assert_eq!(p.randomizers().entries(), &[0]);
        assert!(p.modulus().get() > p.codes().sum());
    }

    #[test]
    fn assignment_and_offer() {
        let mut p = seller_init(&ex1_config(false), 4, 0, &ex1_injected()).unwrap();
        let ids: Vec<String> = ["B1", "B2", "B3", "B4"].map(String::from).into();
        p.assign(&ids, &mut Seeded::new(0)).unwrap();
        assert_eq!(p.randomizer_for("B3"), Some(300));
        assert_eq!(p.randomized("B1", 1).unwrap().0, 905);
        assert_eq!(p.randomized("B4", 6).unwrap().0, 207);
        let offer = p.offer_for("B3", 1).unwrap();
        assert_eq!(offer.payload(8).unwrap(), &800u64.to_be_bytes());

        p.assign(&ids[..3], &mut Seeded::new(0)).unwrap();
        assert_eq!(p.randomizers().len(), 3);
        assert_eq!(p.randomizers().entries().iter().sum::<u64>() % 1987, 0);
        assert!(p.randomizer_for("B4").is_none());
        assert!(matches!(p.assign(&[], &mut Seeded::new(0)), Err(ProtocolError::AuctionVoid)));
    }

    #[test]
    fn injected_counts_must_match() {
        let mut inj = ex1_injected();
        assert!(seller_init(&ex1_config(false), 3, 0, &inj).is_err());
        inj.codes = Some(vec![1, 2, 4]);
        assert!(seller_init(&ex1_config(false), 4, 0, &inj).is_err());
    }
}
