use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::ot::Backend;
use crate::rng::{Seeded, UniformSource};

pub type Money = u64;

fn yes() -> bool {
    true
}

fn one() -> u32 {
    1
}

fn default_timeout() -> u64 {
    10_000
}

fn default_code_bound() -> u64 {
    16
}

/// Public auction settings chosen by the seller.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuctionConfig {
    pub auction_id: String,
    /// Real prices, strictly ascending.
    pub prices: Vec<Money>,
    /// Plaintext tie tags instead of salted digests.
    #[serde(default)]
    pub open_bids: bool,
    #[serde(default = "yes")]
    pub strict_modulus: bool,
    #[serde(default = "one")]
    pub tie_retry_limit: u32,
    /// Number of sub-minimum prices reserved for dummy bidders.
    #[serde(default)]
    pub dummy_slots: usize,
    #[serde(default = "default_backend")]
    pub ot_backend: Backend,
    /// Recover from post-transfer disqualification by compensating the
    /// dropped randomizers instead of restarting the transfer.
    #[serde(default)]
    pub post_ot_correction: bool,
    #[serde(default = "default_timeout")]
    pub phase_timeout_ms: u64,
    #[serde(default = "default_code_bound")]
    pub code_first_max: u64,
    #[serde(default = "default_code_bound")]
    pub code_gap_max: u64,
}

fn default_backend() -> Backend {
    Backend::Ideal
}

impl AuctionConfig {
    pub fn new(auction_id: impl Into<String>, prices: Vec<Money>) -> Self {
        Self {
            auction_id: auction_id.into(),
            prices,
            open_bids: false,
            strict_modulus: true,
            tie_retry_limit: 1,
            dummy_slots: 0,
            ot_backend: Backend::Ideal,
            post_ot_correction: false,
            phase_timeout_ms: default_timeout(),
            code_first_max: default_code_bound(),
            code_gap_max: default_code_bound(),
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::InvalidConfig(m));
        if self.prices.is_empty() {
            return bad("price list is empty".into());
        }
        if self.prices[0] == 0 {
            return bad("prices must be positive".into());
        }
        if let Some(w) = self.prices.windows(2).find(|w| w[0] >= w[1]) {
            return bad(format!("prices not strictly ascending at {} -> {}", w[0], w[1]));
        }
        if self.dummy_slots > 0 && self.prices[0] <= self.dummy_slots as Money {
            return bad(format!(
                "{} dummy slots do not fit below the minimum price {}",
                self.dummy_slots, self.prices[0]
            ));
        }
        if self.phase_timeout_ms == 0 {
            return bad("phase timeout must be positive".into());
        }
        Ok(())
    }

    pub fn book(&self) -> PriceBook {
        let lowest = self.prices[0];
        let d = self.dummy_slots as Money;
        PriceBook {
            dummy: (lowest - d..lowest).collect(),
            real: self.prices.clone(),
        }
    }
}

/// The full announced price list: dummy prices first, then real ones.
/// Positions are 1-based and index the code set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceBook {
    pub dummy: Vec<Money>,
    pub real: Vec<Money>,
}

impl PriceBook {
    pub fn len(&self) -> usize {
        self.dummy.len() + self.real.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all(&self) -> Vec<Money> {
        self.dummy.iter().chain(&self.real).copied().collect()
    }

    pub fn price_at(&self, position: usize) -> Option<Money> {
        let i = position.checked_sub(1)?;
        if i < self.dummy.len() {
            Some(self.dummy[i])
        } else {
            self.real.get(i - self.dummy.len()).copied()
        }
    }

    pub fn position_of(&self, price: Money) -> Option<usize> {
        self.dummy
            .iter()
            .chain(&self.real)
            .position(|&p| p == price)
            .map(|i| i + 1)
    }

    pub fn is_dummy(&self, position: usize) -> bool {
        (1..=self.dummy.len()).contains(&position)
    }
}

/// A synthetic participant bidding on a dummy price.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DummyBidder {
    pub id: String,
    pub price: Money,
}

/// Places `count` dummy bidders on distinct dummy slots chosen by `seed`.
pub fn inject_dummies(
    config: &AuctionConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<DummyBidder>, ProtocolError> {
    if count > config.dummy_slots {
        return Err(ProtocolError::InsufficientDummySlots {
            requested: count,
            available: config.dummy_slots,
        });
    }
    let mut slots = config.book().dummy;
    let mut src = Seeded::derived(seed, "dummies");
    // partial Fisher-Yates
    for i in 0..count {
        let j = i + src.below((slots.len() - i) as u64) as usize;
        slots.swap(i, j);
    }
    Ok(slots
        .into_iter()
        .take(count)
        .enumerate()
        .map(|(i, price)| DummyBidder {
            id: format!("D{}", i + 1),
            price,
        })
        .collect())
}
