//! Declarative run descriptions, including the bundled reference runs.

use serde::{Deserialize, Serialize};

use crate::knapsack::Modulus;
use crate::net::NetPolicy;
use crate::protocol::{
    AuctionConfig, BidderFault, BidderSpec, InjectedParams, Money, ProtocolError, RunSpec,
    Transport,
};
use crate::sharing::{check_shares, randomize_code, RandomizedCode};
use crate::timesync::BidTimestamp;

/// Values that replace the seeded generators.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injected {
    #[serde(default)]
    pub codes: Option<Vec<u64>>,
    #[serde(default)]
    pub q: Option<u64>,
    #[serde(default)]
    pub randomizers: Option<Vec<u64>>,
    /// One row of shares per bidder, in bidder order.
    #[serde(default)]
    pub shares: Option<Vec<Vec<u64>>>,
    /// 1-based price positions; must agree with the bidders' prices.
    #[serde(default)]
    pub ot_choices: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBidder {
    pub id: String,
    pub price: Money,
    /// Decimal seconds, e.g. "2.826".
    #[serde(default)]
    pub bid_time: Option<BidTimestamp>,
    #[serde(default)]
    pub alternates: Vec<Money>,
    #[serde(default)]
    pub clock_skew_ms: i64,
    #[serde(default)]
    pub fault: Option<BidderFault>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub auction: AuctionConfig,
    #[serde(default)]
    pub injected: Option<Injected>,
    pub bidders: Vec<ScenarioBidder>,
    #[serde(default)]
    pub dummies: usize,
    #[serde(default)]
    pub network: Option<NetPolicy>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl From<ProtocolError> for ScenarioError {
    fn from(e: ProtocolError) -> Self {
        ScenarioError::Invalid(e.to_string())
    }
}

pub const BUNDLED: &[(&str, &str)] = &[
    ("example1", include_str!("../scenarios/example1.json")),
    ("example2", include_str!("../scenarios/example2.json")),
    ("table1", include_str!("../scenarios/table1.json")),
];

pub const TABLE1_CSV: &str = include_str!("../scenarios/table1.csv");

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

impl ScenarioConfig {
    /// Parses and validates; serde errors carry line and column.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |m: String| Err(ScenarioError::Invalid(m));
        self.auction.validate()?;
        if self.bidders.is_empty() {
            return invalid("no bidders".into());
        }
        let book = self.auction.book();
        for b in &self.bidders {
            if !self.auction.prices.contains(&b.price) {
                return invalid(format!("bidder {} bids {} which is not offered", b.id, b.price));
            }
        }
        let Some(inj) = &self.injected else { return Ok(()) };
        let n = self.bidders.len() + self.dummies;
        if let Some(choices) = &inj.ot_choices {
            let expected: Vec<usize> = self
                .bidders
                .iter()
                .filter_map(|b| book.position_of(b.price))
                .collect();
            if *choices != expected {
                return invalid(format!("ot_choices {choices:?} disagree with bid positions {expected:?}"));
            }
        }
        if let Some(r) = &inj.randomizers {
            if r.len() != n {
                return invalid(format!("{} randomizers for {} bidders", r.len(), n));
            }
        }
        if let Some(rows) = &inj.shares {
            if self.dummies > 0 {
                return invalid("injected shares cannot be combined with dummies".into());
            }
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return invalid(format!("shares must be a {n}x{n} matrix"));
            }
        }
        // full parameter check under the configured modulus rule
        let params = crate::protocol::seller_init(&self.auction, n, self.seed, &self.injected_params())?;
        if let (Some(rows), Some(_)) = (&inj.shares, &inj.randomizers) {
            let q = params.modulus();
            for ((b, row), &r) in self.bidders.iter().zip(rows).zip(params.randomizers().entries()) {
                let pos = book.position_of(b.price).expect("checked above");
                let c = params.codes().get(pos).expect("position in range");
                let cprime = randomize_code(c, r, q).map_err(ProtocolError::from)?;
                share_check(row, cprime, q, &b.id)?;
            }
        }
        Ok(())
    }

    pub fn injected_params(&self) -> InjectedParams {
        let inj = self.injected.clone().unwrap_or_default();
        InjectedParams {
            codes: inj.codes,
            q: inj.q,
            randomizers: inj.randomizers,
        }
    }

    pub fn to_run_spec(&self, transport: Transport) -> RunSpec {
        let rows = self.injected.as_ref().and_then(|i| i.shares.clone());
        let bidders = self
            .bidders
            .iter()
            .enumerate()
            .map(|(i, b)| BidderSpec {
                id: b.id.clone(),
                price: b.price,
                alternates: b.alternates.clone(),
                bid_time_ms: b.bid_time.map_or(0, |t| t.millis()),
                clock_skew_ms: b.clock_skew_ms,
                fault: b.fault.clone(),
                shares: rows.as_ref().map(|r| r[i].clone()),
            })
            .collect();
        RunSpec {
            config: self.auction.clone(),
            injected: self.injected_params(),
            bidders,
            dummies: self.dummies,
            network: self.network.clone().unwrap_or_default(),
            seed: self.seed,
            transport,
        }
    }
}

fn share_check(row: &[u64], cprime: RandomizedCode, q: Modulus, id: &str) -> Result<(), ScenarioError> {
    check_shares(row, cprime, q)
        .map_err(|e| ScenarioError::Invalid(format!("shares of {id} do not sum to {}: {e}", cprime.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_validate() {
        for (name, text) in BUNDLED {
            ScenarioConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let e = ScenarioConfig::parse("{\n  \"auction\": 3\n}").unwrap_err();
        assert!(matches!(e, ScenarioError::Parse(_)));
        assert!(e.to_string().contains("line 2"));
    }

    #[test]
    fn inconsistent_injection_is_invalid() {
        let mut s = ScenarioConfig::parse(bundled("example1").unwrap()).unwrap();
        s.injected.as_mut().unwrap().ot_choices = Some(vec![1, 2, 3, 4]);
        assert!(matches!(s.validate(), Err(ScenarioError::Invalid(_))));
        let mut s = ScenarioConfig::parse(bundled("example1").unwrap()).unwrap();
        s.injected.as_mut().unwrap().shares.as_mut().unwrap()[0][0] += 1;
        assert!(matches!(s.validate(), Err(ScenarioError::Invalid(_))));
        let mut s = ScenarioConfig::parse(bundled("example1").unwrap()).unwrap();
        s.auction.strict_modulus = true;
        assert!(s.validate().unwrap_err().to_string().contains("1989"));
        let mut s = ScenarioConfig::parse(bundled("example1").unwrap()).unwrap();
        s.bidders[0].price = 11;
        assert!(s.validate().is_err());
    }
}
