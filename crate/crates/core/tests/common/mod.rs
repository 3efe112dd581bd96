#![allow(dead_code)]

use knapsack_auction::knapsack::FlagVector;
use knapsack_auction::net::TraceEvent;
use knapsack_auction::protocol::{AuctionConfig, Body, BidderSpec, Message, Note, RunSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random auction: distinct bids, `min_n <= n <= 8`, `n < k <= 12`.
pub struct RandomAuction {
    pub spec: RunSpec,
    /// 1-based price positions, one per bidder.
    pub choices: Vec<usize>,
}

pub fn random_auction(seed: u64, min_n: usize) -> RandomAuction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(min_n + 1..=12);
    let n = rng.gen_range(min_n..=(k - 1).min(8));
    let prices: Vec<u64> = (1..=k as u64).map(|i| i * 10).collect();
    let mut positions: Vec<usize> = (1..=k).collect();
    positions.shuffle(&mut rng);
    positions.truncate(n);
    let bidders = positions
        .iter()
        .enumerate()
        .map(|(i, &p)| BidderSpec {
            bid_time_ms: rng.gen_range(0..50),
            ..BidderSpec::new(format!("B{}", i + 1), prices[p - 1])
        })
        .collect();
    let mut spec = RunSpec::new(AuctionConfig::new(format!("rand-{seed}"), prices), bidders, seed);
    spec.network.default_latency_ms = rng.gen_range(0..4);
    RandomAuction {
        spec,
        choices: positions,
    }
}

/// What a trusted party that simply saw every bid would announce.
pub fn plaintext_oracle(spec: &RunSpec) -> (FlagVector, u64, Vec<u64>) {
    let prices = &spec.config.prices;
    let positions = spec
        .bidders
        .iter()
        .map(|b| prices.iter().position(|&p| p == b.price).unwrap() + 1);
    let flags = FlagVector::indicator(prices.len(), positions);
    let mut ranked: Vec<u64> = spec.bidders.iter().map(|b| b.price).collect();
    ranked.sort_unstable_by(|a, b| b.cmp(a));
    (flags, ranked[0], ranked)
}

pub fn notes(events: &[TraceEvent]) -> Vec<Note> {
    events.iter().filter(|e| e.is_local()).filter_map(|e| e.parse()).collect()
}

pub fn messages(events: &[TraceEvent]) -> Vec<(String, String, Message)> {
    events
        .iter()
        .filter(|e| !e.is_local())
        .filter_map(|e| e.parse::<Message>().map(|m| (e.sender.clone(), e.receiver.clone(), m)))
        .collect()
}

/// σ values submitted in the last sharing round, by sender.
pub fn submitted_sigmas(events: &[TraceEvent]) -> Vec<(String, u64)> {
    let msgs = messages(events);
    let last = msgs
        .iter()
        .filter_map(|(_, _, m)| match m.body {
            Body::SigmaSubmit { round, .. } => Some(round),
            _ => None,
        })
        .max();
    msgs.into_iter()
        .filter_map(|(_, _, m)| match m.body {
            Body::SigmaSubmit { from, round, sigma } if Some(round) == last => Some((from, sigma)),
            _ => None,
        })
        .collect()
}
