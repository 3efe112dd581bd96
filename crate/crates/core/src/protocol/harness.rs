//! Wires a seller, its bidders and (for the ideal backend) the transfer
//! functionality onto a network and runs the auction to completion.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    bidder_key, inject_dummies, seller_init, AuctionConfig, Bidder, BidderFault, BidderSetup,
    DisqualifyPhase, Failure, IdealOt, InjectedParams, KeyDirectory, Message, Money, Outcome, Phase,
    ProtocolError, Seller, SellerSetup, IDEAL_OT_PARTY, SELLER, SELLER_START,
};
use crate::net::{Context, LoopbackCourier, NetPolicy, Node, PartyId, SimNet, Trace};
use crate::ot::Backend;
use crate::rng::derive_seed;
use crate::timesync::PartyClock;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transport {
    #[default]
    Sim,
    Stream,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BidderSpec {
    pub id: String,
    pub price: Money,
    #[serde(default)]
    pub alternates: Vec<Money>,
    #[serde(default)]
    pub bid_time_ms: u64,
    #[serde(default)]
    pub clock_skew_ms: i64,
    #[serde(default)]
    pub fault: Option<BidderFault>,
    /// Fixed first-round shares, one per roster member.
    #[serde(default)]
    pub shares: Option<Vec<u64>>,
}

impl BidderSpec {
    pub fn new(id: impl Into<String>, price: Money) -> Self {
        Self {
            id: id.into(),
            price,
            alternates: Vec::new(),
            bid_time_ms: 0,
            clock_skew_ms: 0,
            fault: None,
            shares: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub config: AuctionConfig,
    pub injected: InjectedParams,
    pub bidders: Vec<BidderSpec>,
    pub dummies: usize,
    pub network: NetPolicy,
    pub seed: u64,
    pub transport: Transport,
}

impl RunSpec {
    pub fn new(config: AuctionConfig, bidders: Vec<BidderSpec>, seed: u64) -> Self {
        Self {
            config,
            injected: InjectedParams::default(),
            bidders,
            dummies: 0,
            network: NetPolicy::default(),
            seed,
            transport: Transport::Sim,
        }
    }
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub result: Result<Outcome, Failure>,
    pub trace: Trace,
    /// Bidders still in the auction at the end, in roster order.
    pub roster: Vec<String>,
    pub disqualified: Vec<(String, DisqualifyPhase)>,
    /// Randomized code each surviving bidder holds.
    pub codes: Vec<(String, u64)>,
    pub sigmas: Vec<u64>,
    pub subset_sum: Option<u64>,
    pub final_round: u32,
    pub phase_times: BTreeMap<Phase, u64>,
    /// Dummy bidder ids and their prices.
    pub dummies: Vec<(String, Money)>,
    /// Final price per bidder, after tie retries.
    pub bids: BTreeMap<String, Money>,
}

/// Any participant on the auction network.
pub enum Party {
    Seller(Box<Seller>),
    Bidder(Box<Bidder>),
    IdealOt(IdealOt),
}

impl Node<Message> for Party {
    fn on_message(&mut self, from: &str, msg: Message, ctx: &mut Context<Message>) {
        match self {
            Party::Seller(s) => s.on_message(from, msg, ctx),
            Party::Bidder(b) => b.on_message(from, msg, ctx),
            Party::IdealOt(f) => f.on_message(from, msg, ctx),
        }
    }

    fn on_timer(&mut self, token: u64, ctx: &mut Context<Message>) {
        match self {
            Party::Seller(s) => s.on_timer(token, ctx),
            Party::Bidder(b) => b.on_timer(token, ctx),
            Party::IdealOt(_) => {}
        }
    }
}

pub fn run_auction(spec: &RunSpec) -> Result<RunReport, ProtocolError> {
    let config = &spec.config;
    config.validate()?;
    let mut seen = BTreeSet::new();
    for b in &spec.bidders {
        if b.id == SELLER || b.id == IDEAL_OT_PARTY || !seen.insert(b.id.clone()) {
            return Err(ProtocolError::DuplicateBidder(b.id.clone()));
        }
        for p in std::iter::once(&b.price).chain(&b.alternates) {
            if !config.prices.contains(p) {
                return Err(ProtocolError::InvalidConfig(format!(
                    "bidder {} bids {} which is not an offered price",
                    b.id, p
                )));
            }
        }
    }
    let dummies = inject_dummies(config, spec.dummies, spec.seed)?;
    for d in &dummies {
        if seen.contains(&d.id) {
            return Err(ProtocolError::DuplicateBidder(d.id.clone()));
        }
    }

    let mut setups: Vec<BidderSetup> = spec
        .bidders
        .iter()
        .map(|b| BidderSetup {
            id: b.id.clone(),
            price: b.price,
            alternates: b.alternates.clone(),
            bid_time_ms: b.bid_time_ms,
            clock: PartyClock::new(b.clock_skew_ms),
            key: bidder_key(spec.seed, &b.id),
            address: format!("sim://{}", b.id),
            seed: derive_seed(spec.seed, &format!("bidder/{}", b.id)),
            dummy: false,
            pinned_shares: b.shares.clone(),
            fault: b.fault.clone(),
        })
        .collect();
    setups.extend(dummies.iter().map(|d| BidderSetup {
        id: d.id.clone(),
        price: d.price,
        alternates: Vec::new(),
        bid_time_ms: 0,
        clock: PartyClock::new(0),
        key: bidder_key(spec.seed, &d.id),
        address: format!("sim://{}", d.id),
        seed: derive_seed(spec.seed, &format!("bidder/{}", d.id)),
        dummy: true,
        pinned_shares: None,
        fault: None,
    }));

    let mut keys = KeyDirectory::default();
    for s in &setups {
        keys.insert(s.id.clone(), s.key.verifying_key());
    }
    let invited: Vec<String> = setups.iter().map(|s| s.id.clone()).collect();
    let params = seller_init(config, invited.len(), derive_seed(spec.seed, "seller"), &spec.injected)?;
    let seller = Seller::new(
        config.clone(),
        params,
        SellerSetup {
            keys,
            invited: invited.clone(),
            dummy_ids: dummies.iter().map(|d| d.id.clone()).collect(),
            seed: derive_seed(spec.seed, "seller"),
        },
    );

    let mut nodes: BTreeMap<PartyId, Party> = BTreeMap::new();
    nodes.insert(SELLER.to_owned(), Party::Seller(Box::new(seller)));
    if config.ot_backend == Backend::Ideal {
        nodes.insert(
            IDEAL_OT_PARTY.to_owned(),
            Party::IdealOt(IdealOt::new(&config.auction_id, SELLER)),
        );
    }
    for s in setups {
        nodes.insert(s.id.clone(), Party::Bidder(Box::new(Bidder::new(config.clone(), s))));
    }

    let mut net = SimNet::new(spec.network.clone());
    for id in nodes.keys() {
        net.register(id.clone());
    }
    if spec.transport == Transport::Stream {
        let courier = LoopbackCourier::<Message>::bind(nodes.keys().cloned())?;
        net = net.with_courier(Box::new(courier));
    }
    net.schedule_timer(SELLER, 0, SELLER_START)?;
    net.run_until_idle(&mut nodes)?;
    let trace = net.into_trace();

    let Some(Party::Seller(seller)) = nodes.get(SELLER) else {
        unreachable!("the seller is always registered")
    };
    let result = seller.result().cloned().unwrap_or_else(|| {
        Err(Failure::Void {
            reason: format!("run stalled in {:?}", seller.phase()),
        })
    });
    let roster = seller.roster().to_vec();
    let mut codes = Vec::new();
    let mut bids = BTreeMap::new();
    for id in &invited {
        if let Some(Party::Bidder(b)) = nodes.get(id) {
            bids.insert(id.clone(), b.price());
            if roster.contains(id) {
                if let Some(c) = b.code() {
                    codes.push((id.clone(), c.0));
                }
            }
        }
    }
    Ok(RunReport {
        result,
        trace,
        disqualified: seller.disqualified().to_vec(),
        codes,
        sigmas: seller.sigmas(),
        subset_sum: seller.subset_sum(),
        final_round: seller.round(),
        phase_times: seller.phase_times().clone(),
        dummies: dummies.iter().map(|d| (d.id.clone(), d.price)).collect(),
        bids,
        roster,
    })
}
