use std::collections::{BTreeMap, BTreeSet};

use ed25519_dalek::SigningKey;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{
    session_id, sign_registration, submit_bid, AuctionConfig, BidContext, Body, DisqualifyPhase,
    Message, Money, Note, Outbox, Phase, Salt, IDEAL_OT_PARTY, SELLER,
};
use crate::knapsack::Modulus;
use crate::net::Context;
use crate::ot::{decode_residue, Backend, OtChoice, OtReceiver};
use crate::rng::Seeded;
use crate::sharing::{aggregate_column, check_shares, split_shares, RandomizedCode};
use crate::timesync::PartyClock;

const BID: u64 = 1;
const SHARE_DEADLINE: u64 = 1 << 32;

/// Scripted misbehaviour for exercising the recovery paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "fault", rename_all = "snake_case")]
pub enum BidderFault {
    /// Withdraws instead of bidding.
    WithdrawBeforeBid,
    /// Sends an unusable transfer request.
    AbortTransfer,
    /// Obtains its code but never sends shares or a sigma.
    WithholdShares,
    /// Claims the win with the given value whatever the result.
    Impostor { revealed_code: u64 },
}

#[derive(Debug, Clone)]
pub struct BidderSetup {
    pub id: String,
    pub price: Money,
    /// Prices to fall back on after losing a tie, in order.
    pub alternates: Vec<Money>,
    pub bid_time_ms: u64,
    pub clock: PartyClock,
    pub key: SigningKey,
    pub address: String,
    pub seed: u64,
    pub dummy: bool,
    /// Fixed first-round shares in roster order.
    pub pinned_shares: Option<Vec<u64>>,
    pub fault: Option<BidderFault>,
}

/// A bidder's state machine.
pub struct Bidder {
    config: AuctionConfig,
    setup: BidderSetup,
    outbox: Outbox,
    phase: Phase,
    out: bool,
    prices: Vec<Money>,
    q: Option<Modulus>,
    admitted: bool,
    peers: Vec<String>,
    salt_parts: BTreeMap<String, Salt>,
    salt: Option<Salt>,
    bid_scheduled: bool,
    price: Money,
    receiver: Option<OtReceiver>,
    code: Option<RandomizedCode>,
    round: u32,
    shares_sent: bool,
    pinned_used: bool,
    inbox: BTreeMap<u32, BTreeMap<String, u64>>,
    sigma_sent: BTreeSet<u32>,
    confirmed: Option<bool>,
}

impl Bidder {
    pub fn new(config: AuctionConfig, setup: BidderSetup) -> Self {
        Self {
            outbox: Outbox::new(config.auction_id.clone()),
            config,
            price: setup.price,
            setup,
            phase: Phase::Registration,
            out: false,
            prices: Vec::new(),
            q: None,
            admitted: false,
            peers: Vec::new(),
            salt_parts: BTreeMap::new(),
            salt: None,
            bid_scheduled: false,
            receiver: None,
            code: None,
            round: 0,
            shares_sent: false,
            pinned_used: false,
            inbox: BTreeMap::new(),
            sigma_sent: BTreeSet::new(),
            confirmed: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.setup.id
    }

    /// The price currently bid, after any tie retries.
    pub fn price(&self) -> Money {
        self.price
    }

    pub fn code(&self) -> Option<RandomizedCode> {
        self.code
    }

    pub fn is_dummy(&self) -> bool {
        self.setup.dummy
    }

    pub fn disqualified(&self) -> bool {
        self.out
    }

    /// The seller's answer to this bidder's winner claim, if it made one.
    pub fn confirmed(&self) -> Option<bool> {
        self.confirmed
    }

    fn send(&mut self, ctx: &mut Context<Message>, to: &str, body: Body) {
        let m = self.outbox.wrap(body);
        ctx.send(to.to_owned(), m);
    }

    fn withdraw(&mut self, ctx: &mut Context<Message>, phase: DisqualifyPhase) {
        let body = Body::Disqualify {
            bidder_id: self.setup.id.clone(),
            phase,
        };
        self.send(ctx, SELLER, body);
        self.out = true;
    }

    fn violation(&self, ctx: &mut Context<Message>, from: &str, msg: &Message) {
        ctx.note(&Note::Violation {
            from: from.to_owned(),
            variant: msg.body.variant().to_owned(),
        });
    }

    fn position(&self, price: Money) -> Option<usize> {
        self.prices.iter().position(|&p| p == price).map(|i| i + 1)
    }

    fn salt_progress(&mut self, ctx: &mut Context<Message>) {
        if self.phase != Phase::Bidding || self.salt.is_some() {
            return;
        }
        if self.config.open_bids {
            self.salt = Some([0; 32]);
        } else if self.peers.iter().all(|p| self.salt_parts.contains_key(p)) {
            let parts: Vec<&Salt> = self.peers.iter().map(|p| &self.salt_parts[p]).collect();
            self.salt = Some(super::combine_salt(parts));
        } else {
            return;
        }
        if !self.bid_scheduled {
            self.bid_scheduled = true;
            ctx.timer_at(self.setup.bid_time_ms, BID);
        }
    }

    fn place_bid(&mut self, ctx: &mut Context<Message>) {
        let Some(salt) = self.salt else { return };
        let position = self.position(self.price).unwrap_or(0);
        let bid = BidContext {
            bidder_id: &self.setup.id,
            admitted: self.admitted,
            open_bids: self.config.open_bids,
            salt: &salt,
            prices: &self.prices,
        };
        match submit_bid(&bid, position, &self.setup.clock, ctx.now()) {
            Ok(tie_tag) => {
                ctx.note(&Note::BidPlaced {
                    bidder: self.setup.id.clone(),
                    price: self.price,
                    timestamp: tie_tag.timestamp,
                });
                self.send(ctx, SELLER, Body::TieTagSubmit { tie_tag });
            }
            Err(_) => self.withdraw(ctx, DisqualifyPhase::PreOt),
        }
    }

    fn start_transfer(&mut self, ctx: &mut Context<Message>, round: u32, bidders: &[String]) {
        self.phase = Phase::Transfer;
        self.round = round;
        self.code = None;
        self.receiver = None;
        let Some(slot) = bidders.iter().position(|b| *b == self.setup.id) else {
            return;
        };
        let sid = session_id(round, slot);
        let backend = self.config.ot_backend;
        let ot_peer = match backend {
            Backend::Ideal => IDEAL_OT_PARTY,
            Backend::Group => SELLER,
        };
        if self.setup.fault == Some(BidderFault::AbortTransfer) {
            let body = Body::OtRequest {
                session_id: sid,
                data: vec![0xde, 0xad],
            };
            return self.send(ctx, ot_peer, body);
        }
        let choice = OtChoice {
            session_id: sid,
            index: self.position(self.price).unwrap_or(0),
        };
        let mut receiver = match OtReceiver::new(backend, choice, self.prices.len(), self.setup.seed) {
            Ok(r) => r,
            Err(_) => return self.withdraw(ctx, DisqualifyPhase::Ot),
        };
        if backend == Backend::Ideal {
            match receiver.request(None) {
                Ok(req) => self.send(ctx, ot_peer, Body::from_ot(req)),
                Err(_) => return self.withdraw(ctx, DisqualifyPhase::Ot),
            }
        }
        self.receiver = Some(receiver);
    }

    fn start_sharing(&mut self, ctx: &mut Context<Message>, round: u32, bidders: Vec<String>) {
        self.phase = Phase::Sharing;
        self.round = round;
        self.peers = bidders;
        self.shares_sent = false;
        let (Some(code), Some(q)) = (self.code, self.q) else {
            return self.withdraw(ctx, DisqualifyPhase::Ot);
        };
        if self.setup.fault == Some(BidderFault::WithholdShares) {
            return;
        }
        let n = self.peers.len();
        let pinned = match &self.setup.pinned_shares {
            Some(row) if !self.pinned_used && row.len() == n && check_shares(row, code, q).is_ok() => {
                self.pinned_used = true;
                Some(row.clone())
            }
            _ => None,
        };
        let shares = match pinned {
            Some(row) => row,
            None => {
                let mut src = Seeded::derived(self.setup.seed, &format!("shares/{round}"));
                match split_shares(code, n, q, &mut src) {
                    Ok(s) => s,
                    Err(_) => return self.withdraw(ctx, DisqualifyPhase::Share),
                }
            }
        };
        let me = self.setup.id.clone();
        for (to, value) in self.peers.clone().into_iter().zip(shares) {
            if to == me {
                self.inbox.entry(round).or_default().insert(me.clone(), value);
            } else {
                let body = Body::Share {
                    from: me.clone(),
                    to: to.clone(),
                    round,
                    value,
                };
                self.send(ctx, &to, body);
            }
        }
        self.shares_sent = true;
        ctx.timer_after(self.config.phase_timeout_ms, SHARE_DEADLINE + u64::from(round));
        self.share_progress(ctx);
    }

    fn share_progress(&mut self, ctx: &mut Context<Message>) {
        let round = self.round;
        if self.phase != Phase::Sharing || !self.shares_sent || self.sigma_sent.contains(&round) {
            return;
        }
        let Some(q) = self.q else { return };
        let got = self.inbox.entry(round).or_default();
        if !self.peers.iter().all(|p| got.contains_key(p)) {
            return;
        }
        let column: Vec<u64> = self.peers.iter().map(|p| got[p]).collect();
        let Ok(sigma) = aggregate_column(&column, q) else {
            return self.withdraw(ctx, DisqualifyPhase::Share);
        };
        self.sigma_sent.insert(round);
        let body = Body::SigmaSubmit {
            from: self.setup.id.clone(),
            round,
            sigma,
        };
        self.send(ctx, SELLER, body);
    }

    pub fn on_message(&mut self, from: &str, msg: Message, ctx: &mut Context<Message>) {
        if self.out || msg.auction_id != self.config.auction_id {
            return;
        }
        let from_seller = from == SELLER;
        match (self.phase, msg.body.clone()) {
            (_, Body::Disqualify { bidder_id, .. }) if from_seller => {
                if bidder_id == self.setup.id {
                    self.out = true;
                    return;
                }
                self.peers.retain(|p| *p != bidder_id);
                self.salt_progress(ctx);
                self.share_progress(ctx);
            }
            (Phase::Registration, Body::Announce { prices, q, .. }) if from_seller => {
                self.prices = prices;
                self.q = Modulus::new(q).ok();
                let reg = sign_registration(
                    &self.setup.key,
                    &self.setup.id,
                    &self.setup.address,
                    &self.config.auction_id,
                );
                self.send(ctx, SELLER, Body::Register { registration: reg });
            }
            (Phase::Registration, Body::RegisterAck { bidder_id }) if from_seller => {
                self.admitted = bidder_id == self.setup.id;
            }
            (Phase::Registration, Body::PhaseStart { phase: Phase::Bidding, bidders, .. }) if from_seller => {
                self.phase = Phase::Bidding;
                self.peers = bidders;
                if self.setup.fault == Some(BidderFault::WithdrawBeforeBid) {
                    return self.withdraw(ctx, DisqualifyPhase::PreOt);
                }
                if !self.config.open_bids {
                    let mut part = [0u8; 32];
                    Seeded::derived(self.setup.seed, "salt").rng().fill_bytes(&mut part);
                    self.salt_parts.insert(self.setup.id.clone(), part);
                    let me = self.setup.id.clone();
                    for p in self.peers.clone().into_iter().filter(|p| *p != me) {
                        let body = Body::SaltShare {
                            from: me.clone(),
                            contribution: part.to_vec(),
                        };
                        self.send(ctx, &p, body);
                    }
                }
                self.salt_progress(ctx);
            }
            (Phase::Registration | Phase::Bidding, Body::SaltShare { from: who, contribution }) => {
                let Ok(part) = Salt::try_from(contribution.as_slice()) else {
                    return self.violation(ctx, from, &msg);
                };
                if who != from {
                    return self.violation(ctx, from, &msg);
                }
                self.salt_parts.insert(who, part);
                self.salt_progress(ctx);
            }
            (Phase::Bidding, Body::TieReject { bidder_id, retry_allowed }) if from_seller => {
                if bidder_id != self.setup.id || !retry_allowed {
                    return;
                }
                if self.setup.alternates.is_empty() {
                    return self.withdraw(ctx, DisqualifyPhase::PreOt);
                }
                self.price = self.setup.alternates.remove(0);
                self.place_bid(ctx);
            }
            (
                Phase::Bidding | Phase::Transfer | Phase::Sharing,
                Body::PhaseStart { phase: Phase::Transfer, round, bidders },
            ) if from_seller => self.start_transfer(ctx, round, &bidders),
            (Phase::Transfer, Body::OtSetup { session_id, data }) if from_seller => {
                let setup = Body::OtSetup { session_id, data }.as_ot().expect("ot body");
                let Some(receiver) = self.receiver.as_mut() else { return };
                if receiver.choice().session_id != session_id {
                    return;
                }
                match receiver.request(Some(&setup)) {
                    Ok(req) => self.send(ctx, SELLER, Body::from_ot(req)),
                    Err(_) => self.withdraw(ctx, DisqualifyPhase::Ot),
                }
            }
            (Phase::Transfer, Body::OtResponse { session_id, data })
                if from == IDEAL_OT_PARTY || from_seller =>
            {
                let resp = Body::OtResponse { session_id, data }.as_ot().expect("ot body");
                let Some(receiver) = self.receiver.as_mut() else { return };
                if receiver.choice().session_id != session_id {
                    return;
                }
                match receiver.finish(&resp).and_then(|b| decode_residue(&b)) {
                    Ok(value) => {
                        self.code = Some(RandomizedCode(value));
                        ctx.note(&Note::RandomizedCode {
                            bidder: self.setup.id.clone(),
                            round: self.round,
                            value,
                        });
                    }
                    Err(_) => self.withdraw(ctx, DisqualifyPhase::Ot),
                }
            }
            (
                Phase::Transfer | Phase::Sharing,
                Body::PhaseStart { phase: Phase::Sharing, round, bidders },
            ) if from_seller => self.start_sharing(ctx, round, bidders),
            (_, Body::Share { from: who, to, round, value }) if who == from && to == self.setup.id => {
                self.inbox.entry(round).or_default().insert(who, value);
                self.share_progress(ctx);
            }
            (Phase::Sharing, Body::Result { winning_price, .. }) if from_seller => {
                self.phase = Phase::Claim;
                let claim = match (&self.setup.fault, self.code) {
                    (Some(BidderFault::Impostor { revealed_code }), _) => Some(*revealed_code),
                    (_, Some(code)) if !self.setup.dummy && self.price == winning_price => Some(code.0),
                    _ => None,
                };
                if let Some(revealed_code) = claim {
                    let body = Body::WinnerClaim {
                        bidder_id: self.setup.id.clone(),
                        revealed_code,
                    };
                    self.send(ctx, SELLER, body);
                }
            }
            (Phase::Claim, Body::WinnerConfirm { accepted }) if from_seller => {
                self.confirmed = Some(accepted);
                self.phase = Phase::Done;
            }
            _ => self.violation(ctx, from, &msg),
        }
    }

    pub fn on_timer(&mut self, token: u64, ctx: &mut Context<Message>) {
        if self.out {
            return;
        }
        if token == BID {
            return self.place_bid(ctx);
        }
        let round = token.wrapping_sub(SHARE_DEADLINE);
        if token < SHARE_DEADLINE || round != u64::from(self.round) || self.phase != Phase::Sharing {
            return;
        }
        if self.sigma_sent.contains(&self.round) {
            return;
        }
        let got = self.inbox.entry(self.round).or_default();
        let missing: Vec<String> = self.peers.iter().filter(|p| !got.contains_key(*p)).cloned().collect();
        for culprit in missing {
            let body = Body::Disqualify {
                bidder_id: culprit,
                phase: DisqualifyPhase::Share,
            };
            self.send(ctx, SELLER, body);
        }
    }
}
