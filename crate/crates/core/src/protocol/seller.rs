use std::collections::{BTreeMap, BTreeSet};

use super::{
    apply_randomizer_correction, close_registration, detect_and_resolve_ties,
    handle_disqualification, session_id, solve_and_announce, verify_winner, AuctionConfig,
    AuctionParams, Body, DisqualifyPhase, Failure, KeyDirectory, Message, Note, Outbox, Outcome,
    Phase, RecoveryAction, Registration, TieTag, WinnerClaim, IDEAL_OT_PARTY,
};
use crate::net::Context;
use crate::ot::{Backend, OtSender};
use crate::rng::{derive_seed, Seeded};
use crate::sharing::combine_sigmas;

pub const SELLER: &str = "seller";

/// Timer token that opens the auction.
pub const SELLER_START: u64 = u64::MAX;

/// Who the seller expects and how it seeds its own randomness.
#[derive(Debug, Clone, Default)]
pub struct SellerSetup {
    pub keys: KeyDirectory,
    /// Invitees in roster order.
    pub invited: Vec<String>,
    pub dummy_ids: BTreeSet<String>,
    pub seed: u64,
}

/// The seller's state machine. It owns the auction parameters, so a set of
/// randomizers is consumed by one run.
pub struct Seller {
    config: AuctionConfig,
    params: AuctionParams,
    setup: SellerSetup,
    outbox: Outbox,
    phase: Phase,
    round: u32,
    epoch: u64,
    transfers: u32,
    registrations: Vec<Registration>,
    roster: Vec<String>,
    awaiting: BTreeSet<String>,
    tags: BTreeMap<String, TieTag>,
    retries_used: BTreeMap<String, u32>,
    senders: BTreeMap<u64, (String, OtSender)>,
    transferred: BTreeSet<String>,
    correction: Vec<u64>,
    sigmas: BTreeMap<String, u64>,
    subset_sum: Option<u64>,
    outcome: Option<Outcome>,
    result: Option<Result<Outcome, Failure>>,
    disqualified: Vec<(String, DisqualifyPhase)>,
    phase_times: BTreeMap<Phase, u64>,
}

impl Seller {
    pub fn new(config: AuctionConfig, params: AuctionParams, setup: SellerSetup) -> Self {
        Self {
            outbox: Outbox::new(config.auction_id.clone()),
            config,
            params,
            setup,
            phase: Phase::Registration,
            round: 0,
            epoch: 0,
            transfers: 0,
            registrations: Vec::new(),
            roster: Vec::new(),
            awaiting: BTreeSet::new(),
            tags: BTreeMap::new(),
            retries_used: BTreeMap::new(),
            senders: BTreeMap::new(),
            transferred: BTreeSet::new(),
            correction: Vec::new(),
            sigmas: BTreeMap::new(),
            subset_sum: None,
            outcome: None,
            result: None,
            disqualified: Vec::new(),
            phase_times: BTreeMap::new(),
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn params(&self) -> &AuctionParams {
        &self.params
    }

    pub fn roster(&self) -> &[String] {
        &self.roster
    }

    /// Round of the final share exchange.
    pub fn round(&self) -> u32 {
        self.round
    }

    /// σ values of the last complete round, in roster order.
    pub fn sigmas(&self) -> Vec<u64> {
        self.roster.iter().filter_map(|b| self.sigmas.get(b).copied()).collect()
    }

    pub fn subset_sum(&self) -> Option<u64> {
        self.subset_sum
    }

    pub fn disqualified(&self) -> &[(String, DisqualifyPhase)] {
        &self.disqualified
    }

    /// Logical time each phase was first entered.
    pub fn phase_times(&self) -> &BTreeMap<Phase, u64> {
        &self.phase_times
    }

    /// `None` until the run has finished.
    pub fn result(&self) -> Option<&Result<Outcome, Failure>> {
        self.result.as_ref()
    }

    fn send(&mut self, ctx: &mut Context<Message>, to: &str, body: Body) {
        let m = self.outbox.wrap(body);
        ctx.send(to.to_owned(), m);
    }

    fn broadcast(&mut self, ctx: &mut Context<Message>, body: Body) {
        for b in self.roster.clone() {
            self.send(ctx, &b, body.clone());
        }
    }

    fn enter(&mut self, ctx: &mut Context<Message>, phase: Phase, timeout: u64) {
        self.phase = phase;
        self.epoch += 1;
        self.phase_times.entry(phase).or_insert(ctx.now());
        ctx.note(&Note::PhaseEntered {
            phase,
            round: self.round,
        });
        ctx.timer_after(timeout, self.epoch);
    }

    fn finish(&mut self, ctx: &mut Context<Message>, failure: Failure) {
        ctx.note(&Note::Verdict {
            failure: failure.clone(),
        });
        self.result = Some(Err(failure));
        self.phase = Phase::Done;
        self.phase_times.entry(Phase::Done).or_insert(ctx.now());
    }

    fn void(&mut self, ctx: &mut Context<Message>, reason: impl Into<String>) {
        self.finish(ctx, Failure::Void { reason: reason.into() });
    }

    fn start(&mut self, ctx: &mut Context<Message>) {
        self.enter(ctx, Phase::Registration, self.config.phase_timeout_ms);
        let body = Body::Announce {
            prices: self.params.book().all(),
            dummy_slots: self.config.dummy_slots,
            q: self.params.modulus().get(),
        };
        for b in self.setup.invited.clone() {
            self.send(ctx, &b, body.clone());
        }
    }

    fn close_registration(&mut self, ctx: &mut Context<Message>) {
        let order = |id: &str| self.setup.invited.iter().position(|b| b == id);
        let mut regs = std::mem::take(&mut self.registrations);
        regs.sort_by_key(|r| order(&r.bidder_id));
        // bad signatures are dropped individually rather than voiding the phase
        let mut valid = Vec::new();
        for r in regs {
            match self.setup.keys.verify(&r) {
                Ok(()) => valid.push(r),
                Err(e) => {
                    ctx.note(&Note::Disqualified {
                        bidder: r.bidder_id.clone(),
                        phase: DisqualifyPhase::PreOt,
                        reason: e.to_string(),
                    });
                    self.disqualified.push((r.bidder_id, DisqualifyPhase::PreOt));
                }
            }
        }
        match close_registration(&valid, &self.config, &self.setup.keys, &self.setup.dummy_ids) {
            Err(e) => self.void(ctx, e.to_string()),
            Ok(admitted) if admitted.is_empty() => self.void(ctx, "nobody registered"),
            Ok(admitted) => {
                self.roster = admitted;
                for b in self.roster.clone() {
                    self.send(ctx, &b, Body::RegisterAck { bidder_id: b.clone() });
                }
                self.begin_bidding(ctx);
            }
        }
    }

    fn begin_bidding(&mut self, ctx: &mut Context<Message>) {
        self.enter(ctx, Phase::Bidding, self.config.phase_timeout_ms);
        self.awaiting = self.roster.iter().cloned().collect();
        let body = Body::PhaseStart {
            phase: Phase::Bidding,
            round: 0,
            bidders: self.roster.clone(),
        };
        self.broadcast(ctx, body);
    }

    fn resolve_ties(&mut self, ctx: &mut Context<Message>) {
        let tags: Vec<TieTag> = self.tags.values().cloned().collect();
        let res = detect_and_resolve_ties(&tags, self.config.tie_retry_limit, &self.retries_used);
        ctx.note(&Note::TieResolved {
            accepted: res.accepted.iter().map(|t| t.bidder_id.clone()).collect(),
            rejected: res.rejected.iter().map(|r| r.tag.bidder_id.clone()).collect(),
        });
        let mut out = Vec::new();
        for r in res.rejected {
            let id = r.tag.bidder_id;
            self.tags.remove(&id);
            self.send(
                ctx,
                &id,
                Body::TieReject {
                    bidder_id: id.clone(),
                    retry_allowed: r.retry_allowed,
                },
            );
            if r.retry_allowed {
                *self.retries_used.entry(id.clone()).or_default() += 1;
                self.awaiting.insert(id);
            } else {
                out.push(id);
            }
        }
        self.drop_bidders(ctx, &out, "lost a tie with no retries left");
    }

    fn bidding_progress(&mut self, ctx: &mut Context<Message>) {
        if self.phase == Phase::Bidding && self.awaiting.is_empty() {
            self.resolve_ties(ctx);
            if self.phase == Phase::Bidding && self.awaiting.is_empty() {
                self.begin_transfer(ctx, false);
            }
        }
    }

    fn begin_transfer(&mut self, ctx: &mut Context<Message>, fresh: bool) {
        if self.transfers > 0 {
            self.round += 1;
        }
        self.transfers += 1;
        let mut src = Seeded::derived(self.setup.seed, &format!("randomizers/{}", self.round));
        let assigned = if fresh {
            self.params.refresh(&self.roster, &mut src)
        } else {
            self.params.assign(&self.roster, &mut src)
        };
        if let Err(e) = assigned {
            return self.void(ctx, e.to_string());
        }
        self.enter(ctx, Phase::Transfer, self.config.phase_timeout_ms);
        self.transferred.clear();
        self.senders.clear();
        let body = Body::PhaseStart {
            phase: Phase::Transfer,
            round: self.round,
            bidders: self.roster.clone(),
        };
        self.broadcast(ctx, body);
        let backend = self.config.ot_backend;
        for (slot, bidder) in self.roster.clone().into_iter().enumerate() {
            let sid = session_id(self.round, slot);
            let setup = self.params.offer_for(&bidder, sid).and_then(|offer| {
                let mut sender = OtSender::new(backend, offer, derive_seed(self.setup.seed, "ot"));
                Ok((sender.setup()?, sender))
            });
            let (setup, sender) = match setup {
                Ok(x) => x,
                Err(e) => return self.void(ctx, e.to_string()),
            };
            let to = match backend {
                Backend::Ideal => IDEAL_OT_PARTY.to_owned(),
                Backend::Group => bidder.clone(),
            };
            self.send(ctx, &to, Body::from_ot(setup));
            self.senders.insert(sid, (bidder, sender));
        }
    }

    fn transfer_done(&mut self, ctx: &mut Context<Message>, bidder: String) {
        self.transferred.insert(bidder);
        if self.roster.iter().all(|b| self.transferred.contains(b)) {
            self.begin_sharing(ctx);
        }
    }

    fn begin_sharing(&mut self, ctx: &mut Context<Message>) {
        self.enter(ctx, Phase::Sharing, 2 * self.config.phase_timeout_ms);
        self.sigmas.clear();
        let body = Body::PhaseStart {
            phase: Phase::Sharing,
            round: self.round,
            bidders: self.roster.clone(),
        };
        self.broadcast(ctx, body);
    }

    fn solve(&mut self, ctx: &mut Context<Message>) {
        let sigmas = self.sigmas();
        let q = self.params.modulus();
        if let Ok(partial) = combine_sigmas(&sigmas, q) {
            let value = apply_randomizer_correction(partial, &self.correction, q);
            self.subset_sum = Some(value);
            ctx.note(&Note::SubsetSum {
                round: self.round,
                value,
            });
        }
        match solve_and_announce(&self.params, &sigmas, &self.correction) {
            Ok(outcome) => {
                ctx.note(&Note::Announced {
                    flags: outcome.flags.clone(),
                    winning_price: outcome.winning_price,
                });
                let body = Body::Result {
                    flags: outcome.flags.clone(),
                    winning_price: outcome.winning_price,
                    ranked_prices: outcome.ranked_prices.clone(),
                };
                self.outcome = Some(outcome);
                self.enter(ctx, Phase::Claim, self.config.phase_timeout_ms);
                self.broadcast(ctx, body);
            }
            Err(f) => self.finish(ctx, f),
        }
    }

    fn check_claim(&mut self, ctx: &mut Context<Message>, from: &str, claim: WinnerClaim) {
        let Some(outcome) = self.outcome.clone() else { return };
        let accepted = claim.bidder_id == from
            && verify_winner(&claim, &self.params, outcome.winning_price).is_ok();
        ctx.note(&Note::ClaimChecked {
            bidder: from.to_owned(),
            revealed_code: claim.revealed_code,
            accepted,
        });
        self.send(ctx, from, Body::WinnerConfirm { accepted });
        if accepted && self.result.is_none() {
            let mut done = outcome;
            done.winner_id = Some(from.to_owned());
            self.result = Some(Ok(done));
            self.phase = Phase::Done;
            self.phase_times.entry(Phase::Done).or_insert(ctx.now());
        }
    }

    fn current_dq_phase(&self) -> DisqualifyPhase {
        match self.phase {
            Phase::Registration | Phase::Bidding => DisqualifyPhase::PreOt,
            Phase::Transfer => DisqualifyPhase::Ot,
            _ => DisqualifyPhase::Share,
        }
    }

    /// Removes bidders and applies the recovery for the current phase.
    fn drop_bidders(&mut self, ctx: &mut Context<Message>, ids: &[String], reason: &str) {
        let ids: Vec<String> = ids.iter().filter(|b| self.roster.contains(b)).cloned().collect();
        if ids.is_empty() {
            return;
        }
        let phase = self.current_dq_phase();
        let mut restart = false;
        let mut reshare = false;
        for id in &ids {
            let action = match handle_disqualification(
                &self.roster,
                &self.params,
                id,
                phase,
                self.config.post_ot_correction,
            ) {
                Ok(a) => a,
                Err(e) => return self.void(ctx, e.to_string()),
            };
            ctx.note(&Note::Disqualified {
                bidder: id.clone(),
                phase,
                reason: reason.to_owned(),
            });
            self.disqualified.push((id.clone(), phase));
            let body = Body::Disqualify {
                bidder_id: id.clone(),
                phase,
            };
            self.broadcast(ctx, body);
            self.roster.retain(|b| b != id);
            self.awaiting.remove(id);
            self.tags.remove(id);
            match action {
                RecoveryAction::Void => return self.void(ctx, "every bidder was disqualified"),
                RecoveryAction::Continue { .. } => {}
                RecoveryAction::RestartTransfer { .. } => restart = true,
                RecoveryAction::Compensate { randomizer, .. } => self.correction.push(randomizer),
                RecoveryAction::Reshare { randomizer, .. } => {
                    self.correction.push(randomizer);
                    reshare = true;
                }
            }
        }
        match self.phase {
            Phase::Transfer if restart => {
                self.correction.clear();
                self.begin_transfer(ctx, true);
            }
            Phase::Transfer => {
                if self.roster.iter().all(|b| self.transferred.contains(b)) {
                    self.begin_sharing(ctx);
                }
            }
            Phase::Sharing if reshare => {
                self.round += 1;
                self.begin_sharing(ctx);
            }
            _ => {}
        }
    }

    fn violation(&mut self, ctx: &mut Context<Message>, from: &str, msg: &Message) {
        ctx.note(&Note::Violation {
            from: from.to_owned(),
            variant: msg.body.variant().to_owned(),
        });
        if self.roster.iter().any(|b| b == from) && self.phase < Phase::Claim {
            self.drop_bidders(ctx, &[from.to_owned()], "protocol violation");
        }
    }

    pub fn on_message(&mut self, from: &str, msg: Message, ctx: &mut Context<Message>) {
        if msg.auction_id != self.config.auction_id {
            return self.violation(ctx, from, &msg);
        }
        let in_roster = self.roster.iter().any(|b| b == from);
        match (&self.phase, msg.body.clone()) {
            (Phase::Registration, Body::Register { registration }) => {
                let invited = self.setup.invited.iter().any(|b| b == from);
                if !invited || registration.bidder_id != from {
                    return self.violation(ctx, from, &msg);
                }
                if self.registrations.iter().any(|r| r.bidder_id == from) {
                    return;
                }
                self.registrations.push(registration);
                if self.registrations.len() == self.setup.invited.len() {
                    self.close_registration(ctx);
                }
            }
            (Phase::Bidding, Body::TieTagSubmit { tie_tag }) => {
                if !self.awaiting.contains(from) || tie_tag.bidder_id != from {
                    return self.violation(ctx, from, &msg);
                }
                self.awaiting.remove(from);
                self.tags.insert(from.to_owned(), tie_tag);
                self.bidding_progress(ctx);
            }
            (Phase::Transfer, Body::OtRequest { session_id, data }) if in_roster => {
                if self.config.ot_backend != Backend::Group {
                    return self.violation(ctx, from, &msg);
                }
                let Some((bidder, mut sender)) = self.senders.remove(&session_id) else {
                    return;
                };
                if bidder != from {
                    self.senders.insert(session_id, (bidder, sender));
                    return self.violation(ctx, from, &msg);
                }
                let req = Body::OtRequest { session_id, data }.as_ot().expect("ot body");
                match sender.respond(&req) {
                    Ok(resp) => {
                        self.send(ctx, from, Body::from_ot(resp));
                        self.transfer_done(ctx, bidder);
                    }
                    Err(_) => self.drop_bidders(ctx, &[bidder], "transfer aborted"),
                }
            }
            (Phase::Transfer, Body::OtResponse { session_id, data }) if from == IDEAL_OT_PARTY => {
                let Some((bidder, _)) = self.senders.remove(&session_id) else {
                    return;
                };
                if data.is_empty() {
                    self.transfer_done(ctx, bidder);
                } else {
                    self.drop_bidders(ctx, &[bidder], "transfer aborted");
                }
            }
            (Phase::Sharing, Body::SigmaSubmit { from: who, round, sigma }) if in_roster => {
                if who != from {
                    return self.violation(ctx, from, &msg);
                }
                if round != self.round {
                    return;
                }
                self.sigmas.insert(who, sigma);
                if self.roster.iter().all(|b| self.sigmas.contains_key(b)) {
                    self.solve(ctx);
                }
            }
            (Phase::Claim, Body::WinnerClaim { bidder_id, revealed_code }) => {
                self.check_claim(
                    ctx,
                    from,
                    WinnerClaim {
                        bidder_id,
                        revealed_code,
                    },
                );
            }
            (_, Body::Disqualify { bidder_id, .. }) if in_roster => {
                // a withdrawal, or an accusation by a peer
                self.drop_bidders(ctx, &[bidder_id], &format!("reported by {from}"));
                self.bidding_progress(ctx);
            }
            (Phase::Transfer | Phase::Sharing, Body::OtRequest { .. } | Body::OtResponse { .. })
            | (Phase::Sharing | Phase::Claim, Body::SigmaSubmit { .. })
            | (Phase::Claim | Phase::Done, Body::Disqualify { .. })
            | (Phase::Done, _) => {
                // late traffic from a superseded round or a finished run
            }
            _ => self.violation(ctx, from, &msg),
        }
    }

    pub fn on_timer(&mut self, token: u64, ctx: &mut Context<Message>) {
        if token == SELLER_START {
            return self.start(ctx);
        }
        if token != self.epoch {
            return;
        }
        match self.phase {
            Phase::Registration => self.close_registration(ctx),
            Phase::Bidding => {
                let late: Vec<String> = self.awaiting.iter().cloned().collect();
                self.drop_bidders(ctx, &late, "no bid before the deadline");
                self.bidding_progress(ctx);
            }
            Phase::Transfer => {
                let late: Vec<String> = self
                    .roster
                    .iter()
                    .filter(|b| !self.transferred.contains(*b))
                    .cloned()
                    .collect();
                self.drop_bidders(ctx, &late, "transfer did not complete");
            }
            Phase::Sharing => {
                let late: Vec<String> = self
                    .roster
                    .iter()
                    .filter(|b| !self.sigmas.contains_key(*b))
                    .cloned()
                    .collect();
                self.drop_bidders(ctx, &late, "no sigma before the deadline");
            }
            Phase::Claim => {
                let outcome = self.outcome.clone().expect("claim phase has an outcome");
                self.result = Some(Ok(outcome));
                self.phase = Phase::Done;
                self.phase_times.entry(Phase::Done).or_insert(ctx.now());
            }
            Phase::Solving | Phase::Done => {}
        }
    }
}
