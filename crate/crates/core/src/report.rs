//! Results documents, CSV exports and the Table-1 style tie report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::knapsack::FlagVector;
use crate::net::Trace;
use crate::protocol::{
    detect_and_resolve_ties, Body, DisqualifyPhase, Failure, Message, Money, Note, Phase,
    RunReport, TieTag, SELLER,
};
use crate::timesync::{paper_error_bound, standard_offset, BidTimestamp, ClockSample, HalfMillis};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisqualifiedEntry {
    pub bidder: String,
    pub phase: DisqualifyPhase,
}

/// Summary of one run. Consistent with, and checkable against, its trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub scenario: String,
    pub auction_id: String,
    pub seed: u64,
    pub verdict: String,
    pub failure: Option<Failure>,
    pub flags: Option<FlagVector>,
    pub winning_price: Option<Money>,
    pub ranked_prices: Vec<Money>,
    pub winner_id: Option<String>,
    pub subset_sum: Option<u64>,
    pub sigmas: Vec<u64>,
    pub disqualified: Vec<DisqualifiedEntry>,
    /// Logical time each phase began.
    pub phase_times_ms: BTreeMap<Phase, u64>,
    pub trace_file: String,
}

impl ResultsDocument {
    pub fn from_report(scenario: &str, auction_id: &str, seed: u64, r: &RunReport, trace_file: &str) -> Self {
        let (outcome, failure) = match &r.result {
            Ok(o) => (Some(o), None),
            Err(f) => (None, Some(f.clone())),
        };
        Self {
            scenario: scenario.to_owned(),
            auction_id: auction_id.to_owned(),
            seed,
            verdict: if failure.is_none() { "success" } else { "failure" }.to_owned(),
            failure,
            flags: outcome.map(|o| o.flags.clone()),
            winning_price: outcome.map(|o| o.winning_price),
            ranked_prices: outcome.map(|o| o.ranked_prices.clone()).unwrap_or_default(),
            winner_id: outcome.and_then(|o| o.winner_id.clone()),
            subset_sum: r.subset_sum,
            sigmas: r.sigmas.clone(),
            disqualified: r
                .disqualified
                .iter()
                .map(|(bidder, phase)| DisqualifiedEntry {
                    bidder: bidder.clone(),
                    phase: *phase,
                })
                .collect(),
            phase_times_ms: r.phase_times.clone(),
            trace_file: trace_file.to_owned(),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

fn notes(trace: &Trace) -> impl Iterator<Item = Note> + '_ {
    trace.events.iter().filter(|e| e.is_local()).filter_map(|e| e.parse())
}

/// Lists every disagreement between a results document and a trace.
pub fn verify_results(doc: &ResultsDocument, trace: &Trace) -> Vec<String> {
    let mut problems = Vec::new();
    let mut check = |what: &str, ok: bool| {
        if !ok {
            problems.push(format!("{what} does not match the trace"));
        }
    };
    let announced = trace
        .events
        .iter()
        .filter(|e| e.sender == SELLER && !e.is_local())
        .filter_map(|e| e.parse::<Message>())
        .filter_map(|m| match m.body {
            Body::Result {
                flags,
                winning_price,
                ranked_prices,
            } => Some((flags, winning_price, ranked_prices)),
            _ => None,
        })
        .next_back();
    match &announced {
        Some((flags, price, ranked)) => {
            check("flags", doc.flags.as_ref() == Some(flags));
            check("winning_price", doc.winning_price == Some(*price));
            check("ranked_prices", &doc.ranked_prices == ranked);
        }
        None => check("flags", doc.flags.is_none() && doc.winning_price.is_none()),
    }
    let mut winner = None;
    let mut subset_sum = None;
    let mut verdict = None;
    let mut disqualified = Vec::new();
    for n in notes(trace) {
        match n {
            Note::ClaimChecked { bidder, accepted: true, .. } if winner.is_none() => winner = Some(bidder),
            Note::SubsetSum { value, .. } => subset_sum = Some(value),
            Note::Verdict { failure } => verdict = Some(failure),
            Note::Disqualified { bidder, phase, .. } => disqualified.push(DisqualifiedEntry { bidder, phase }),
            _ => {}
        }
    }
    check("winner_id", doc.winner_id == winner);
    check("subset_sum", doc.subset_sum == subset_sum);
    check("failure", doc.failure == verdict);
    check("disqualified", doc.disqualified == disqualified);
    problems
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CsvKind {
    /// One row per placed bid: bidder, timestamp.
    Timestamps,
    /// Bid count per price.
    BidsVsPrices,
}

pub fn export_csv(trace: &Trace, kind: CsvKind) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let bids = notes(trace).filter_map(|n| match n {
        Note::BidPlaced {
            bidder,
            price,
            timestamp,
        } => Some((bidder, price, timestamp)),
        _ => None,
    });
    match kind {
        CsvKind::Timestamps => {
            w.write_record(["bidder", "timestamp"])?;
            for (bidder, _, t) in bids {
                w.write_record([bidder, t.to_string()])?;
            }
        }
        CsvKind::BidsVsPrices => {
            w.write_record(["price", "bids"])?;
            let mut counts: BTreeMap<Money, u32> = BTreeMap::new();
            for (_, price, _) in bids {
                *counts.entry(price).or_default() += 1;
            }
            for (price, n) in counts {
                w.write_record([price.to_string(), n.to_string()])?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, Deserialize)]
struct BidRow {
    auction_id: String,
    price: Money,
    bidder: String,
    timestamp: BidTimestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TieGroup {
    pub price: Money,
    pub accepted: (String, BidTimestamp),
    pub rejected: Vec<(String, BidTimestamp)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuctionTies {
    pub auction_id: String,
    pub groups: Vec<TieGroup>,
    pub final_price: Option<Money>,
}

/// Resolves ties in a CSV of `auction_id,price,bidder,timestamp` rows.
/// Extra columns are ignored.
pub fn tiebreak(csv_text: &str, retry_limit: u32) -> Result<Vec<AuctionTies>, csv::Error> {
    let mut by_auction: BTreeMap<String, Vec<BidRow>> = BTreeMap::new();
    let mut order = Vec::new();
    for row in csv::Reader::from_reader(csv_text.as_bytes()).deserialize() {
        let row: BidRow = row?;
        if !by_auction.contains_key(&row.auction_id) {
            order.push(row.auction_id.clone());
        }
        by_auction.entry(row.auction_id.clone()).or_default().push(row);
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let rows = &by_auction[&id];
            let tags: Vec<TieTag> = rows
                .iter()
                .map(|r| TieTag {
                    tag: r.price.to_string(),
                    timestamp: r.timestamp,
                    bidder_id: r.bidder.clone(),
                })
                .collect();
            let res = detect_and_resolve_ties(&tags, retry_limit, &BTreeMap::new());
            let price_of = |t: &TieTag| t.tag.parse::<Money>().expect("tag is a price");
            let mut groups: Vec<TieGroup> = res
                .accepted
                .iter()
                .map(|t| TieGroup {
                    price: price_of(t),
                    accepted: (t.bidder_id.clone(), t.timestamp),
                    rejected: res
                        .rejected
                        .iter()
                        .filter(|r| r.tag.tag == t.tag)
                        .map(|r| (r.tag.bidder_id.clone(), r.tag.timestamp))
                        .collect(),
                })
                .collect();
            groups.sort_by_key(|g| g.price);
            AuctionTies {
                final_price: groups.iter().map(|g| g.price).max(),
                auction_id: id,
                groups,
            }
        })
        .collect())
}

pub fn render_tiebreak(auctions: &[AuctionTies]) -> String {
    let mut out = String::new();
    for a in auctions {
        out.push_str(&format!("auction {}\n", a.auction_id));
        for g in &a.groups {
            out.push_str(&format!("  price {}: accepted {} @ {}", g.price, g.accepted.0, g.accepted.1));
            for (b, t) in &g.rejected {
                out.push_str(&format!("; rejected {b} @ {t}"));
            }
            out.push('\n');
        }
        match a.final_price {
            Some(p) => out.push_str(&format!("  final price {p}\n")),
            None => out.push_str("  final price none\n"),
        }
    }
    out
}

/// Natural return leg of the reference exchange when nobody interferes.
pub const NTP_BASELINE_RETURN_MS: i64 = 4000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NtpReport {
    pub t1: i64,
    pub t2: i64,
    pub t3: i64,
    pub t4: i64,
    pub paper_error_bound_ms: HalfMillis,
    pub standard_offset_ms: HalfMillis,
}

/// Request sent at 0, received at 1 s, answered at 5 s; the attacker holds
/// the answer until `delay_ms` after it was sent, which can only lengthen
/// the natural return leg.
pub fn ntp_attack(delay_ms: u64) -> NtpReport {
    let (t1, t2, t3) = (0, 1000, 5000);
    let held = i64::try_from(delay_ms).unwrap_or(i64::MAX - t3);
    let t4 = t3 + held.max(NTP_BASELINE_RETURN_MS);
    let s = ClockSample::new(t1, t2, t3, t4).expect("sample is ordered by construction");
    NtpReport {
        t1,
        t2,
        t3,
        t4,
        paper_error_bound_ms: paper_error_bound(&s),
        standard_offset_ms: standard_offset(&s),
    }
}
