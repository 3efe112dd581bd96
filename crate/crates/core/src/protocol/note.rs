use serde::{Deserialize, Serialize};

use super::{DisqualifyPhase, Failure, Money, Phase};
use crate::knapsack::FlagVector;
use crate::timesync::BidTimestamp;

/// Local trace records. These never cross the network; they make a party's
/// private intermediate values visible in the trace for checking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "note")]
pub enum Note {
    PhaseEntered {
        phase: Phase,
        round: u32,
    },
    BidPlaced {
        bidder: String,
        price: Money,
        timestamp: BidTimestamp,
    },
    TieResolved {
        accepted: Vec<String>,
        rejected: Vec<String>,
    },
    RandomizedCode {
        bidder: String,
        round: u32,
        value: u64,
    },
    SubsetSum {
        round: u32,
        value: u64,
    },
    Announced {
        flags: FlagVector,
        winning_price: Money,
    },
    ClaimChecked {
        bidder: String,
        revealed_code: u64,
        accepted: bool,
    },
    Disqualified {
        bidder: String,
        phase: DisqualifyPhase,
        reason: String,
    },
    Violation {
        from: String,
        variant: String,
    },
    Verdict {
        failure: Failure,
    },
}
