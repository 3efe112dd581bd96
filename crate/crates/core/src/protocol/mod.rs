//! Seller and bidder state machines and the auction steps they run.

mod bidder;
mod config;
mod functionality;
mod harness;
mod message;
mod note;
mod params;
mod phases;
mod registration;
mod seller;
mod ties;

use thiserror::Error;

use crate::knapsack::KnapsackError;
use crate::net::NetError;
use crate::ot::OtError;
use crate::sharing::SharingError;
use crate::timesync::TimeError;

pub use bidder::{Bidder, BidderFault, BidderSetup};
pub use config::{inject_dummies, AuctionConfig, DummyBidder, Money, PriceBook};
pub use functionality::{IdealOt, IDEAL_OT_PARTY};
pub use harness::{run_auction, BidderSpec, Party, RunReport, RunSpec, Transport};
pub use message::{Body, DisqualifyPhase, Message, Outbox, Phase};
pub use note::Note;
pub use params::{seller_init, AuctionParams, InjectedParams};
pub use phases::{
    apply_randomizer_correction, handle_disqualification, run_ot_phase, run_share_phase,
    session_id, solve_and_announce, verify_winner, ClaimRejected, Failure, Outcome,
    Participant, RecoveryAction, WinnerClaim,
};
pub use registration::{
    bidder_key, close_registration, sign_registration, KeyDirectory, Registration,
};
pub use seller::{Seller, SellerSetup, SELLER, SELLER_START};
pub use ties::{
    combine_salt, detect_and_resolve_ties, submit_bid, tie_tag, BidContext, Rejection, Salt,
    TieResolution, TieTag,
};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Knapsack(#[from] KnapsackError),
    #[error(transparent)]
    Sharing(#[from] SharingError),
    #[error(transparent)]
    Time(#[from] TimeError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("signature from {0} does not verify")]
    BadSignature(String),
    #[error("bidder {0} registered twice")]
    DuplicateBidder(String),
    #[error("price set of {k} does not exceed {n} bidders")]
    PriceSetTooSmall { k: usize, n: usize },
    #[error("unknown bidder {0}")]
    UnknownBidder(String),
    #[error("registration for auction {got}, expected {expected}")]
    WrongAuction { expected: String, got: String },
    #[error("bidder {0} is not admitted")]
    NotAdmitted(String),
    #[error("price index {index} outside 1..={k}")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("{requested} dummies requested, {available} slots")]
    InsufficientDummySlots { requested: usize, available: usize },
    #[error("no bidders remain")]
    AuctionVoid,
    #[error("transfer with {bidder} aborted: {source}")]
    OtAbort {
        bidder: String,
        #[source]
        source: OtError,
    },
    #[error("transfer setup failed: {0}")]
    Ot(#[from] OtError),
}
