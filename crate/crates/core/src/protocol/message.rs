use serde::{Deserialize, Serialize};

use super::{Money, Registration, TieTag};
use crate::knapsack::FlagVector;
use crate::net::NetMessage;
use crate::ot::{OtMessage, OtStep};

/// Protocol stage, also used to label recovery points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Registration,
    Bidding,
    Transfer,
    Sharing,
    Solving,
    Claim,
    Done,
}

/// Where a participant was disqualified, which decides the recovery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DisqualifyPhase {
    /// Before the code transfer.
    #[serde(rename = "PRE_OT")]
    PreOt,
    /// After the transfer, before sharing.
    #[serde(rename = "OT")]
    Ot,
    /// During or after sharing.
    #[serde(rename = "SHARE")]
    Share,
}

/// Every message carries the auction id and a per-sender sequence number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub auction_id: String,
    pub seq: u64,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Body {
    Announce {
        prices: Vec<Money>,
        dummy_slots: usize,
        q: u64,
    },
    Register {
        registration: Registration,
    },
    RegisterAck {
        bidder_id: String,
    },
    PhaseStart {
        phase: Phase,
        round: u32,
        bidders: Vec<String>,
    },
    SaltShare {
        from: String,
        #[serde(with = "hex::serde")]
        contribution: Vec<u8>,
    },
    TieTagSubmit {
        tie_tag: TieTag,
    },
    TieReject {
        bidder_id: String,
        retry_allowed: bool,
    },
    OtSetup {
        session_id: u64,
        #[serde(with = "hex::serde")]
        data: Vec<u8>,
    },
    OtRequest {
        session_id: u64,
        #[serde(with = "hex::serde")]
        data: Vec<u8>,
    },
    OtResponse {
        session_id: u64,
        #[serde(with = "hex::serde")]
        data: Vec<u8>,
    },
    Share {
        from: String,
        to: String,
        round: u32,
        value: u64,
    },
    SigmaSubmit {
        from: String,
        round: u32,
        sigma: u64,
    },
    Result {
        flags: FlagVector,
        winning_price: Money,
        ranked_prices: Vec<Money>,
    },
    WinnerClaim {
        bidder_id: String,
        revealed_code: u64,
    },
    WinnerConfirm {
        accepted: bool,
    },
    Disqualify {
        bidder_id: String,
        phase: DisqualifyPhase,
    },
}

impl Body {
    pub fn variant(&self) -> &'static str {
        match self {
            Body::Announce { .. } => "Announce",
            Body::Register { .. } => "Register",
            Body::RegisterAck { .. } => "RegisterAck",
            Body::PhaseStart { .. } => "PhaseStart",
            Body::SaltShare { .. } => "SaltShare",
            Body::TieTagSubmit { .. } => "TieTagSubmit",
            Body::TieReject { .. } => "TieReject",
            Body::OtSetup { .. } => "OtSetup",
            Body::OtRequest { .. } => "OtRequest",
            Body::OtResponse { .. } => "OtResponse",
            Body::Share { .. } => "Share",
            Body::SigmaSubmit { .. } => "SigmaSubmit",
            Body::Result { .. } => "Result",
            Body::WinnerClaim { .. } => "WinnerClaim",
            Body::WinnerConfirm { .. } => "WinnerConfirm",
            Body::Disqualify { .. } => "Disqualify",
        }
    }

    pub fn from_ot(m: OtMessage) -> Self {
        let OtMessage {
            step,
            session_id,
            data,
        } = m;
        match step {
            OtStep::Setup => Body::OtSetup { session_id, data },
            OtStep::Request => Body::OtRequest { session_id, data },
            OtStep::Response => Body::OtResponse { session_id, data },
        }
    }

    pub fn as_ot(&self) -> Option<OtMessage> {
        let (step, session_id, data) = match self {
            Body::OtSetup { session_id, data } => (OtStep::Setup, session_id, data),
            Body::OtRequest { session_id, data } => (OtStep::Request, session_id, data),
            Body::OtResponse { session_id, data } => (OtStep::Response, session_id, data),
            _ => return None,
        };
        Some(OtMessage {
            step,
            session_id: *session_id,
            data: data.clone(),
        })
    }
}

impl NetMessage for Message {
    fn variant(&self) -> &'static str {
        self.body.variant()
    }
}

/// Stamps outgoing bodies with the auction id and a monotone sequence.
#[derive(Debug, Clone)]
pub struct Outbox {
    auction_id: String,
    next_seq: u64,
}

impl Outbox {
    pub fn new(auction_id: impl Into<String>) -> Self {
        Self {
            auction_id: auction_id.into(),
            next_seq: 0,
        }
    }

    pub fn wrap(&mut self, body: Body) -> Message {
        let seq = self.next_seq;
        self.next_seq += 1;
        Message {
            auction_id: self.auction_id.clone(),
            seq,
            body,
        }
    }
}
