//! The auction's computational steps as plain functions. The networked
//! parties call into these; tests also drive them directly.

use serde::{Deserialize, Serialize};

use super::{AuctionParams, DisqualifyPhase, Money, Phase, ProtocolError};
use crate::knapsack::{solve_knapsack, FlagVector, KnapsackError, Modulus};
use crate::ot::{decode_residue, ot_run, Backend, OtChoice, OtSeeds};
use crate::rng::{derive_seed, UniformSource};
use crate::sharing::{aggregate_column, combine_sigmas, RandomizedCode, ShareMatrix};

/// OT session identifier for a bidder's slot in a given transfer round.
pub fn session_id(round: u32, slot: usize) -> u64 {
    (u64::from(round) << 32) | slot as u64
}

/// A bidder as the phase functions see it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Participant {
    pub id: String,
    /// 1-based position of the chosen price.
    pub position: usize,
}

/// Runs one OT per bidder; each learns `c_x + r_j mod q` for its own `x`.
pub fn run_ot_phase(
    params: &AuctionParams,
    bidders: &[Participant],
    backend: Backend,
    round: u32,
    seed: u64,
) -> Result<Vec<RandomizedCode>, ProtocolError> {
    bidders
        .iter()
        .enumerate()
        .map(|(slot, b)| {
            let sid = session_id(round, slot);
            let offer = params.offer_for(&b.id, sid)?;
            let choice = OtChoice {
                session_id: sid,
                index: b.position,
            };
            let seeds = OtSeeds {
                sender: derive_seed(seed, "ot-sender"),
                receiver: derive_seed(seed, &format!("ot-receiver/{}", b.id)),
            };
            let abort = |source| ProtocolError::OtAbort {
                bidder: b.id.clone(),
                source,
            };
            let (bytes, _) = ot_run(&offer, choice, backend, seeds).map_err(abort)?;
            Ok(RandomizedCode(decode_residue(&bytes).map_err(abort)?))
        })
        .collect()
}

/// Every bidder splits its code among all bidders; returns σ_1..σ_n.
/// `pinned` replaces the random split with fixed rows.
pub fn run_share_phase(
    codes: &[RandomizedCode],
    q: Modulus,
    src: &mut impl UniformSource,
    pinned: Option<&ShareMatrix>,
) -> Result<Vec<u64>, ProtocolError> {
    let matrix = match pinned {
        Some(m) => {
            if m.size() != codes.len() {
                return Err(ProtocolError::InvalidConfig(format!(
                    "{} share rows for {} bidders",
                    m.size(),
                    codes.len()
                )));
            }
            for (j, &c) in codes.iter().enumerate() {
                crate::sharing::check_shares(m.row(j), c, q)?;
            }
            m.clone()
        }
        None => ShareMatrix::split_all(codes, q, src)?,
    };
    Ok((0..matrix.size())
        .map(|v| aggregate_column(&matrix.column(v), q))
        .collect::<Result<_, _>>()?)
}

/// Adds the randomizers of bidders dropped after the transfer back into a
/// partial sum, so the remaining codes decode without a restart.
pub fn apply_randomizer_correction(sigma_partial: u64, dropped: &[u64], q: Modulus) -> u64 {
    dropped.iter().fold(q.reduce(sigma_partial), |acc, &r| q.add(acc, r))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub flags: FlagVector,
    pub subset_sum: u64,
    pub winning_price: Money,
    /// Flagged real prices, highest first.
    pub ranked_prices: Vec<Money>,
    pub winner_id: Option<String>,
}

/// Why a run produced no winner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "failure", rename_all = "snake_case")]
pub enum Failure {
    NoBids,
    NonZeroResidual { residual: u64, rerun: Phase },
    Void { reason: String },
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::NoBids => f.write_str("no real price was flagged"),
            Failure::NonZeroResidual { residual, rerun } => {
                write!(f, "knapsack decode left residual {residual}; rerun {rerun:?}")
            }
            Failure::Void { reason } => write!(f, "auction void: {reason}"),
        }
    }
}

/// σ_k from the sigmas (plus any compensated randomizers), the greedy
/// decode, and the price ranking.
pub fn solve_and_announce(
    params: &AuctionParams,
    sigmas: &[u64],
    correction: &[u64],
) -> Result<Outcome, Failure> {
    let q = params.modulus();
    let partial = combine_sigmas(sigmas, q).map_err(|e| Failure::Void {
        reason: e.to_string(),
    })?;
    let subset_sum = apply_randomizer_correction(partial, correction, q);
    let flags = match solve_knapsack(subset_sum, params.codes()) {
        Ok(f) => f,
        Err(KnapsackError::NonZeroResidual(residual)) => {
            return Err(Failure::NonZeroResidual {
                residual,
                rerun: Phase::Sharing,
            })
        }
        Err(e) => return Err(Failure::Void { reason: e.to_string() }),
    };
    let book = params.book();
    let ranked_prices: Vec<Money> = flags
        .positions()
        .into_iter()
        .rev()
        .filter(|&p| !book.is_dummy(p))
        .filter_map(|p| book.price_at(p))
        .collect();
    let winning_price = *ranked_prices.first().ok_or(Failure::NoBids)?;
    Ok(Outcome {
        flags,
        subset_sum,
        winning_price,
        ranked_prices,
        winner_id: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinnerClaim {
    pub bidder_id: String,
    pub revealed_code: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClaimRejected {
    #[error("claimant {0} holds no randomizer")]
    UnknownBidder(String),
    #[error("revealed code does not match the winning code for {0}")]
    WrongCode(String),
}

/// Accepts iff the revealed value is `c_win + r_j mod q` for the claimant's
/// own randomizer.
pub fn verify_winner(
    claim: &WinnerClaim,
    params: &AuctionParams,
    winning_price: Money,
) -> Result<(), ClaimRejected> {
    let position = params
        .book()
        .position_of(winning_price)
        .ok_or_else(|| ClaimRejected::WrongCode(claim.bidder_id.clone()))?;
    let expected = params.randomized(&claim.bidder_id, position).map_err(|e| match e {
        ProtocolError::UnknownBidder(id) => ClaimRejected::UnknownBidder(id),
        _ => ClaimRejected::WrongCode(claim.bidder_id.clone()),
    })?;
    if params.modulus().reduce(claim.revealed_code) == expected.0 {
        Ok(())
    } else {
        Err(ClaimRejected::WrongCode(claim.bidder_id.clone()))
    }
}

/// What the seller does after disqualifying a bidder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum RecoveryAction {
    /// Before transfer: drop the bidder; randomizers are redrawn for the rest.
    Continue { survivors: Vec<String> },
    /// After transfer: discard the bid and redo randomization and transfer.
    RestartTransfer { survivors: Vec<String> },
    /// After transfer with correction enabled: keep codes, add back `r`.
    Compensate { survivors: Vec<String>, randomizer: u64 },
    /// During sharing: survivors re-split the same codes; `r` is added back.
    Reshare { survivors: Vec<String>, randomizer: u64 },
    Void,
}

pub fn handle_disqualification(
    roster: &[String],
    params: &AuctionParams,
    bidder: &str,
    phase: DisqualifyPhase,
    post_ot_correction: bool,
) -> Result<RecoveryAction, ProtocolError> {
    if !roster.iter().any(|b| b == bidder) {
        return Err(ProtocolError::UnknownBidder(bidder.to_owned()));
    }
    let survivors: Vec<String> = roster.iter().filter(|b| *b != bidder).cloned().collect();
    if survivors.is_empty() {
        return Ok(RecoveryAction::Void);
    }
    let randomizer = || {
        params
            .randomizer_for(bidder)
            .ok_or_else(|| ProtocolError::UnknownBidder(bidder.to_owned()))
    };
    Ok(match phase {
        DisqualifyPhase::PreOt => RecoveryAction::Continue { survivors },
        DisqualifyPhase::Ot if post_ot_correction => RecoveryAction::Compensate {
            survivors,
            randomizer: randomizer()?,
        },
        DisqualifyPhase::Ot => RecoveryAction::RestartTransfer { survivors },
        DisqualifyPhase::Share => RecoveryAction::Reshare {
            survivors,
            randomizer: randomizer()?,
        },
    })
}
