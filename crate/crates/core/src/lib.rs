//! Sealed-bid auction over a super-increasing knapsack.
//!
//! The seller publishes a price list and keeps one secret super-increasing
//! code per price. Each bidder obtains the code of its chosen price, masked by
//! a seller randomizer, through oblivious transfer; bidders then additively
//! share the masked codes among themselves so that the seller only ever sees
//! the sum of all chosen codes. The randomizers cancel mod q and the greedy
//! knapsack decode recovers which prices were bid, without linking any price
//! to a bidder.

pub mod knapsack;
pub mod ot;
pub mod rng;
pub mod sharing;
pub mod timesync;
pub mod net;
pub mod protocol;
pub mod report;
pub mod scenario;
pub mod cli;
