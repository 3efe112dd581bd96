//! Tie detection before any code is transferred.
//!
//! Sealed bidders agree on a salt among themselves (XOR of one random
//! contribution each, never shown to the seller) and submit
//! `SHA-256(salt || price index)` with a timestamp. The seller compares tags
//! for equality only: within a group of equal tags the earliest timestamp
//! wins, and exact timestamp ties fall to the lexicographically smaller id.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Money, ProtocolError};
use crate::timesync::{timestamp_now, BidTimestamp, PartyClock};

pub type Salt = [u8; 32];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieTag {
    pub tag: String,
    pub timestamp: BidTimestamp,
    pub bidder_id: String,
}

pub fn combine_salt<'a>(contributions: impl IntoIterator<Item = &'a Salt>) -> Salt {
    let mut salt = [0u8; 32];
    for c in contributions {
        for (s, b) in salt.iter_mut().zip(c) {
            *s ^= b;
        }
    }
    salt
}

/// The tag for a price: the plaintext price for open bids, otherwise a
/// salted digest of its position.
pub fn tie_tag(open_bids: bool, salt: &Salt, position: usize, price: Money) -> String {
    if open_bids {
        return price.to_string();
    }
    let mut h = Sha256::new();
    h.update(b"knapsack-auction/tie-tag");
    h.update(salt);
    h.update((position as u32).to_be_bytes());
    hex::encode(h.finalize())
}

/// What a bidder needs to place a bid.
#[derive(Debug, Clone)]
pub struct BidContext<'a> {
    pub bidder_id: &'a str,
    pub admitted: bool,
    pub open_bids: bool,
    pub salt: &'a Salt,
    pub prices: &'a [Money],
}

/// Builds a timestamped tag for the price at 1-based `position`.
pub fn submit_bid(
    ctx: &BidContext<'_>,
    position: usize,
    clock: &PartyClock,
    now_ms: u64,
) -> Result<TieTag, ProtocolError> {
    if !ctx.admitted {
        return Err(ProtocolError::NotAdmitted(ctx.bidder_id.to_owned()));
    }
    let price = position
        .checked_sub(1)
        .and_then(|i| ctx.prices.get(i))
        .copied()
        .ok_or(ProtocolError::IndexOutOfRange {
            index: position,
            k: ctx.prices.len(),
        })?;
    Ok(TieTag {
        tag: tie_tag(ctx.open_bids, ctx.salt, position, price),
        timestamp: timestamp_now(clock, now_ms)?,
        bidder_id: ctx.bidder_id.to_owned(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub tag: TieTag,
    pub retry_allowed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieResolution {
    pub accepted: Vec<TieTag>,
    pub rejected: Vec<Rejection>,
}

/// Accepts the earliest tag of each equal-tag group. A rejected bidder may
/// retry while its used retries are below `retry_limit`.
pub fn detect_and_resolve_ties(
    tags: &[TieTag],
    retry_limit: u32,
    retries_used: &BTreeMap<String, u32>,
) -> TieResolution {
    let mut groups: BTreeMap<&str, Vec<&TieTag>> = BTreeMap::new();
    for t in tags {
        groups.entry(t.tag.as_str()).or_default().push(t);
    }
    let mut out = TieResolution::default();
    for mut group in groups.into_values() {
        group.sort_by(|a, b| (a.timestamp, &a.bidder_id).cmp(&(b.timestamp, &b.bidder_id)));
        let mut it = group.into_iter();
        out.accepted.extend(it.next().cloned());
        for loser in it {
            let used = retries_used.get(&loser.bidder_id).copied().unwrap_or(0);
            out.rejected.push(Rejection {
                tag: loser.clone(),
                retry_allowed: used < retry_limit,
            });
        }
    }
    // present results in submission-time order
    let key = |t: &TieTag| (t.timestamp, t.bidder_id.clone());
    out.accepted.sort_by_key(key);
    out.rejected.sort_by_key(|r| key(&r.tag));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(tag: &str, ms: u64, who: &str) -> TieTag {
        TieTag {
            tag: tag.into(),
            timestamp: BidTimestamp::from_millis(ms),
            bidder_id: who.into(),
        }
    }

    #[test]
    fn table_one() {
        let tags = vec![
            tag("120", 2654, "P"),
            tag("60", 2712, "S"),
            tag("80", 2907, "B"),
            tag("80", 2826, "A"),
            tag("100", 2900, "C"),
        ];
        let r = detect_and_resolve_ties(&tags, 0, &BTreeMap::new());
        let ids: Vec<_> = r.accepted.iter().map(|t| t.bidder_id.as_str()).collect();
        assert_eq!(ids, vec!["P", "S", "A", "C"]);
        assert_eq!(r.rejected.len(), 1);
        assert_eq!(r.rejected[0].tag.bidder_id, "B");
        assert!(!r.rejected[0].retry_allowed);
    }

    #[test]
    fn distinct_tags_all_accepted() {
        let tags = vec![tag("a", 3, "X"), tag("b", 1, "Y"), tag("c", 2, "Z")];
        let r = detect_and_resolve_ties(&tags, 1, &BTreeMap::new());
        assert_eq!(r.accepted.len(), 3);
        assert!(r.rejected.is_empty());
    }

    #[test]
    fn three_way_tie_matches_sort_oracle() {
        let tags = vec![tag("t", 3000, "C"), tag("t", 1000, "A"), tag("t", 2000, "B")];
        let mut oracle = tags.clone();
        oracle.sort_by_key(|t| t.timestamp);
        let r = detect_and_resolve_ties(&tags, 1, &BTreeMap::new());
        assert_eq!(r.accepted, vec![oracle[0].clone()]);
        let losers: Vec<_> = r.rejected.iter().map(|x| x.tag.clone()).collect();
        assert_eq!(losers, oracle[1..].to_vec());
        assert!(r.rejected.iter().all(|x| x.retry_allowed));
        let used: BTreeMap<String, u32> = [("B".to_string(), 1)].into();
        let r = detect_and_resolve_ties(&tags, 1, &used);
        assert!(!r.rejected.iter().find(|x| x.tag.bidder_id == "B").unwrap().retry_allowed);
    }

    #[test]
    fn equal_timestamps_break_by_id() {
        let tags = vec![tag("t", 5, "beta"), tag("t", 5, "alpha")];
        let r = detect_and_resolve_ties(&tags, 0, &BTreeMap::new());
        assert_eq!(r.accepted[0].bidder_id, "alpha");
    }

    #[test]
    fn submit_bid_cases() {
        let prices = [60, 80, 100, 120];
        let salt = [7u8; 32];
        let ctx = BidContext {
            bidder_id: "A",
            admitted: true,
            open_bids: true,
            salt: &salt,
            prices: &prices,
        };
        let t = submit_bid(&ctx, 2, &PartyClock::new(0), 2826).unwrap();
        assert_eq!((t.tag.as_str(), t.timestamp.to_string()), ("80", "2.826".to_string()));
        assert!(matches!(
            submit_bid(&ctx, 0, &PartyClock::new(0), 1),
            Err(ProtocolError::IndexOutOfRange { index: 0, k: 4 })
        ));
        let sealed = BidContext { open_bids: false, ..ctx.clone() };
        let other = BidContext { bidder_id: "B", ..sealed.clone() };
        let a = submit_bid(&sealed, 3, &PartyClock::new(0), 10).unwrap();
        let b = submit_bid(&other, 3, &PartyClock::new(0), 20).unwrap();
        assert_eq!(a.tag, b.tag);
        assert_ne!(a.timestamp, b.timestamp);
        assert_ne!(a.tag, submit_bid(&sealed, 2, &PartyClock::new(0), 10).unwrap().tag);
        let outsider = BidContext { admitted: false, ..ctx };
        assert!(matches!(
            submit_bid(&outsider, 1, &PartyClock::new(0), 1),
            Err(ProtocolError::NotAdmitted(_))
        ));
    }

    #[test]
    fn salt_is_xor_of_contributions() {
        let a = [0b1010u8; 32];
        let b = [0b0110u8; 32];
        assert_eq!(combine_salt([&a, &b]), [0b1100u8; 32]);
        assert_eq!(combine_salt([&a]), a);
    }
}
