//! Signed bidder registration and the admission rule.

use std::collections::{BTreeMap, BTreeSet};

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AuctionConfig, ProtocolError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registration {
    pub bidder_id: String,
    pub network_address: String,
    pub auction_id: String,
    #[serde(with = "hex::serde")]
    pub signature: Vec<u8>,
}

/// Length-prefixed concatenation of the signed fields.
fn canonical_bytes(bidder_id: &str, network_address: &str, auction_id: &str) -> Vec<u8> {
    let mut out = Vec::new();
    for part in [bidder_id, network_address, auction_id] {
        out.extend_from_slice(&(part.len() as u32).to_be_bytes());
        out.extend_from_slice(part.as_bytes());
    }
    out
}

/// Deterministic per-bidder signing key.
pub fn bidder_key(seed: u64, bidder_id: &str) -> SigningKey {
    let mut h = Sha256::new();
    h.update(b"knapsack-auction/bidder-key");
    h.update(seed.to_be_bytes());
    h.update(bidder_id.as_bytes());
    SigningKey::from_bytes(&h.finalize().into())
}

pub fn sign_registration(
    key: &SigningKey,
    bidder_id: &str,
    network_address: &str,
    auction_id: &str,
) -> Registration {
    let sig = key.sign(&canonical_bytes(bidder_id, network_address, auction_id));
    Registration {
        bidder_id: bidder_id.to_owned(),
        network_address: network_address.to_owned(),
        auction_id: auction_id.to_owned(),
        signature: sig.to_bytes().to_vec(),
    }
}

/// Public keys the seller holds for prospective bidders.
#[derive(Debug, Clone, Default)]
pub struct KeyDirectory(BTreeMap<String, VerifyingKey>);

impl KeyDirectory {
    pub fn insert(&mut self, bidder_id: impl Into<String>, key: VerifyingKey) {
        self.0.insert(bidder_id.into(), key);
    }

    pub fn verify(&self, r: &Registration) -> Result<(), ProtocolError> {
        let key = self
            .0
            .get(&r.bidder_id)
            .ok_or_else(|| ProtocolError::UnknownBidder(r.bidder_id.clone()))?;
        let sig = Signature::from_slice(&r.signature)
            .map_err(|_| ProtocolError::BadSignature(r.bidder_id.clone()))?;
        key.verify(
            &canonical_bytes(&r.bidder_id, &r.network_address, &r.auction_id),
            &sig,
        )
        .map_err(|_| ProtocolError::BadSignature(r.bidder_id.clone()))
    }
}

/// Admits every registrant when the real price count strictly exceeds the
/// number of real bidders. Dummy bidders do not count against the prices.
pub fn close_registration(
    registrations: &[Registration],
    config: &AuctionConfig,
    keys: &KeyDirectory,
    dummy_ids: &BTreeSet<String>,
) -> Result<Vec<String>, ProtocolError> {
    let mut seen = BTreeSet::new();
    for r in registrations {
        if r.auction_id != config.auction_id {
            return Err(ProtocolError::WrongAuction {
                expected: config.auction_id.clone(),
                got: r.auction_id.clone(),
            });
        }
        keys.verify(r)?;
        if !seen.insert(r.bidder_id.clone()) {
            return Err(ProtocolError::DuplicateBidder(r.bidder_id.clone()));
        }
    }
    let k = config.prices.len();
    let n = seen.iter().filter(|id| !dummy_ids.contains(*id)).count();
    if k <= n {
        return Err(ProtocolError::PriceSetTooSmall { k, n });
    }
    Ok(registrations.iter().map(|r| r.bidder_id.clone()).collect())
}
