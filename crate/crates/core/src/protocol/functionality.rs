use std::collections::BTreeMap;

use super::{Body, Message, Note, Outbox};
use crate::net::Context;
use crate::ot::{ideal_respond, OtMessage};

pub const IDEAL_OT_PARTY: &str = "ot-ideal";

/// Trusted party for the ideal transfer backend. It pairs the seller's
/// payloads with a bidder's index per session, answers the bidder, and sends
/// the seller an empty receipt.
#[derive(Debug)]
pub struct IdealOt {
    outbox: Outbox,
    seller: String,
    setups: BTreeMap<u64, OtMessage>,
    requests: BTreeMap<u64, (String, OtMessage)>,
}

impl IdealOt {
    pub fn new(auction_id: &str, seller: &str) -> Self {
        Self {
            outbox: Outbox::new(auction_id),
            seller: seller.to_owned(),
            setups: BTreeMap::new(),
            requests: BTreeMap::new(),
        }
    }

    pub fn on_message(&mut self, from: &str, msg: Message, ctx: &mut Context<Message>) {
        let Some(ot) = msg.body.as_ot() else {
            ctx.note(&Note::Violation {
                from: from.to_owned(),
                variant: msg.body.variant().to_owned(),
            });
            return;
        };
        let sid = ot.session_id;
        match msg.body {
            Body::OtSetup { .. } if from == self.seller => {
                self.setups.insert(sid, ot);
            }
            Body::OtRequest { .. } if from != self.seller => {
                self.requests.insert(sid, (from.to_owned(), ot));
            }
            _ => {
                ctx.note(&Note::Violation {
                    from: from.to_owned(),
                    variant: msg.body.variant().to_owned(),
                });
                return;
            }
        }
        let (Some(setup), Some((bidder, request))) = (self.setups.get(&sid), self.requests.get(&sid)) else {
            return;
        };
        let bidder = bidder.clone();
        let reply = ideal_respond(setup, request);
        self.setups.remove(&sid);
        self.requests.remove(&sid);
        match reply {
            Ok(resp) => {
                let m = self.outbox.wrap(Body::from_ot(resp));
                ctx.send(bidder, m);
                let receipt = self.outbox.wrap(Body::OtResponse {
                    session_id: sid,
                    data: Vec::new(),
                });
                ctx.send(self.seller.clone(), receipt);
            }
            Err(_) => {
                // a non-empty receipt tells the seller the session failed
                let m = self.outbox.wrap(Body::OtResponse {
                    session_id: sid,
                    data: vec![0xff],
                });
                ctx.send(self.seller.clone(), m);
            }
        }
    }
}
