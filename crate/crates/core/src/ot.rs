//! 1-of-k oblivious transfer of strings.
//!
//! Two backends share one message shape (setup, request, response):
//!
//! * [`Backend::Ideal`] is a trusted functionality. The sender hands its
//!   payloads to the functionality, the receiver hands it an index, and the
//!   functionality returns the one payload. The sender never sees the index.
//! * [`Backend::Group`] runs over the Ristretto group. The sender publishes
//!   random points `C_2..C_k`; the receiver picks a secret `b` and sends one
//!   point `P_1` arranged so that `P_i = C_i - P_1` equals `bG` only at its
//!   chosen index. Every payload is sealed with ChaCha20-Poly1305 under a key
//!   hashed from an ephemeral Diffie-Hellman value with `P_i`, so the receiver
//!   can open exactly one of them.

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use curve25519_dalek::constants::RISTRETTO_BASEPOINT_TABLE;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OtError {
    #[error("offer has no payloads")]
    EmptyOffer,
    #[error("choice {index} outside 1..={k}")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("session mismatch: expected {expected}, got {got}")]
    SessionMismatch { expected: u64, got: u64 },
    #[error("malformed {0}")]
    Malformed(&'static str),
    #[error("unexpected {got:?} while waiting for {expected:?}")]
    OutOfOrder { expected: OtStep, got: OtStep },
    #[error("operation not available on the {0:?} backend")]
    WrongBackend(Backend),
    #[error("payload failed authentication")]
    Authentication,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Ideal,
    Group,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OtStep {
    Setup,
    Request,
    Response,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OtMessage {
    pub step: OtStep,
    pub session_id: u64,
    #[serde(with = "hex::serde")]
    pub data: Vec<u8>,
}

impl OtMessage {
    fn to_bytes(&self, out: &mut Vec<u8>) {
        out.push(self.step as u8);
        out.extend_from_slice(&self.session_id.to_be_bytes());
        out.extend_from_slice(&(self.data.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.data);
    }
}

/// Sender input: `k` payloads fixed at session start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OtOffer {
    session_id: u64,
    payloads: Vec<Vec<u8>>,
}

impl OtOffer {
    pub fn new(session_id: u64, payloads: Vec<Vec<u8>>) -> Result<Self, OtError> {
        if payloads.is_empty() {
            return Err(OtError::EmptyOffer);
        }
        Ok(Self {
            session_id,
            payloads,
        })
    }

    pub fn session_id(&self) -> u64 {
        self.session_id
    }

    pub fn k(&self) -> usize {
        self.payloads.len()
    }

    /// Payload at a 1-based index.
    pub fn payload(&self, index: usize) -> Option<&[u8]> {
        index
            .checked_sub(1)
            .and_then(|i| self.payloads.get(i))
            .map(Vec::as_slice)
    }
}

/// Receiver input: a 1-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OtChoice {
    pub session_id: u64,
    pub index: usize,
}

/// Ordered, append-only record of one session.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OtTranscript {
    messages: Vec<OtMessage>,
}

impl OtTranscript {
    pub fn push(&mut self, m: OtMessage) {
        self.messages.push(m);
    }

    pub fn messages(&self) -> &[OtMessage] {
        &self.messages
    }

    pub fn find(&self, step: OtStep) -> Option<&OtMessage> {
        self.messages.iter().find(|m| m.step == step)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for m in &self.messages {
            m.to_bytes(&mut out);
        }
        out
    }

    /// Bytes the sender observes. With the ideal backend the request and
    /// response travel only between receiver and functionality.
    pub fn sender_view(&self, backend: Backend) -> Vec<u8> {
        let mut out = Vec::new();
        for m in &self.messages {
            if backend == Backend::Group || m.step == OtStep::Setup {
                m.to_bytes(&mut out);
            }
        }
        out
    }
}

/// Fixed-width big-endian encoding of a residue.
pub fn encode_residue(v: u64) -> Vec<u8> {
    v.to_be_bytes().to_vec()
}

pub fn decode_residue(bytes: &[u8]) -> Result<u64, OtError> {
    let arr: [u8; 8] = bytes.try_into().map_err(|_| OtError::Malformed("residue payload"))?;
    Ok(u64::from_be_bytes(arr))
}

fn session_rng(seed: u64, session_id: u64, role: &str) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(derive_seed(seed ^ session_id.rotate_left(17), role))
}

fn check_session(expected: u64, m: &OtMessage, step: OtStep) -> Result<(), OtError> {
    if m.session_id != expected {
        return Err(OtError::SessionMismatch {
            expected,
            got: m.session_id,
        });
    }
    if m.step != step {
        return Err(OtError::OutOfOrder {
            expected: step,
            got: m.step,
        });
    }
    Ok(())
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], OtError> {
        if self.0.len() < n {
            return Err(OtError::Malformed(what));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u32(&mut self, what: &'static str) -> Result<usize, OtError> {
        let b = self.take(4, what)?;
        Ok(u32::from_be_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn point(&mut self, what: &'static str) -> Result<RistrettoPoint, OtError> {
        let b = self.take(32, what)?;
        CompressedRistretto::from_slice(b)
            .ok()
            .and_then(|c| c.decompress())
            .ok_or(OtError::Malformed(what))
    }

    fn finish(&self, what: &'static str) -> Result<(), OtError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(OtError::Malformed(what))
        }
    }
}

fn derive_key(session_id: u64, index: usize, shared: &RistrettoPoint) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"knapsack-auction/ot/key");
    h.update(session_id.to_be_bytes());
    h.update((index as u32).to_be_bytes());
    h.update(shared.compress().as_bytes());
    h.finalize().into()
}

fn aad(session_id: u64, index: usize) -> [u8; 12] {
    let mut a = [0u8; 12];
    a[..8].copy_from_slice(&session_id.to_be_bytes());
    a[8..].copy_from_slice(&(index as u32).to_be_bytes());
    a
}

// Each key seals exactly one message, so a fixed nonce is safe.
fn seal(key: &[u8; 32], session_id: u64, index: usize, plaintext: &[u8]) -> Vec<u8> {
    ChaCha20Poly1305::new(Key::from_slice(key))
        .encrypt(
            Nonce::from_slice(&[0u8; 12]),
            Payload {
                msg: plaintext,
                aad: &aad(session_id, index),
            },
        )
        .expect("encryption of an in-memory buffer cannot fail")
}

fn open(key: &[u8; 32], session_id: u64, index: usize, ct: &[u8]) -> Result<Vec<u8>, OtError> {
    ChaCha20Poly1305::new(Key::from_slice(key))
        .decrypt(
            Nonce::from_slice(&[0u8; 12]),
            Payload {
                msg: ct,
                aad: &aad(session_id, index),
            },
        )
        .map_err(|_| OtError::Authentication)
}

fn encode_payloads(payloads: &[Vec<u8>]) -> Vec<u8> {
    let mut out = (payloads.len() as u32).to_be_bytes().to_vec();
    for p in payloads {
        out.extend_from_slice(&(p.len() as u32).to_be_bytes());
        out.extend_from_slice(p);
    }
    out
}

fn decode_payloads(data: &[u8]) -> Result<Vec<Vec<u8>>, OtError> {
    let mut r = Reader(data);
    let k = r.u32("payload count")?;
    let mut out = Vec::with_capacity(k.min(1024));
    for _ in 0..k {
        let len = r.u32("payload length")?;
        out.push(r.take(len, "payload body")?.to_vec());
    }
    r.finish("trailing payload bytes")?;
    Ok(out)
}

/// A ciphertext for one index in a group-backend response.
struct Sealed {
    ephemeral: RistrettoPoint,
    ciphertext: Vec<u8>,
}

fn decode_response(data: &[u8], k: usize) -> Result<Vec<Sealed>, OtError> {
    let mut r = Reader(data);
    if r.u32("response count")? != k {
        return Err(OtError::Malformed("response count"));
    }
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let ephemeral = r.point("response point")?;
        let len = r.u32("ciphertext length")?;
        let ciphertext = r.take(len, "ciphertext")?.to_vec();
        out.push(Sealed {
            ephemeral,
            ciphertext,
        });
    }
    r.finish("trailing response bytes")?;
    Ok(out)
}

#[derive(Debug)]
enum SenderState {
    Fresh,
    AwaitingRequest(Vec<RistrettoPoint>),
    Done,
}

/// Sender half of a session.
#[derive(Debug)]
pub struct OtSender {
    backend: Backend,
    offer: OtOffer,
    rng: ChaCha20Rng,
    state: SenderState,
}

impl OtSender {
    pub fn new(backend: Backend, offer: OtOffer, seed: u64) -> Self {
        let rng = session_rng(seed, offer.session_id, "ot-sender");
        Self {
            backend,
            offer,
            rng,
            state: SenderState::Fresh,
        }
    }

    /// First message. For the ideal backend it is addressed to the
    /// functionality and carries the payloads.
    pub fn setup(&mut self) -> Result<OtMessage, OtError> {
        if !matches!(self.state, SenderState::Fresh) {
            return Err(OtError::OutOfOrder {
                expected: OtStep::Request,
                got: OtStep::Setup,
            });
        }
        let data = match self.backend {
            Backend::Ideal => {
                self.state = SenderState::Done;
                encode_payloads(&self.offer.payloads)
            }
            Backend::Group => {
                let k = self.offer.k();
                let constants: Vec<RistrettoPoint> =
                    (1..k).map(|_| RistrettoPoint::random(&mut self.rng)).collect();
                let mut data = (k as u32).to_be_bytes().to_vec();
                for c in &constants {
                    data.extend_from_slice(c.compress().as_bytes());
                }
                self.state = SenderState::AwaitingRequest(constants);
                data
            }
        };
        Ok(OtMessage {
            step: OtStep::Setup,
            session_id: self.offer.session_id,
            data,
        })
    }

    /// Group backend only: seal every payload under its index's key.
    pub fn respond(&mut self, request: &OtMessage) -> Result<OtMessage, OtError> {
        if self.backend != Backend::Group {
            return Err(OtError::WrongBackend(self.backend));
        }
        check_session(self.offer.session_id, request, OtStep::Request)?;
        let constants = match std::mem::replace(&mut self.state, SenderState::Done) {
            SenderState::AwaitingRequest(c) => c,
            other => {
                self.state = other;
                return Err(OtError::OutOfOrder {
                    expected: OtStep::Setup,
                    got: OtStep::Request,
                });
            }
        };
        let mut r = Reader(&request.data);
        let first = r.point("request key")?;
        r.finish("trailing request bytes")?;

        let sid = self.offer.session_id;
        let mut data = (self.offer.k() as u32).to_be_bytes().to_vec();
        for (i, payload) in self.offer.payloads.iter().enumerate() {
            let index = i + 1;
            let pk = if i == 0 { first } else { constants[i - 1] - first };
            let eph = Scalar::random(&mut self.rng);
            let key = derive_key(sid, index, &(pk * eph));
            let ct = seal(&key, sid, index, payload);
            data.extend_from_slice((&eph * RISTRETTO_BASEPOINT_TABLE).compress().as_bytes());
            data.extend_from_slice(&(ct.len() as u32).to_be_bytes());
            data.extend_from_slice(&ct);
        }
        Ok(OtMessage {
            step: OtStep::Response,
            session_id: sid,
            data,
        })
    }
}

/// Receiver half of a session.
#[derive(Debug)]
pub struct OtReceiver {
    backend: Backend,
    choice: OtChoice,
    k: usize,
    secret: Option<Scalar>,
    rng: ChaCha20Rng,
    done: bool,
}

impl OtReceiver {
    pub fn new(backend: Backend, choice: OtChoice, k: usize, seed: u64) -> Result<Self, OtError> {
        if choice.index == 0 || choice.index > k {
            return Err(OtError::IndexOutOfRange {
                index: choice.index,
                k,
            });
        }
        Ok(Self {
            backend,
            choice,
            k,
            secret: None,
            rng: session_rng(seed, choice.session_id, "ot-receiver"),
            done: false,
        })
    }

    pub fn choice(&self) -> OtChoice {
        self.choice
    }

    /// Ideal backend: the request goes to the functionality and `setup` is
    /// not needed. Group backend: `setup` is the sender's first message.
    pub fn request(&mut self, setup: Option<&OtMessage>) -> Result<OtMessage, OtError> {
        if self.secret.is_some() || self.done {
            return Err(OtError::OutOfOrder {
                expected: OtStep::Response,
                got: OtStep::Request,
            });
        }
        let sid = self.choice.session_id;
        let data = match self.backend {
            Backend::Ideal => (self.choice.index as u32).to_be_bytes().to_vec(),
            Backend::Group => {
                let setup = setup.ok_or(OtError::Malformed("missing setup"))?;
                check_session(sid, setup, OtStep::Setup)?;
                let mut r = Reader(&setup.data);
                if r.u32("setup count")? != self.k {
                    return Err(OtError::Malformed("setup count"));
                }
                let constants = (1..self.k)
                    .map(|_| r.point("setup point"))
                    .collect::<Result<Vec<_>, _>>()?;
                r.finish("trailing setup bytes")?;
                let b = Scalar::random(&mut self.rng);
                let own = &b * RISTRETTO_BASEPOINT_TABLE;
                let first = if self.choice.index == 1 {
                    own
                } else {
                    constants[self.choice.index - 2] - own
                };
                self.secret = Some(b);
                first.compress().as_bytes().to_vec()
            }
        };
        Ok(OtMessage {
            step: OtStep::Request,
            session_id: sid,
            data,
        })
    }

    /// Recovers the chosen payload from the response.
    pub fn finish(&mut self, response: &OtMessage) -> Result<Vec<u8>, OtError> {
        check_session(self.choice.session_id, response, OtStep::Response)?;
        if self.done {
            return Err(OtError::OutOfOrder {
                expected: OtStep::Request,
                got: OtStep::Response,
            });
        }
        let out = match self.backend {
            Backend::Ideal => response.data.clone(),
            Backend::Group => {
                let b = self.secret.ok_or(OtError::OutOfOrder {
                    expected: OtStep::Setup,
                    got: OtStep::Response,
                })?;
                let sealed = decode_response(&response.data, self.k)?;
                let s = &sealed[self.choice.index - 1];
                let key = derive_key(self.choice.session_id, self.choice.index, &(s.ephemeral * b));
                open(&key, self.choice.session_id, self.choice.index, &s.ciphertext)?
            }
        };
        self.done = true;
        Ok(out)
    }

    /// Tries the receiver's single key against every ciphertext.
    fn try_open_all(&self, response: &OtMessage) -> Result<Vec<Result<Vec<u8>, OtError>>, OtError> {
        let b = self.secret.ok_or(OtError::WrongBackend(self.backend))?;
        let sealed = decode_response(&response.data, self.k)?;
        Ok(sealed
            .iter()
            .enumerate()
            .map(|(i, s)| {
                // the receiver only ever derives its key from b
                let key = derive_key(self.choice.session_id, i + 1, &(s.ephemeral * b));
                open(&key, self.choice.session_id, i + 1, &s.ciphertext)
            })
            .collect())
    }
}

/// The trusted functionality of the ideal backend.
pub fn ideal_respond(setup: &OtMessage, request: &OtMessage) -> Result<OtMessage, OtError> {
    check_session(setup.session_id, setup, OtStep::Setup)?;
    check_session(setup.session_id, request, OtStep::Request)?;
    let payloads = decode_payloads(&setup.data)?;
    let mut r = Reader(&request.data);
    let index = r.u32("choice")?;
    r.finish("trailing choice bytes")?;
    let payload = index
        .checked_sub(1)
        .and_then(|i| payloads.get(i))
        .ok_or(OtError::IndexOutOfRange {
            index,
            k: payloads.len(),
        })?;
    Ok(OtMessage {
        step: OtStep::Response,
        session_id: setup.session_id,
        data: payload.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OtSeeds {
    pub sender: u64,
    pub receiver: u64,
}

/// Runs a whole session in-process.
pub fn ot_run(
    offer: &OtOffer,
    choice: OtChoice,
    backend: Backend,
    seeds: OtSeeds,
) -> Result<(Vec<u8>, OtTranscript), OtError> {
    if choice.session_id != offer.session_id {
        return Err(OtError::SessionMismatch {
            expected: offer.session_id,
            got: choice.session_id,
        });
    }
    let mut sender = OtSender::new(backend, offer.clone(), seeds.sender);
    let mut receiver = OtReceiver::new(backend, choice, offer.k(), seeds.receiver)?;
    let mut transcript = OtTranscript::default();

    let setup = sender.setup()?;
    transcript.push(setup.clone());
    let request = receiver.request(Some(&setup))?;
    transcript.push(request.clone());
    let response = match backend {
        Backend::Ideal => ideal_respond(&setup, &request)?,
        Backend::Group => sender.respond(&request)?,
    };
    transcript.push(response.clone());
    let received = receiver.finish(&response)?;
    Ok((received, transcript))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsolationReport {
    /// 1-based indices the receiver's key opened.
    pub opened: Vec<usize>,
    /// 1-based indices that failed authentication.
    pub failed: Vec<usize>,
    /// The chosen index failed to open, or opened to the wrong bytes.
    pub corrupted: bool,
}

/// Replays the receiver of a completed group session from its seed and
/// attempts to open every ciphertext in the transcript with its one key.
pub fn ot_verify_receiver_isolation(
    offer: &OtOffer,
    choice: OtChoice,
    receiver_seed: u64,
    transcript: &OtTranscript,
) -> Result<IsolationReport, OtError> {
    let setup = transcript.find(OtStep::Setup).ok_or(OtError::Malformed("transcript setup"))?;
    let response = transcript
        .find(OtStep::Response)
        .ok_or(OtError::Malformed("transcript response"))?;
    let mut receiver = OtReceiver::new(Backend::Group, choice, offer.k(), receiver_seed)?;
    receiver.request(Some(setup))?;
    let attempts = receiver.try_open_all(response)?;

    let mut report = IsolationReport {
        opened: Vec::new(),
        failed: Vec::new(),
        corrupted: false,
    };
    for (i, attempt) in attempts.into_iter().enumerate() {
        let index = i + 1;
        match attempt {
            Ok(bytes) => {
                if index == choice.index && offer.payload(index) != Some(bytes.as_slice()) {
                    report.corrupted = true;
                }
                report.opened.push(index);
            }
            Err(_) => {
                if index == choice.index {
                    report.corrupted = true;
                }
                report.failed.push(index);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offer(session_id: u64, values: &[u64]) -> OtOffer {
        OtOffer::new(session_id, values.iter().map(|&v| encode_residue(v)).collect()).unwrap()
    }

    const SEEDS: OtSeeds = OtSeeds {
        sender: 1,
        receiver: 2,
    };

    #[test]
    fn example_one_bidder_three() {
        // c_x + 300 mod 1987 for every price position
        let codes = [5u64, 9, 15, 30, 60, 120, 250, 500, 1000];
        let payloads: Vec<u64> = codes.iter().map(|c| (c + 300) % 1987).collect();
        let o = offer(3, &payloads);
        for backend in [Backend::Ideal, Backend::Group] {
            let (got, t) = ot_run(&o, OtChoice { session_id: 3, index: 8 }, backend, SEEDS).unwrap();
            assert_eq!(decode_residue(&got).unwrap(), 800);
            assert_eq!(t.messages().len(), 3);
        }
    }

    #[test]
    fn single_payload() {
        let o = offer(0, &[77]);
        for backend in [Backend::Ideal, Backend::Group] {
            let (got, _) = ot_run(&o, OtChoice { session_id: 0, index: 1 }, backend, SEEDS).unwrap();
            assert_eq!(decode_residue(&got).unwrap(), 77);
        }
    }

    #[test]
    fn errors() {
        let o = offer(5, &[1, 2, 3]);
        assert_eq!(
            ot_run(&o, OtChoice { session_id: 5, index: 4 }, Backend::Group, SEEDS).unwrap_err(),
            OtError::IndexOutOfRange { index: 4, k: 3 }
        );
        assert_eq!(
            ot_run(&o, OtChoice { session_id: 5, index: 0 }, Backend::Ideal, SEEDS).unwrap_err(),
            OtError::IndexOutOfRange { index: 0, k: 3 }
        );
        assert_eq!(
            ot_run(&o, OtChoice { session_id: 6, index: 1 }, Backend::Ideal, SEEDS).unwrap_err(),
            OtError::SessionMismatch { expected: 5, got: 6 }
        );
        assert_eq!(OtOffer::new(1, vec![]).unwrap_err(), OtError::EmptyOffer);
    }

    #[test]
    fn malformed_messages_abort() {
        let o = offer(9, &[1, 2, 3]);
        let mut sender = OtSender::new(Backend::Group, o.clone(), 1);
        let mut receiver = OtReceiver::new(Backend::Group, OtChoice { session_id: 9, index: 2 }, 3, 2).unwrap();
        let mut setup = sender.setup().unwrap();
        setup.data.truncate(10);
        assert!(matches!(receiver.request(Some(&setup)), Err(OtError::Malformed(_))));

        let mut sender = OtSender::new(Backend::Group, o, 1);
        sender.setup().unwrap();
        let bogus = OtMessage {
            step: OtStep::Request,
            session_id: 9,
            data: vec![0xff; 32],
        };
        assert!(matches!(sender.respond(&bogus), Err(OtError::Malformed(_))));
        let wrong_step = OtMessage {
            step: OtStep::Setup,
            session_id: 9,
            data: vec![],
        };
        assert!(matches!(sender.respond(&wrong_step), Err(OtError::OutOfOrder { .. })));
    }

    #[test]
    fn deterministic_transcripts() {
        let o = offer(4, &[10, 20, 30, 40]);
        let c = OtChoice { session_id: 4, index: 3 };
        let (_, a) = ot_run(&o, c, Backend::Group, SEEDS).unwrap();
        let (_, b) = ot_run(&o, c, Backend::Group, SEEDS).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn group_message_lengths_do_not_depend_on_choice() {
        let o = offer(4, &[10, 20, 30, 40, 50]);
        let lens: Vec<Vec<usize>> = (1..=5)
            .map(|i| {
                let (_, t) = ot_run(&o, OtChoice { session_id: 4, index: i }, Backend::Group, SEEDS).unwrap();
                t.messages().iter().map(|m| m.data.len()).collect()
            })
            .collect();
        assert!(lens.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn isolation_single_and_tampered() {
        let o = offer(1, &[42]);
        let c = OtChoice { session_id: 1, index: 1 };
        let (_, t) = ot_run(&o, c, Backend::Group, SEEDS).unwrap();
        let r = ot_verify_receiver_isolation(&o, c, SEEDS.receiver, &t).unwrap();
        assert_eq!((r.opened.len(), r.failed.len(), r.corrupted), (1, 0, false));
    }
}
