use std::collections::{BTreeMap, BTreeSet};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::frame::{to_canonical, FrameError};
use super::PartyId;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("unknown endpoint {0:?}")]
    UnknownEndpoint(PartyId),
    #[error("event ceiling of {0} reached")]
    LivelockGuard(usize),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("transport failure: {0}")]
    Transport(String),
}

/// A message the simulator can route, trace and match adversary rules on.
pub trait NetMessage: Clone + Serialize + DeserializeOwned {
    /// Variant name used by adversary predicates.
    fn variant(&self) -> &'static str;
}

/// Orientation of a message relative to a [`LinkPolicy`]'s `a -> b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase")]
pub enum AdversaryAction {
    Delay { ms: u64 },
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryRule {
    /// Message variant to match; any when absent.
    #[serde(default)]
    pub variant: Option<String>,
    #[serde(default)]
    pub direction: Option<Direction>,
    #[serde(flatten)]
    pub action: AdversaryAction,
    /// Stop matching after this many hits.
    #[serde(default)]
    pub times: Option<u32>,
}

/// Latencies and adversary rules for the link between `a` and `b`. An absent
/// endpoint matches any party.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LinkPolicy {
    #[serde(default)]
    pub a: Option<PartyId>,
    #[serde(default)]
    pub b: Option<PartyId>,
    /// Falls back to the network default when absent.
    #[serde(default)]
    pub forward_latency_ms: Option<u64>,
    #[serde(default)]
    pub reverse_latency_ms: Option<u64>,
    #[serde(default)]
    pub adversary_schedule: Vec<AdversaryRule>,
}

impl LinkPolicy {
    fn orientation(&self, from: &str, to: &str) -> Option<Direction> {
        let is = |slot: &Option<PartyId>, p: &str| slot.as_deref().is_none_or(|s| s == p);
        if is(&self.a, from) && is(&self.b, to) {
            Some(Direction::Forward)
        } else if is(&self.a, to) && is(&self.b, from) {
            Some(Direction::Reverse)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NetPolicy {
    #[serde(default)]
    pub default_latency_ms: u64,
    #[serde(default)]
    pub links: Vec<LinkPolicy>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Disposition {
    Delivered { at_ms: u64 },
    Delayed { at_ms: u64, by_ms: u64 },
    Dropped,
    /// A party-local record rather than a transmission.
    Local,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub logical_time_ms: u64,
    pub sender: PartyId,
    pub receiver: PartyId,
    #[serde(with = "raw_json")]
    pub message: String,
    pub disposition: Disposition,
}

impl TraceEvent {
    pub fn is_local(&self) -> bool {
        self.disposition == Disposition::Local
    }

    pub fn is_dropped(&self) -> bool {
        self.disposition == Disposition::Dropped
    }

    /// The embedded message parsed as `T`, if it parses.
    pub fn parse<T: DeserializeOwned>(&self) -> Option<T> {
        serde_json::from_str(&self.message).ok()
    }
}

mod raw_json {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::value::RawValue;

    pub fn serialize<S: Serializer>(s: &str, ser: S) -> Result<S::Ok, S::Error> {
        RawValue::from_string(s.to_owned())
            .map_err(serde::ser::Error::custom)?
            .serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<String, D::Error> {
        Box::<RawValue>::deserialize(de).map(|r| r.get().to_owned())
    }
}

/// The ordered event log of one run; serialized one event per line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("trace events always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Self { events })
    }

    /// Messages handed to `party`, in the order they were delivered.
    pub fn delivered_to<'a>(&'a self, party: &'a str) -> impl Iterator<Item = &'a TraceEvent> + 'a {
        let mut v: Vec<(u64, usize, &TraceEvent)> = self
            .events
            .iter()
            .enumerate()
            .filter(|(_, e)| e.receiver == party && !e.is_local())
            .filter_map(|(i, e)| match e.disposition {
                Disposition::Delivered { at_ms } | Disposition::Delayed { at_ms, .. } => Some((at_ms, i, e)),
                _ => None,
            })
            .collect();
        v.sort_by_key(|&(t, i, _)| (t, i));
        v.into_iter().map(|(_, _, e)| e)
    }
}

/// A party driven by delivered messages and its own timers.
pub trait Node<M> {
    fn on_message(&mut self, from: &str, msg: M, ctx: &mut Context<M>);
    fn on_timer(&mut self, token: u64, ctx: &mut Context<M>);
}

enum Action<M> {
    Send { to: PartyId, msg: M },
    Timer { at: u64, token: u64 },
    Note(String),
}

/// What a node may do while handling an event.
pub struct Context<M> {
    now: u64,
    me: PartyId,
    actions: Vec<Action<M>>,
}

impl<M> Context<M> {
    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn me(&self) -> &str {
        &self.me
    }

    pub fn send(&mut self, to: impl Into<PartyId>, msg: M) {
        self.actions.push(Action::Send { to: to.into(), msg });
    }

    pub fn timer_at(&mut self, at: u64, token: u64) {
        self.actions.push(Action::Timer {
            at: at.max(self.now),
            token,
        });
    }

    pub fn timer_after(&mut self, delay: u64, token: u64) {
        self.timer_at(self.now + delay, token);
    }

    /// Appends a local record to the trace.
    pub fn note(&mut self, record: &impl Serialize) {
        let text = to_canonical(record).expect("notes always serialize");
        self.actions.push(Action::Note(text));
    }
}

/// Carries a message across a real transport before delivery.
pub trait Courier<M> {
    fn carry(&mut self, from: &str, to: &str, msg: &M) -> Result<M, NetError>;
}

enum Pending<M> {
    Deliver { from: PartyId, to: PartyId, msg: M },
    Timer { party: PartyId, token: u64 },
}

/// Single-threaded discrete-event network. Events run in (time, insertion)
/// order, so a run is fully determined by its inputs.
pub struct SimNet<M> {
    now: u64,
    seq: u64,
    queue: BTreeMap<(u64, u64), Pending<M>>,
    endpoints: BTreeSet<PartyId>,
    policy: NetPolicy,
    rule_hits: BTreeMap<(usize, usize), u32>,
    trace: Trace,
    max_events: usize,
    processed: usize,
    courier: Option<Box<dyn Courier<M>>>,
}

impl<M: NetMessage> SimNet<M> {
    pub fn new(policy: NetPolicy) -> Self {
        Self {
            now: 0,
            seq: 0,
            queue: BTreeMap::new(),
            endpoints: BTreeSet::new(),
            policy,
            rule_hits: BTreeMap::new(),
            trace: Trace::default(),
            max_events: 1_000_000,
            processed: 0,
            courier: None,
        }
    }

    pub fn with_max_events(mut self, max: usize) -> Self {
        self.max_events = max;
        self
    }

    pub fn with_courier(mut self, courier: Box<dyn Courier<M>>) -> Self {
        self.courier = Some(courier);
        self
    }

    pub fn register(&mut self, party: impl Into<PartyId>) {
        self.endpoints.insert(party.into());
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    fn push(&mut self, at: u64, p: Pending<M>) {
        self.queue.insert((at, self.seq), p);
        self.seq += 1;
    }

    fn latency(&self, from: &str, to: &str) -> u64 {
        for link in &self.policy.links {
            let latency = match link.orientation(from, to) {
                Some(Direction::Forward) => link.forward_latency_ms,
                Some(Direction::Reverse) => link.reverse_latency_ms,
                None => None,
            };
            if let Some(ms) = latency {
                return ms;
            }
        }
        self.policy.default_latency_ms
    }

    /// Extra delay from matching rules, or `None` when a rule drops.
    fn adversary(&mut self, from: &str, to: &str, variant: &str) -> Option<u64> {
        let mut extra = 0u64;
        for (li, link) in self.policy.links.iter().enumerate() {
            let Some(dir) = link.orientation(from, to) else {
                continue;
            };
            for (ri, rule) in link.adversary_schedule.iter().enumerate() {
                if rule.variant.as_deref().is_some_and(|v| v != variant) {
                    continue;
                }
                if rule.direction.is_some_and(|d| d != dir) {
                    continue;
                }
                let hits = self.rule_hits.entry((li, ri)).or_insert(0);
                if rule.times.is_some_and(|t| *hits >= t) {
                    continue;
                }
                *hits += 1;
                match rule.action {
                    AdversaryAction::Delay { ms } => extra += ms,
                    AdversaryAction::Drop => return None,
                }
            }
        }
        Some(extra)
    }

    /// Schedules delivery at `now + latency + adversary delay` unless a rule
    /// drops it. Either way the attempt is traced. Returns the delivery time.
    pub fn send(&mut self, from: &str, to: &str, msg: M) -> Result<Option<u64>, NetError> {
        for p in [from, to] {
            if !self.endpoints.contains(p) {
                return Err(NetError::UnknownEndpoint(p.to_owned()));
            }
        }
        let message = to_canonical(&msg)?;
        let base = self.now + self.latency(from, to);
        let (disposition, at) = match self.adversary(from, to, msg.variant()) {
            None => (Disposition::Dropped, None),
            Some(0) => (Disposition::Delivered { at_ms: base }, Some(base)),
            Some(by) => (
                Disposition::Delayed {
                    at_ms: base + by,
                    by_ms: by,
                },
                Some(base + by),
            ),
        };
        self.trace.events.push(TraceEvent {
            logical_time_ms: self.now,
            sender: from.to_owned(),
            receiver: to.to_owned(),
            message,
            disposition,
        });
        if let Some(at) = at {
            self.push(
                at,
                Pending::Deliver {
                    from: from.to_owned(),
                    to: to.to_owned(),
                    msg,
                },
            );
        }
        Ok(at)
    }

    pub fn schedule_timer(&mut self, party: &str, at: u64, token: u64) -> Result<(), NetError> {
        if !self.endpoints.contains(party) {
            return Err(NetError::UnknownEndpoint(party.to_owned()));
        }
        self.push(
            at.max(self.now),
            Pending::Timer {
                party: party.to_owned(),
                token,
            },
        );
        Ok(())
    }

    /// Processes events until the queue is empty.
    pub fn run_until_idle<N: Node<M>>(&mut self, nodes: &mut BTreeMap<PartyId, N>) -> Result<(), NetError> {
        while let Some(((at, _), pending)) = self.queue.pop_first() {
            self.processed += 1;
            if self.processed > self.max_events {
                return Err(NetError::LivelockGuard(self.max_events));
            }
            self.now = at;
            let party = match &pending {
                Pending::Deliver { to, .. } => to.clone(),
                Pending::Timer { party, .. } => party.clone(),
            };
            let node = nodes
                .get_mut(&party)
                .ok_or_else(|| NetError::UnknownEndpoint(party.clone()))?;
            let mut ctx = Context {
                now: at,
                me: party.clone(),
                actions: Vec::new(),
            };
            match pending {
                Pending::Deliver { from, to, msg } => {
                    let msg = match self.courier.as_mut() {
                        Some(c) => c.carry(&from, &to, &msg)?,
                        None => msg,
                    };
                    node.on_message(&from, msg, &mut ctx);
                }
                Pending::Timer { token, .. } => node.on_timer(token, &mut ctx),
            }
            for action in ctx.actions {
                match action {
                    Action::Send { to, msg } => {
                        self.send(&party, &to, msg)?;
                    }
                    Action::Timer { at, token } => self.push(
                        at,
                        Pending::Timer {
                            party: party.clone(),
                            token,
                        },
                    ),
                    Action::Note(message) => self.trace.events.push(TraceEvent {
                        logical_time_ms: at,
                        sender: party.clone(),
                        receiver: party.clone(),
                        message,
                        disposition: Disposition::Local,
                    }),
                }
            }
        }
        Ok(())
    }
}
