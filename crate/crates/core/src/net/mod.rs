//! Message transport: framing, a deterministic discrete-event simulator with
//! adversarial link controls, and a loopback TCP carrier.

mod frame;
mod sim;
mod stream;

pub use frame::{
    frame, read_frame, to_canonical, unframe, write_frame, FrameError, MAX_FRAME,
};
pub use sim::{
    AdversaryAction, AdversaryRule, Context, Courier, Direction, Disposition, LinkPolicy,
    NetError, NetMessage, NetPolicy, Node, SimNet, Trace, TraceEvent,
};
pub use stream::LoopbackCourier;

pub type PartyId = String;
