//! Loopback TCP carrier. Every delivery is framed, written to the receiving
//! endpoint's socket, read back by that endpoint's reader thread and decoded.

use std::collections::BTreeMap;
use std::io::BufReader;
use std::marker::PhantomData;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::frame::{read_frame, write_frame, FrameError};
use super::sim::{Courier, NetError};
use super::PartyId;

type Inbound<M> = Result<M, String>;

struct Endpoint<M> {
    addr: SocketAddr,
    inbox: Receiver<Inbound<M>>,
    shutdown: Arc<AtomicBool>,
    acceptor: Option<JoinHandle<()>>,
}

/// One listener per endpoint; one writer connection per ordered link.
pub struct LoopbackCourier<M> {
    endpoints: BTreeMap<PartyId, Endpoint<M>>,
    writers: BTreeMap<(PartyId, PartyId), TcpStream>,
    timeout: Duration,
    _msg: PhantomData<fn() -> M>,
}

impl<M> LoopbackCourier<M>
where
    M: Serialize + DeserializeOwned + Send + 'static,
{
    pub fn bind<I, S>(parties: I) -> Result<Self, NetError>
    where
        I: IntoIterator<Item = S>,
        S: Into<PartyId>,
    {
        let io = |e: std::io::Error| NetError::Transport(e.to_string());
        let mut endpoints = BTreeMap::new();
        for party in parties {
            let listener = TcpListener::bind("127.0.0.1:0").map_err(io)?;
            let addr = listener.local_addr().map_err(io)?;
            let (tx, rx) = mpsc::channel();
            let shutdown = Arc::new(AtomicBool::new(false));
            let flag = Arc::clone(&shutdown);
            let acceptor = thread::spawn(move || accept_loop::<M>(listener, tx, flag));
            endpoints.insert(
                party.into(),
                Endpoint {
                    addr,
                    inbox: rx,
                    shutdown,
                    acceptor: Some(acceptor),
                },
            );
        }
        Ok(Self {
            endpoints,
            writers: BTreeMap::new(),
            timeout: Duration::from_secs(10),
            _msg: PhantomData,
        })
    }
}

fn accept_loop<M: DeserializeOwned + Send + 'static>(
    listener: TcpListener,
    tx: Sender<Inbound<M>>,
    shutdown: Arc<AtomicBool>,
) {
    for conn in listener.incoming() {
        if shutdown.load(Ordering::SeqCst) {
            break;
        }
        let Ok(stream) = conn else { continue };
        let tx = tx.clone();
        thread::spawn(move || {
            let mut r = BufReader::new(stream);
            loop {
                match read_frame::<M>(&mut r) {
                    Ok(Some(m)) => {
                        if tx.send(Ok(m)).is_err() {
                            break;
                        }
                    }
                    Ok(None) => break,
                    Err(e) => {
                        let _ = tx.send(Err(e.to_string()));
                        break;
                    }
                }
            }
        });
    }
}

impl<M> Courier<M> for LoopbackCourier<M>
where
    M: Serialize + DeserializeOwned + Send + 'static,
{
    fn carry(&mut self, from: &str, to: &str, msg: &M) -> Result<M, NetError> {
        let endpoint = self
            .endpoints
            .get(to)
            .ok_or_else(|| NetError::UnknownEndpoint(to.to_owned()))?;
        let key = (from.to_owned(), to.to_owned());
        if !self.writers.contains_key(&key) {
            let s = TcpStream::connect(endpoint.addr).map_err(|e| NetError::Transport(e.to_string()))?;
            s.set_nodelay(true).map_err(|e| NetError::Transport(e.to_string()))?;
            self.writers.insert(key.clone(), s);
        }
        let w = self.writers.get_mut(&key).expect("inserted above");
        write_frame(w, msg).map_err(|e| match e {
            FrameError::Io(io) => NetError::Transport(io.to_string()),
            other => NetError::Frame(other),
        })?;
        // Deliveries are synchronous, so the next inbound frame is this one.
        match endpoint.inbox.recv_timeout(self.timeout) {
            Ok(Ok(m)) => Ok(m),
            Ok(Err(e)) => Err(NetError::Transport(e)),
            Err(e) => Err(NetError::Transport(format!("no frame from {from} to {to}: {e}"))),
        }
    }
}

impl<M> Drop for LoopbackCourier<M> {
    fn drop(&mut self) {
        self.writers.clear();
        for ep in self.endpoints.values_mut() {
            ep.shutdown.store(true, Ordering::SeqCst);
            // wake the acceptor so it observes the flag
            let _ = TcpStream::connect(ep.addr);
            if let Some(h) = ep.acceptor.take() {
                let _ = h.join();
            }
        }
    }
}
