use std::io::{BufReader, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use log::{debug, warn};

use super::frame::{encode_message, RoundMessage, HEADER_LEN};
use super::mailbox::Mailbox;
use super::Transport;
use crate::error::{Error, Result};

const ACCEPT_POLL: Duration = Duration::from_millis(5);
const CONNECT_RETRY: Duration = Duration::from_millis(20);
/// Upper bound on a single frame, guarding against garbage length prefixes.
const MAX_FRAME: usize = 1 << 30;

/// Identity and address of a remote node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeerAddr {
    pub id: u16,
    pub addr: SocketAddr,
}

impl PeerAddr {
    /// Parses `id@host:port`.
    pub fn parse(s: &str) -> Result<Self> {
        let (id, addr) = s
            .split_once('@')
            .ok_or_else(|| Error::config(format!("peer `{s}` is not of the form id@host:port")))?;
        let id = id
            .parse::<u16>()
            .map_err(|_| Error::config(format!("peer id `{id}` is not a node number")))?;
        let addr = addr
            .to_socket_addrs()
            .map_err(|e| Error::config(format!("cannot resolve `{addr}`: {e}")))?
            .next()
            .ok_or_else(|| Error::config(format!("`{addr}` resolved to nothing")))?;
        Ok(PeerAddr { id, addr })
    }
}

/// A bound listener that has not yet joined the mesh.
pub struct TcpBinding {
    node_id: u16,
    listener: TcpListener,
}

/// Full-mesh transport over TCP. Each frame is preceded by its length as a
/// little-endian `u32`.
pub struct TcpTransport {
    node_id: u16,
    peers: Vec<u16>,
    outgoing: Vec<(u16, Mutex<TcpStream>)>,
    mailbox: Arc<Mailbox>,
    stop: Arc<AtomicBool>,
    readers: Arc<Mutex<Vec<TcpStream>>>,
    acceptor: Option<JoinHandle<()>>,
    local_addr: SocketAddr,
}

impl TcpTransport {
    pub fn bind(node_id: u16, addr: SocketAddr) -> Result<TcpBinding> {
        let listener = TcpListener::bind(addr)?;
        Ok(TcpBinding { node_id, listener })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }
}

impl TcpBinding {
    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Starts accepting and dials every peer, retrying until
    /// `connect_timeout` elapses.
    pub fn connect(
        self,
        peers: &[PeerAddr],
        expected_len: Option<usize>,
        connect_timeout: Duration,
    ) -> Result<TcpTransport> {
        let mut sorted: Vec<PeerAddr> = peers.to_vec();
        sorted.sort_by_key(|p| p.id);
        if sorted.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(Error::config("peer list repeats a node id"));
        }
        if sorted.iter().any(|p| p.id == self.node_id) {
            return Err(Error::config(format!("node {} lists itself as a peer", self.node_id)));
        }
        let ids: Vec<u16> = sorted.iter().map(|p| p.id).collect();
        let mailbox = Arc::new(Mailbox::new(self.node_id, ids.clone(), expected_len));
        let stop = Arc::new(AtomicBool::new(false));
        let readers = Arc::new(Mutex::new(Vec::new()));
        let local_addr = self.listener.local_addr()?;

        self.listener.set_nonblocking(true)?;
        let acceptor = {
            let (mailbox, stop, readers) = (mailbox.clone(), stop.clone(), readers.clone());
            let listener = self.listener;
            thread::Builder::new()
                .name(format!("accept-{}", self.node_id))
                .spawn(move || accept_loop(listener, mailbox, stop, readers))?
        };

        let mut transport = TcpTransport {
            node_id: self.node_id,
            peers: ids,
            outgoing: Vec::new(),
            mailbox,
            stop,
            readers,
            acceptor: Some(acceptor),
            local_addr,
        };
        let deadline = Instant::now() + connect_timeout;
        for peer in &sorted {
            let stream = dial(peer, deadline)?;
            stream.set_nodelay(true)?;
            transport.outgoing.push((peer.id, Mutex::new(stream)));
        }
        Ok(transport)
    }
}

fn dial(peer: &PeerAddr, deadline: Instant) -> Result<TcpStream> {
    loop {
        match TcpStream::connect(peer.addr) {
            Ok(s) => return Ok(s),
            Err(e) if Instant::now() < deadline => {
                debug!("node {} at {} not reachable yet: {e}", peer.id, peer.addr);
                thread::sleep(CONNECT_RETRY);
            }
            Err(e) => {
                return Err(Error::Protocol(format!(
                    "could not connect to node {} at {}: {e}",
                    peer.id, peer.addr
                )))
            }
        }
    }
}

fn accept_loop(
    listener: TcpListener,
    mailbox: Arc<Mailbox>,
    stop: Arc<AtomicBool>,
    readers: Arc<Mutex<Vec<TcpStream>>>,
) {
    while !stop.load(Ordering::Acquire) {
        match listener.accept() {
            Ok((stream, from)) => {
                if stream.set_nonblocking(false).is_err() {
                    continue;
                }
                if let Ok(clone) = stream.try_clone() {
                    readers.lock().expect("reader list").push(clone);
                }
                let mailbox = mailbox.clone();
                let stop = stop.clone();
                let spawned = thread::Builder::new()
                    .name(format!("read-{from}"))
                    .spawn(move || read_loop(stream, mailbox, stop));
                if let Err(e) = spawned {
                    warn!("cannot start reader for {from}: {e}");
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => thread::sleep(ACCEPT_POLL),
            Err(e) => {
                warn!("accept failed: {e}");
                thread::sleep(ACCEPT_POLL);
            }
        }
    }
}

fn read_loop(stream: TcpStream, mailbox: Arc<Mailbox>, stop: Arc<AtomicBool>) {
    let mut reader = BufReader::new(stream);
    let mut len_buf = [0u8; 4];
    loop {
        if reader.read_exact(&mut len_buf).is_err() {
            return;
        }
        let len = u32::from_le_bytes(len_buf) as usize;
        if !(HEADER_LEN..=MAX_FRAME).contains(&len) {
            mailbox.fail(format!("peer announced an implausible frame of {len} bytes"));
            return;
        }
        let mut frame = vec![0u8; len];
        if let Err(e) = reader.read_exact(&mut frame) {
            if !stop.load(Ordering::Acquire) {
                mailbox.fail(format!("connection dropped inside a frame: {e}"));
            }
            return;
        }
        if let Err(e) = mailbox.deliver_frame(&frame) {
            warn!("rejected frame: {e}");
            return;
        }
    }
}

impl Transport for TcpTransport {
    fn node_id(&self) -> u16 {
        self.node_id
    }

    fn peers(&self) -> &[u16] {
        &self.peers
    }

    fn broadcast(&self, msg: &RoundMessage) -> Result<()> {
        if msg.node_id != self.node_id {
            return Err(Error::Protocol(format!(
                "node {} cannot send as node {}",
                self.node_id, msg.node_id
            )));
        }
        let frame = encode_message(msg)?;
        let len = u32::try_from(frame.len())
            .map_err(|_| Error::Protocol("frame exceeds 4 GiB".into()))?;
        for (id, stream) in &self.outgoing {
            let mut s = stream.lock().expect("stream lock");
            s.write_all(&len.to_le_bytes())
                .and_then(|_| s.write_all(&frame))
                .and_then(|_| s.flush())
                .map_err(|e| Error::Protocol(format!("send to node {id} failed: {e}")))?;
        }
        Ok(())
    }

    fn gather(&self, round: u32, timeout: Duration) -> Result<Vec<RoundMessage>> {
        self.mailbox.gather(round, timeout)
    }
}

impl Drop for TcpTransport {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Release);
        for (_, s) in &self.outgoing {
            if let Ok(s) = s.lock() {
                let _ = s.shutdown(Shutdown::Both);
            }
        }
        if let Ok(readers) = self.readers.lock() {
            for s in readers.iter() {
                let _ = s.shutdown(Shutdown::Both);
            }
        }
        if let Some(handle) = self.acceptor.take() {
            let _ = handle.join();
        }
    }
}

/// Everything a node needs to join a socket session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub node_id: u16,
    /// Total number of nodes `L`, including this one.
    pub nodes: usize,
    pub listen: SocketAddr,
    pub peers: Vec<PeerAddr>,
    /// Gradient length agreed for the session.
    pub expected_len: Option<usize>,
    /// How long to keep dialing peers that are not up yet.
    pub connect_timeout: Duration,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::config("a session needs at least one node"));
        }
        if self.peers.len() + 1 != self.nodes {
            return Err(Error::config(format!(
                "{} nodes need {} peer addresses, got {}",
                self.nodes,
                self.nodes - 1,
                self.peers.len()
            )));
        }
        Ok(())
    }

    pub fn connect(&self) -> Result<TcpTransport> {
        self.validate()?;
        TcpTransport::bind(self.node_id, self.listen)?.connect(
            &self.peers,
            self.expected_len,
            self.connect_timeout,
        )
    }
}

/// Builds a full mesh of `nodes` endpoints (ids `1..=nodes`) on ephemeral
/// loopback ports.
pub fn loopback_mesh(
    nodes: usize,
    expected_len: Option<usize>,
    connect_timeout: Duration,
) -> Result<Vec<TcpTransport>> {
    if nodes == 0 || nodes > usize::from(u16::MAX) {
        return Err(Error::config(format!("cannot build a mesh of {nodes} nodes")));
    }
    let any = SocketAddr::from(([127, 0, 0, 1], 0));
    let bindings = (1..=nodes as u16)
        .map(|id| TcpTransport::bind(id, any))
        .collect::<Result<Vec<_>>>()?;
    let addrs = bindings
        .iter()
        .map(|b| Ok(PeerAddr { id: b.node_id, addr: b.local_addr()? }))
        .collect::<Result<Vec<_>>>()?;
    bindings
        .into_iter()
        .map(|b| {
            let peers: Vec<PeerAddr> = addrs.iter().filter(|p| p.id != b.node_id).cloned().collect();
            b.connect(&peers, expected_len, connect_timeout)
        })
        .collect()
}
