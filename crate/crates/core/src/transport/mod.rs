//! Exchange of round gradients between nodes.
//!
//! Every node broadcasts one [`RoundMessage`] per round to all peers and then
//! gathers exactly one message from each peer for the same round. Messages
//! for later rounds are buffered until asked for. Both delivery mechanisms
//! carry the same byte frames.

mod frame;
mod inproc;
mod mailbox;
mod tcp;

use std::time::Duration;

use crate::error::Result;

pub use frame::{
    decode_message, encode_message, frame_len, RoundMessage, CRC_LEN, FRAME_MAGIC, FRAME_VERSION,
    HEADER_LEN, MSG_ROUND_GRADIENT,
};
pub use inproc::{InProcessBus, InProcessEndpoint};
pub use tcp::{loopback_mesh, PeerAddr, SessionConfig, TcpBinding, TcpTransport};

/// Default time a node waits for missing peers before aborting the round.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// A node's view of the full mesh.
pub trait Transport: Send + Sync {
    fn node_id(&self) -> u16;

    /// Ids of every other node, ascending.
    fn peers(&self) -> &[u16];

    /// Sends `msg` to every peer.
    fn broadcast(&self, msg: &RoundMessage) -> Result<()>;

    /// Blocks until one message per peer for `round` has arrived, returning
    /// them ordered by node id. Fails with [`crate::Error::Timeout`] naming
    /// the silent peers.
    fn gather(&self, round: u32, timeout: Duration) -> Result<Vec<RoundMessage>>;
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn node_id(&self) -> u16 {
        (**self).node_id()
    }

    fn peers(&self) -> &[u16] {
        (**self).peers()
    }

    fn broadcast(&self, msg: &RoundMessage) -> Result<()> {
        (**self).broadcast(msg)
    }

    fn gather(&self, round: u32, timeout: Duration) -> Result<Vec<RoundMessage>> {
        (**self).gather(round, timeout)
    }
}
