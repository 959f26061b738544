use std::sync::Arc;
use std::time::Duration;

use super::frame::{encode_message, RoundMessage};
use super::mailbox::Mailbox;
use super::Transport;
use crate::error::{Error, Result};

/// Shared in-memory mesh for simulating `L` nodes inside one process.
/// Messages still travel as encoded frames.
pub struct InProcessBus {
    mailboxes: Vec<Mailbox>,
    ids: Vec<u16>,
}

/// One node's handle onto an [`InProcessBus`].
pub struct InProcessEndpoint {
    bus: Arc<InProcessBus>,
    index: usize,
    peers: Vec<u16>,
}

impl InProcessBus {
    /// Creates endpoints for nodes `1..=nodes`.
    pub fn create(nodes: usize, expected_len: Option<usize>) -> Result<Vec<InProcessEndpoint>> {
        if nodes == 0 || nodes > u16::MAX as usize {
            return Err(Error::config(format!("cannot build a bus for {nodes} nodes")));
        }
        let ids: Vec<u16> = (1..=nodes as u16).collect();
        let mailboxes = ids
            .iter()
            .map(|&id| {
                let peers = ids.iter().copied().filter(|&p| p != id).collect();
                Mailbox::new(id, peers, expected_len)
            })
            .collect();
        let bus = Arc::new(InProcessBus { mailboxes, ids: ids.clone() });
        Ok((0..nodes)
            .map(|index| InProcessEndpoint {
                bus: Arc::clone(&bus),
                index,
                peers: ids.iter().copied().filter(|&p| p != ids[index]).collect(),
            })
            .collect())
    }
}

impl InProcessEndpoint {
    /// Hands a raw frame to this endpoint as if a peer had sent it.
    pub fn inject_frame(&self, bytes: &[u8]) -> Result<()> {
        self.bus.mailboxes[self.index].deliver_frame(bytes)
    }
}

impl Transport for InProcessEndpoint {
    fn node_id(&self) -> u16 {
        self.bus.ids[self.index]
    }

    fn peers(&self) -> &[u16] {
        &self.peers
    }

    fn broadcast(&self, msg: &RoundMessage) -> Result<()> {
        if msg.node_id != self.node_id() {
            return Err(Error::Protocol(format!(
                "node {} cannot send as node {}",
                self.node_id(),
                msg.node_id
            )));
        }
        let frame = encode_message(msg)?;
        for (i, mailbox) in self.bus.mailboxes.iter().enumerate() {
            if i != self.index {
                mailbox.deliver_frame(&frame)?;
            }
        }
        Ok(())
    }

    fn gather(&self, round: u32, timeout: Duration) -> Result<Vec<RoundMessage>> {
        self.bus.mailboxes[self.index].gather(round, timeout)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::encode_message;

    fn msg(round: u32, node: u16, v: f64) -> RoundMessage {
        RoundMessage { round, node_id: node, gradient: vec![v] }
    }

    const T: Duration = Duration::from_millis(200);

    #[test]
    fn minimal_mesh() {
        let eps = InProcessBus::create(2, Some(1)).unwrap();
        eps[0].broadcast(&msg(1, 1, 1.0)).unwrap();
        eps[1].broadcast(&msg(1, 2, 2.0)).unwrap();
        assert_eq!(eps[0].gather(1, T).unwrap(), vec![msg(1, 2, 2.0)]);
        assert_eq!(eps[1].gather(1, T).unwrap(), vec![msg(1, 1, 1.0)]);
    }

    #[test]
    fn later_rounds_are_buffered() {
        let eps = InProcessBus::create(3, None).unwrap();
        eps[1].broadcast(&msg(2, 2, 20.0)).unwrap();
        eps[1].broadcast(&msg(1, 2, 10.0)).unwrap();
        eps[2].broadcast(&msg(1, 3, 11.0)).unwrap();
        let r1 = eps[0].gather(1, T).unwrap();
        assert_eq!(r1, vec![msg(1, 2, 10.0), msg(1, 3, 11.0)]);
        eps[2].broadcast(&msg(2, 3, 21.0)).unwrap();
        assert_eq!(eps[0].gather(2, T).unwrap(), vec![msg(2, 2, 20.0), msg(2, 3, 21.0)]);
    }

    #[test]
    fn silent_peer_times_out() {
        let eps = InProcessBus::create(3, None).unwrap();
        eps[1].broadcast(&msg(1, 2, 1.0)).unwrap();
        match eps[0].gather(1, Duration::from_millis(30)) {
            Err(Error::Timeout { round: 1, missing }) => assert_eq!(missing, vec![3]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicates_and_impostors() {
        let eps = InProcessBus::create(2, Some(1)).unwrap();
        eps[1].broadcast(&msg(1, 2, 1.0)).unwrap();
        let dup = encode_message(&msg(1, 2, 5.0)).unwrap();
        assert!(matches!(eps[0].inject_frame(&dup), Err(Error::Protocol(_))));
        assert!(matches!(eps[0].gather(1, T), Err(Error::Protocol(_))));
        assert!(eps[1].broadcast(&msg(1, 1, 1.0)).is_err());
    }

    #[test]
    fn wrong_length_rejected() {
        let eps = InProcessBus::create(2, Some(2)).unwrap();
        assert!(eps[0].broadcast(&msg(1, 1, 1.0)).is_err());
    }

    #[test]
    fn single_node_gathers_nothing() {
        let eps = InProcessBus::create(1, None).unwrap();
        eps[0].broadcast(&msg(1, 1, 1.0)).unwrap();
        assert!(eps[0].gather(1, T).unwrap().is_empty());
    }
}
