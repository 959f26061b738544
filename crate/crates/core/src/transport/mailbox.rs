use std::collections::{BTreeMap, HashSet};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use super::frame::{decode_message, RoundMessage};
use crate::error::{Error, Result};

#[derive(Default)]
struct State {
    pending: BTreeMap<u32, BTreeMap<u16, RoundMessage>>,
    seen: HashSet<(u32, u16)>,
    fault: Option<String>,
}

/// Receive side of one node: validated messages keyed by round and sender.
pub(crate) struct Mailbox {
    owner: u16,
    peers: Vec<u16>,
    expected_len: Option<usize>,
    state: Mutex<State>,
    arrived: Condvar,
}

impl Mailbox {
    pub(crate) fn new(owner: u16, peers: Vec<u16>, expected_len: Option<usize>) -> Self {
        Mailbox {
            owner,
            peers,
            expected_len,
            state: Mutex::new(State::default()),
            arrived: Condvar::new(),
        }
    }

    fn validate(&self, msg: &RoundMessage) -> Result<()> {
        if msg.round == 0 {
            return Err(Error::Protocol(format!("node {} sent round 0", msg.node_id)));
        }
        if msg.node_id == self.owner || !self.peers.contains(&msg.node_id) {
            return Err(Error::Protocol(format!(
                "node {} received a message from unknown node {}",
                self.owner, msg.node_id
            )));
        }
        if let Some(n) = self.expected_len {
            if msg.gradient.len() != n {
                return Err(Error::Protocol(format!(
                    "node {} sent {} gradient values, session expects {n}",
                    msg.node_id,
                    msg.gradient.len()
                )));
            }
        }
        Ok(())
    }

    /// Decodes and files one frame. A rejected frame also poisons the
    /// mailbox so the next gather reports it.
    pub(crate) fn deliver_frame(&self, bytes: &[u8]) -> Result<()> {
        let msg = decode_message(bytes);
        let result = msg.and_then(|m| self.deliver(m));
        if let Err(e) = &result {
            self.fail(e.to_string());
        }
        result
    }

    fn deliver(&self, msg: RoundMessage) -> Result<()> {
        self.validate(&msg)?;
        let mut st = self.state.lock().expect("mailbox lock");
        if !st.seen.insert((msg.round, msg.node_id)) {
            return Err(Error::Protocol(format!(
                "duplicate message for round {} from node {}",
                msg.round, msg.node_id
            )));
        }
        st.pending
            .entry(msg.round)
            .or_default()
            .insert(msg.node_id, msg);
        drop(st);
        self.arrived.notify_all();
        Ok(())
    }

    pub(crate) fn fail(&self, reason: String) {
        let mut st = self.state.lock().expect("mailbox lock");
        st.fault.get_or_insert(reason);
        drop(st);
        self.arrived.notify_all();
    }

    pub(crate) fn gather(&self, round: u32, timeout: Duration) -> Result<Vec<RoundMessage>> {
        let deadline = Instant::now() + timeout;
        let mut st = self.state.lock().expect("mailbox lock");
        loop {
            if let Some(f) = &st.fault {
                return Err(Error::Protocol(f.clone()));
            }
            let have = st.pending.get(&round).map_or(0, BTreeMap::len);
            if have == self.peers.len() {
                let msgs = st.pending.remove(&round).unwrap_or_default();
                return Ok(msgs.into_values().collect());
            }
            let now = Instant::now();
            if now >= deadline {
                let present = st.pending.get(&round);
                let missing = self
                    .peers
                    .iter()
                    .copied()
                    .filter(|p| present.is_none_or(|m| !m.contains_key(p)))
                    .collect();
                return Err(Error::Timeout { round, missing });
            }
            st = self
                .arrived
                .wait_timeout(st, deadline - now)
                .expect("mailbox lock")
                .0;
        }
    }
}
