//! Round-message framing.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "BNCD"
//!      4     1  version 0x01
//!      5     1  message type 0x01 (round gradient)
//!      6     4  round      u32 LE
//!     10     2  node id    u16 LE
//!     12     4  count      u32 LE
//!     16  8*n   gradient   f64 LE
//!  16+8n     4  crc32 (IEEE) of bytes [0, 16+8n), u32 LE
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, FrameError, Result};

pub const FRAME_MAGIC: [u8; 4] = *b"BNCD";
pub const FRAME_VERSION: u8 = 0x01;
pub const MSG_ROUND_GRADIENT: u8 = 0x01;
pub const HEADER_LEN: usize = 16;
pub const CRC_LEN: usize = 4;

/// One node's flattened gradient for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMessage {
    pub round: u32,
    pub node_id: u16,
    pub gradient: Vec<f64>,
}

/// Total frame length for a gradient of `count` values.
pub fn frame_len(count: usize) -> usize {
    HEADER_LEN + 8 * count + CRC_LEN
}

pub fn encode_message(msg: &RoundMessage) -> Result<Vec<u8>> {
    let count = u32::try_from(msg.gradient.len())
        .map_err(|_| Error::Protocol(format!("gradient of {} values is too long", msg.gradient.len())))?;
    if msg.round == 0 {
        return Err(Error::Protocol("rounds are numbered from 1".into()));
    }
    if let Some(i) = msg.gradient.iter().position(|v| !v.is_finite()) {
        return Err(Error::Protocol(format!(
            "gradient entry {i} is not finite; refusing to send"
        )));
    }
    let mut buf = Vec::with_capacity(frame_len(msg.gradient.len()));
    buf.extend_from_slice(&FRAME_MAGIC);
    buf.push(FRAME_VERSION);
    buf.push(MSG_ROUND_GRADIENT);
    buf.extend_from_slice(&msg.round.to_le_bytes());
    buf.extend_from_slice(&msg.node_id.to_le_bytes());
    buf.extend_from_slice(&count.to_le_bytes());
    for v in &msg.gradient {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

fn incomplete(needed: usize, available: usize) -> Error {
    Error::Frame(FrameError::IncompleteFrame { needed, available })
}

/// Decodes one complete frame.
///
/// Checks run in this order: magic, minimum length, CRC over everything but
/// the trailing four bytes, declared length, version, message type. A frame
/// shorter than its declared count whose CRC fails is reported as
/// incomplete; any other CRC failure is a corrupt frame.
pub fn decode_message(bytes: &[u8]) -> Result<RoundMessage> {
    if bytes.len() < 4 {
        return Err(incomplete(HEADER_LEN + CRC_LEN, bytes.len()));
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != FRAME_MAGIC {
        return Err(FrameError::ForeignProtocol(magic).into());
    }
    if bytes.len() < HEADER_LEN + CRC_LEN {
        return Err(incomplete(HEADER_LEN + CRC_LEN, bytes.len()));
    }
    let count = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let total = frame_len(count);
    let (body, tail) = bytes.split_at(bytes.len() - CRC_LEN);
    let expected = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let actual = crc32fast::hash(body);
    if expected != actual {
        if bytes.len() < total {
            return Err(incomplete(total, bytes.len()));
        }
        return Err(FrameError::CorruptFrame { expected, actual }.into());
    }
    if bytes.len() < total {
        return Err(incomplete(total, bytes.len()));
    }
    if bytes.len() > total {
        return Err(FrameError::TrailingBytes(bytes.len() - total).into());
    }
    if bytes[4] != FRAME_VERSION {
        return Err(FrameError::UnsupportedVersion(bytes[4]).into());
    }
    if bytes[5] != MSG_ROUND_GRADIENT {
        return Err(FrameError::UnknownMessageType(bytes[5]).into());
    }
    let round = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes"));
    let node_id = u16::from_le_bytes(bytes[10..12].try_into().expect("2 bytes"));
    let gradient: Vec<f64> = body[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if gradient.iter().any(|v| !v.is_finite()) {
        return Err(Error::Protocol(format!("node {node_id} sent a non-finite gradient")));
    }
    Ok(RoundMessage {
        round,
        node_id,
        gradient,
    })
}
