//! Binary model files.
//!
//! ```text
//! "BNDM" | version u8 | layer_count u32 | (layer_count + 1) × size u32
//!        | canonical parameters f64… | crc32 u32
//! ```
//!
//! All integers and floats are little-endian. `layer_count` counts weight
//! matrices including the head, so the sizes are `[d, h1, …, hk, U]`. The
//! CRC (IEEE polynomial) covers every preceding byte.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Architecture, DbnModel};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: [u8; 4] = *b"BNDM";
pub const MODEL_VERSION: u8 = 0x01;

pub fn encode_model(model: &DbnModel) -> Result<Vec<u8>> {
    model.validate()?;
    if model.grbm.sigma.iter().any(|s| *s != 1.0) {
        return Err(Error::ModelFile(
            "only unit GRBM sigma can be stored; sigma is not part of the file".into(),
        ));
    }
    let sizes = model.architecture().sizes();
    let params = model.flatten();
    let mut buf = Vec::with_capacity(9 + 4 * sizes.len() + 8 * params.len() + 4);
    buf.extend_from_slice(&MODEL_MAGIC);
    buf.push(MODEL_VERSION);
    buf.extend_from_slice(&((sizes.len() - 1) as u32).to_le_bytes());
    for s in &sizes {
        let s = u32::try_from(*s).map_err(|_| Error::ModelFile("layer too large".into()))?;
        buf.extend_from_slice(&s.to_le_bytes());
    }
    for p in &params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn decode_model(bytes: &[u8]) -> Result<DbnModel> {
    let err = |m: String| Error::ModelFile(m);
    if bytes.len() < 13 {
        return Err(err(format!("file too short ({} bytes)", bytes.len())));
    }
    if bytes[..4] != MODEL_MAGIC {
        return Err(err("not a model file (bad magic)".into()));
    }
    if bytes[4] != MODEL_VERSION {
        return Err(err(format!("unsupported model version {:#04x}", bytes[4])));
    }
    let body = &bytes[..bytes.len() - 4];
    let stored = u32_at(bytes, bytes.len() - 4);
    let actual = crc32fast::hash(body);
    if stored != actual {
        return Err(err(format!("checksum mismatch: stored {stored:#010x}, computed {actual:#010x}")));
    }
    let layers = u32_at(bytes, 5) as usize;
    let header_end = 9usize
        .checked_add(4 * (layers + 1))
        .filter(|&e| e <= body.len())
        .ok_or_else(|| err("truncated header".into()))?;
    let sizes: Vec<usize> = (0..=layers).map(|i| u32_at(bytes, 9 + 4 * i) as usize).collect();
    let arch = Architecture::from_sizes(&sizes)?;
    let payload = &body[header_end..];
    if payload.len() != 8 * arch.param_count() {
        return Err(err(format!(
            "expected {} parameters for {:?}, found {} bytes",
            arch.param_count(),
            sizes,
            payload.len()
        )));
    }
    let params: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let model = DbnModel::unflatten(&params, &arch)?;
    model.validate()?;
    Ok(model)
}

pub fn write_model<W: Write>(model: &DbnModel, mut writer: W) -> Result<()> {
    writer.write_all(&encode_model(model)?)?;
    writer.flush()?;
    Ok(())
}

pub fn read_model<R: Read>(mut reader: R) -> Result<DbnModel> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    decode_model(&bytes)
}

pub fn save_model(model: &DbnModel, path: impl AsRef<Path>) -> Result<()> {
    write_model(model, BufWriter::new(File::create(path)?))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<DbnModel> {
    read_model(BufReader::new(File::open(path)?))
}
