//! Binary sample-stream files.
//!
//! Layout: the 8-byte magic `SNYQSTRM`, a little-endian `u32` byte count,
//! that many bytes of JSON header `{rate_hz, n_samples, start_index}`, then
//! `n_samples` pairs of little-endian `f64` (real, imaginary).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::signal_model::SampledStream;
use crate::Complex64;

pub const MAGIC: &[u8; 8] = b"SNYQSTRM";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamHeader {
    pub rate_hz: f64,
    pub n_samples: u64,
    pub start_index: i64,
}

#[derive(Debug, thiserror::Error)]
pub enum StreamError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: malformed stream file: {reason}")]
    Malformed { path: String, reason: String },
}

pub fn encode_stream(stream: &SampledStream) -> Vec<u8> {
    let header = StreamHeader {
        rate_hz: stream.rate_hz,
        n_samples: stream.len() as u64,
        start_index: stream.start_index,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(12 + json.len() + 16 * stream.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for c in &stream.samples {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn decode_stream(bytes: &[u8]) -> Result<SampledStream, String> {
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err("missing SNYQSTRM magic".into());
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body_start = 12usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or("header length exceeds file size")?;
    let header: StreamHeader =
        serde_json::from_slice(&bytes[12..body_start]).map_err(|e| format!("header: {e}"))?;
    let body = &bytes[body_start..];
    let expected = usize::try_from(header.n_samples)
        .ok()
        .and_then(|n| n.checked_mul(16))
        .ok_or("sample count overflows")?;
    if body.len() != expected {
        return Err(format!(
            "header declares {} samples ({expected} bytes) but {} bytes follow",
            header.n_samples,
            body.len()
        ));
    }
    let samples = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    SampledStream::with_start(header.rate_hz, samples, header.start_index).map_err(|e| e.to_string())
}

pub fn write_stream(path: &Path, stream: &SampledStream) -> Result<(), StreamError> {
    fs::write(path, encode_stream(stream)).map_err(|source| StreamError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_stream(path: &Path) -> Result<SampledStream, StreamError> {
    let bytes = fs::read(path).map_err(|source| StreamError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_stream(&bytes).map_err(|reason| StreamError::Malformed {
        path: path.display().to_string(),
        reason,
    })
}
