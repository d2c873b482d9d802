//! Waveform files: a 16-byte header (`"WV01"`, `u32` sample rate in Hz,
//! `u32` oversample factor, `u32` sample count) followed by interleaved
//! little-endian `f32` I/Q pairs.

use std::path::Path;

use super::Waveform;
use crate::error::{CoreError, Result};
use crate::C64;

pub const MAGIC: &[u8; 4] = b"WV01";
const HEADER_LEN: usize = 16;

pub fn encode(w: &Waveform) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * w.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(w.sample_rate.round() as u32).to_le_bytes());
    out.extend_from_slice(&(w.oversample_factor as u32).to_le_bytes());
    out.extend_from_slice(&(w.len() as u32).to_le_bytes());
    for s in &w.samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// `Ok(None)` for a zero-length input or a header announcing zero samples.
pub fn decode(bytes: &[u8]) -> Result<Option<Waveform>> {
    if bytes.is_empty() {
        return Ok(None);
    }
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(CoreError::Format("not a WV01 waveform file".into()));
    }
    let rate = u32_at(bytes, 4);
    let factor = u32_at(bytes, 8);
    let count = u32_at(bytes, 12) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != count * 8 {
        return Err(CoreError::Format(format!(
            "header announces {count} samples but body holds {} bytes",
            body.len()
        )));
    }
    if count == 0 {
        return Ok(None);
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            C64::new(re as f64, im as f64)
        })
        .collect();
    Waveform::new(samples, rate as f64, factor as usize)
        .map(Some)
        .map_err(|e| CoreError::Format(e.to_string()))
}

pub fn write(path: &Path, w: &Waveform) -> Result<()> {
    std::fs::write(path, encode(w))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Option<Waveform>> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod test {
    use super::*;

    #[test]
    fn round_trip_is_f32_exact() {
        let w = Waveform::new(
            vec![C64::new(0.5, -0.25), C64::new(0.125, 3.0)],
            4_000_000.0,
            4,
        )
        .unwrap();
        let back = decode(&encode(&w)).unwrap().unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn empty_and_corrupt() {
        assert!(decode(&[]).unwrap().is_none());
        let mut b = encode(&Waveform::new(vec![C64::new(1.0, 0.0)], 1e6, 1).unwrap());
        b[0] = b'X';
        assert!(matches!(decode(&b), Err(CoreError::Format(_))));
        let mut b = encode(&Waveform::new(vec![C64::new(1.0, 0.0)], 1e6, 1).unwrap());
        b.pop();
        assert!(matches!(decode(&b), Err(CoreError::Format(_))));
    }
}
