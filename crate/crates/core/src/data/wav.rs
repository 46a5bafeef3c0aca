//! Minimal RIFF/WAVE reader and writer: mono, 16/24-bit PCM or 32-bit
//! float in, 32-bit float out.

use crate::error::{Error, Result};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct WavData {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

fn rd_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn rd_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Parses a mono WAV. 16-bit samples map as value / 32768 (so -32768 is
/// exactly -1.0), 24-bit as value / 8388608, floats pass through.
pub fn parse_wav(bytes: &[u8]) -> Result<WavData> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Data("not a RIFF/WAVE file".into()));
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = rd_u32(bytes, pos + 4) as usize;
        let body_end = pos + 8 + size;
        if body_end > bytes.len() {
            return Err(Error::Data("truncated WAV chunk".into()));
        }
        let body = &bytes[pos + 8..body_end];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::Data("fmt chunk too small".into()));
                }
                fmt = Some((rd_u16(body, 0), rd_u16(body, 2), rd_u32(body, 4), rd_u16(body, 14)));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos = body_end + (size & 1); // chunks are word-aligned
    }
    let (format, channels, sample_rate, bits) =
        fmt.ok_or_else(|| Error::Data("WAV missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Data("WAV missing data chunk".into()))?;
    if channels != 1 {
        return Err(Error::Data(format!(
            "only mono WAVs are supported, file has {channels} channels"
        )));
    }
    let samples = match (format, bits) {
        (1, 16) => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
            .collect(),
        (1, 24) => data
            .chunks_exact(3)
            .map(|c| {
                let raw = ((c[2] as i32) << 16 | (c[1] as i32) << 8 | c[0] as i32) << 8 >> 8;
                raw as f64 / 8_388_608.0
            })
            .collect(),
        (3, 32) => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        (f, b) => {
            return Err(Error::Data(format!(
                "unsupported WAV encoding: format {f}, {b} bits"
            )))
        }
    };
    Ok(WavData {
        samples,
        sample_rate,
    })
}

pub fn load_wav(path: &Path) -> Result<WavData> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    parse_wav(&bytes)
}

/// Serializes to 32-bit float mono; values that fit f32 round-trip
/// bit-exactly through save -> load.
pub fn render_wav(samples: &[f64], sample_rate: u32) -> Vec<u8> {
    let data_len = samples.len() * 4;
    let mut out = Vec::with_capacity(58 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((50 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&3u16.to_le_bytes()); // IEEE float
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 4).to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&32u16.to_le_bytes());
    out.extend_from_slice(b"fact");
    out.extend_from_slice(&4u32.to_le_bytes());
    out.extend_from_slice(&(samples.len() as u32).to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in samples {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    out
}

pub fn save_wav(path: &Path, samples: &[f64], sample_rate: u32) -> Result<()> {
    std::fs::write(path, render_wav(samples, sample_rate))
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}
