//! Capture files: a binary payload of little-endian f32 interleaved I,Q
//! samples (channels concatenated), with a text sidecar header at
//! `<path>.hdr` of `key: value` lines.

use std::path::{Path, PathBuf};

use crate::linksim::Capture;
use crate::{Complex, Error, Result};

pub const FORMAT_VERSION: u32 = 1;

fn header_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

/// Writes the payload at `path` and the sidecar header at `path.hdr`.
///
/// Samples are quantized to f32; the file round-trip (save -> load -> save) is
/// bit-exact.
pub fn save_capture(capture: &Capture, path: &Path) -> Result<()> {
    if capture.channels.is_empty() {
        return Err(Error::InvalidInput("capture has no channels".into()));
    }
    let spc = capture.samples_per_channel();
    if capture.channels.iter().any(|ch| ch.len() != spc) {
        return Err(Error::InvalidInput("channels of unequal length".into()));
    }
    let mut payload = Vec::with_capacity(capture.channels.len() * spc * 8);
    for ch in &capture.channels {
        for v in ch {
            payload.extend_from_slice(&(v.re as f32).to_le_bytes());
            payload.extend_from_slice(&(v.im as f32).to_le_bytes());
        }
    }
    std::fs::write(path, payload)?;
    let mut hdr = String::new();
    hdr.push_str(&format!("format_version: {FORMAT_VERSION}\n"));
    hdr.push_str(&format!("channels: {}\n", capture.channels.len()));
    hdr.push_str(&format!("samples_per_channel: {spc}\n"));
    hdr.push_str(&format!("blocks: {}\n", capture.blocks));
    hdr.push_str(&format!("samples_per_block: {}\n", capture.samples_per_block));
    hdr.push_str(&format!("oversampling: {}\n", capture.oversampling));
    std::fs::write(header_path(path), hdr)?;
    Ok(())
}

struct HeaderFields {
    format_version: u32,
    channels: usize,
    samples_per_channel: usize,
    blocks: usize,
    samples_per_block: usize,
    oversampling: usize,
}

fn parse_header(text: &str) -> Result<HeaderFields> {
    let mut fields = std::collections::HashMap::new();
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            let (key, value) = trimmed.split_once(':').ok_or(Error::Format {
                offset,
                msg: format!("header line without ':' separator: {trimmed:?}"),
            })?;
            fields.insert(key.trim().to_string(), (value.trim().to_string(), offset));
        }
        offset += line.len() as u64;
    }
    let get = |key: &str, required: bool, default: u64| -> Result<u64> {
        match fields.get(key) {
            Some((value, off)) => value.parse::<u64>().map_err(|_| Error::Format {
                offset: *off,
                msg: format!("header key {key} has non-integer value {value:?}"),
            }),
            None if required => Err(Error::Format {
                offset: 0,
                msg: format!("missing required header key {key}"),
            }),
            None => Ok(default),
        }
    };
    let format_version = get("format_version", true, 0)? as u32;
    if format_version != FORMAT_VERSION {
        return Err(Error::Format {
            offset: 0,
            msg: format!("unsupported format_version {format_version}"),
        });
    }
    let channels = get("channels", true, 0)? as usize;
    let samples_per_channel = get("samples_per_channel", true, 0)? as usize;
    let blocks = get("blocks", true, 0)? as usize;
    let samples_per_block = get("samples_per_block", true, 0)? as usize;
    let oversampling = get("oversampling", false, 1)? as usize;
    if channels == 0 || samples_per_block == 0 || blocks == 0 {
        return Err(Error::Format {
            offset: 0,
            msg: "channels, blocks and samples_per_block must be positive".into(),
        });
    }
    if samples_per_channel != blocks * samples_per_block {
        return Err(Error::Format {
            offset: 0,
            msg: format!(
                "samples_per_channel {samples_per_channel} != blocks {blocks} x samples_per_block {samples_per_block}"
            ),
        });
    }
    Ok(HeaderFields {
        format_version,
        channels,
        samples_per_channel,
        blocks,
        samples_per_block,
        oversampling,
    })
}

/// Loads a capture written by [`save_capture`] or any external tool following
/// the format. The result carries no ground truth.
pub fn load_capture(path: &Path) -> Result<Capture> {
    let hdr_text = std::fs::read_to_string(header_path(path))?;
    let hdr = parse_header(&hdr_text)?;
    debug_assert_eq!(hdr.format_version, FORMAT_VERSION);
    let payload = std::fs::read(path)?;
    let expected = hdr.channels * hdr.samples_per_channel * 8;
    if payload.len() < expected {
        return Err(Error::Format {
            offset: payload.len() as u64,
            msg: format!(
                "payload truncated: {} bytes, header implies {expected}",
                payload.len()
            ),
        });
    }
    if payload.len() > expected {
        return Err(Error::Format {
            offset: expected as u64,
            msg: format!(
                "trailing bytes: payload is {} bytes, header implies {expected}",
                payload.len()
            ),
        });
    }
    let mut channels = Vec::with_capacity(hdr.channels);
    let mut pos = 0usize;
    for _ in 0..hdr.channels {
        let mut ch = Vec::with_capacity(hdr.samples_per_channel);
        for _ in 0..hdr.samples_per_channel {
            let re = f32::from_le_bytes(payload[pos..pos + 4].try_into().unwrap());
            let im = f32::from_le_bytes(payload[pos + 4..pos + 8].try_into().unwrap());
            ch.push(Complex::new(re as f64, im as f64));
            pos += 8;
        }
        channels.push(ch);
    }
    Ok(Capture {
        channels,
        blocks: hdr.blocks,
        samples_per_block: hdr.samples_per_block,
        oversampling: hdr.oversampling,
        ground_truth: None,
    })
}
