//! Binary portable graymaps (`P5`), written at 16-bit depth.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Signal;

const MAXVAL: u16 = u16::MAX;

/// Writes `x` clamped to `[0, 1]` with maxval 65535 (big-endian samples).
pub fn write_graymap(x: &Signal, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (h, w) = x.require_shape()?;
    let clipped = x.as_slice().iter().filter(|v| !(0.0..=1.0).contains(*v)).count();
    if clipped > 0 {
        log::warn!("{}: clamping {clipped} values outside [0, 1]", path.display());
    }
    let mut bytes = format!("P5\n{w} {h}\n{MAXVAL}\n").into_bytes();
    bytes.reserve(2 * h * w);
    for &v in x.as_slice() {
        let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        bytes.extend_from_slice(&((v * MAXVAL as f64).round() as u16).to_be_bytes());
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads 8- or 16-bit `P5` files into `[0, 1]`.
pub fn read_graymap(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let bad = |reason: &str| Error::Graymap { path: path.to_path_buf(), reason: reason.to_string() };
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?.to_string());
    }
    if fields[0] != "P5" {
        return Err(bad("missing P5 magic number"));
    }
    let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| bad(&format!("invalid {what} `{s}`")));
    let w = num(&fields[1], "width")?;
    let h = num(&fields[2], "height")?;
    let maxval = num(&fields[3], "maxval")?;
    if w == 0 || h == 0 {
        return Err(bad("empty image"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval must lie in 1..=65535"));
    }
    pos += 1;
    let depth = if maxval > 255 { 2 } else { 1 };
    let payload = bytes.get(pos..).unwrap_or_default();
    if payload.len() != depth * w * h {
        return Err(bad(&format!("expected {} payload bytes, found {}", depth * w * h, payload.len())));
    }
    let data = payload
        .chunks_exact(depth)
        .map(|c| {
            let raw = if depth == 2 { u16::from_be_bytes([c[0], c[1]]) as f64 } else { c[0] as f64 };
            (raw / maxval as f64).min(1.0)
        })
        .collect();
    Signal::image(h, w, data)
}
