//! Binary submap files: magic `L2B1`, little-endian u32 point count, gravity
//! as three f32, then `count` f32 `x y z` triples.

use std::path::Path;

use super::Submap;
use crate::error::{Error, Result};
use crate::geometry::Point3;

pub const CLOUD_MAGIC: &[u8; 4] = b"L2B1";

pub fn encode_submap(submap: &Submap) -> Vec<u8> {
    let mut buf = Vec::with_capacity(4 + 4 + 12 + submap.points.len() * 12);
    buf.extend_from_slice(CLOUD_MAGIC);
    buf.extend_from_slice(&(submap.points.len() as u32).to_le_bytes());
    for g in submap.gravity {
        buf.extend_from_slice(&(g as f32).to_le_bytes());
    }
    for p in &submap.points {
        for v in [p.x, p.y, p.z] {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    buf
}

pub fn decode_submap(bytes: &[u8], source_name: &str) -> Result<Submap> {
    if bytes.len() < 4 || &bytes[..4] != CLOUD_MAGIC {
        return Err(Error::VersionMismatch(format!("{source_name}: missing L2B1 magic")));
    }
    let f32_at = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().expect("4 bytes")) as f64;
    if bytes.len() < 20 {
        return Err(Error::parse(source_name, 0, "truncated header"));
    }
    let count = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let expected = 20 + count * 12;
    if bytes.len() != expected {
        return Err(Error::parse(source_name, 0, format!("expected {expected} bytes for {count} points, found {}", bytes.len())));
    }
    let gravity = [f32_at(8), f32_at(12), f32_at(16)];
    let points = (0..count)
        .map(|i| {
            let o = 20 + i * 12;
            Point3::new(f32_at(o), f32_at(o + 4), f32_at(o + 8))
        })
        .collect();
    Submap::new(points, gravity)
}

pub fn save_submap(submap: &Submap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_submap(submap)).map_err(|e| Error::io(path, e))
}

pub fn load_submap(path: impl AsRef<Path>) -> Result<Submap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_submap(&bytes, &path.display().to_string())
}
