//! Binary descriptor database files.
//!
//! Little-endian layout: magic `L2BD`, u32 version, `r_s` and `r_a` as f64,
//! u32 key count, then per key six i32 bins, a u32 triplet count and each
//! triplet as three corners of six f64 (position, first wall direction,
//! second wall direction). A trailer follows with the source tag (u8), the
//! floor id (u32 length + UTF-8), the inserted triplet count (u64) and the
//! model walls (u32 count + four f64 each). Keys are written in ascending
//! order so identical databases produce identical files.

use std::path::Path;

use super::{CornerFeature, DbSource, DescriptorDB, DescriptorKey, Triplet};
use crate::error::{Error, Result};
use crate::geometry::{LineSegment2, Point2};

pub const DB_MAGIC: &[u8; 4] = b"L2BD";
pub const DB_VERSION: u32 = 1;

pub fn encode_db(db: &DescriptorDB) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(DB_MAGIC);
    buf.extend_from_slice(&DB_VERSION.to_le_bytes());
    buf.extend_from_slice(&db.r_s.to_le_bytes());
    buf.extend_from_slice(&db.r_a_deg.to_le_bytes());
    let keys = db.sorted_keys();
    buf.extend_from_slice(&(keys.len() as u32).to_le_bytes());
    for key in &keys {
        for b in key.0 {
            buf.extend_from_slice(&b.to_le_bytes());
        }
        let bucket = db.bucket(key);
        buf.extend_from_slice(&(bucket.len() as u32).to_le_bytes());
        for t in bucket {
            for c in t {
                for v in [c.position.x, c.position.y, c.wall_dirs[0].x, c.wall_dirs[0].y, c.wall_dirs[1].x, c.wall_dirs[1].y] {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    buf.push(match db.source {
        DbSource::Submap => 0,
        DbSource::Model => 1,
    });
    buf.extend_from_slice(&(db.floor_id.len() as u32).to_le_bytes());
    buf.extend_from_slice(db.floor_id.as_bytes());
    buf.extend_from_slice(&(db.n_triplets as u64).to_le_bytes());
    buf.extend_from_slice(&(db.walls.len() as u32).to_le_bytes());
    for w in &db.walls {
        for v in [w.p0.x, w.p0.y, w.p1.x, w.p1.y] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    source_name: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::parse(self.source_name, 0, format!("truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn point(&mut self) -> Result<Point2> {
        Ok(Point2::new(self.f64()?, self.f64()?))
    }

    fn fail(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.source_name, 0, msg)
    }
}

pub fn decode_db(bytes: &[u8], source_name: &str) -> Result<DescriptorDB> {
    if bytes.len() < 8 || &bytes[..4] != DB_MAGIC {
        return Err(Error::VersionMismatch(format!("{source_name}: missing L2BD magic")));
    }
    let mut r = Reader { bytes, pos: 4, source_name };
    let version = r.u32()?;
    if version != DB_VERSION {
        return Err(Error::VersionMismatch(format!("{source_name}: descriptor DB version {version}, expected {DB_VERSION}")));
    }
    let (r_s, r_a) = (r.f64()?, r.f64()?);
    if !(r_s > 0.0 && r_a > 0.0) {
        return Err(r.fail(format!("non-positive resolutions ({r_s}, {r_a})")));
    }
    let mut db = DescriptorDB::new(r_s, r_a, DbSource::Model, "");
    let n_keys = r.u32()?;
    for _ in 0..n_keys {
        let mut key = [0i32; 6];
        for k in &mut key {
            *k = r.i32()?;
        }
        let n = r.u32()? as usize;
        if n == 0 {
            return Err(r.fail("empty bucket"));
        }
        let mut bucket: Vec<Triplet> = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let mut t = [CornerFeature { position: Point2::ORIGIN, wall_dirs: [Point2::ORIGIN; 2] }; 3];
            for c in &mut t {
                c.position = r.point()?;
                c.wall_dirs = [r.point()?, r.point()?];
            }
            bucket.push(t);
        }
        db.insert_raw(DescriptorKey(key), bucket);
    }
    db.source = match r.take(1)?[0] {
        0 => DbSource::Submap,
        1 => DbSource::Model,
        other => return Err(r.fail(format!("unknown source tag {other}"))),
    };
    let len = r.u32()? as usize;
    db.floor_id = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| r.fail("floor id is not UTF-8"))?;
    db.n_triplets = r.u64()? as usize;
    let n_walls = r.u32()?;
    for _ in 0..n_walls {
        let (a, b) = (r.point()?, r.point()?);
        db.walls.push(LineSegment2::new(a, b).map_err(|e| r.fail(e.to_string()))?);
    }
    if r.pos != bytes.len() {
        return Err(r.fail(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(db)
}

pub fn save_db(db: &DescriptorDB, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_db(db)).map_err(|e| Error::io(path, e))
}

pub fn load_db(path: impl AsRef<Path>) -> Result<DescriptorDB> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_db(&bytes, &path.display().to_string())
}
