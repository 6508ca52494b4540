//! `ANIS` binary field format and CSV export.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "ANIS" | version u32 = 1 | N u32 | s u32 | p f64
//!        | dims u64 x N | spacing f64 x N | origin f64 x N
//!        | crc32(all preceding bytes) u32
//! payload f64 x prod(dims), row-major, last axis fastest
//! crc32(payload bytes) u32
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Grid, ScalarField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ANIS";
pub const VERSION: u32 = 1;

/// Upper bound on N accepted when decoding.
const MAX_DIMS: u32 = 16;

pub fn encode(field: &ScalarField) -> Vec<u8> {
    let g = field.grid();
    let n = g.ndim();
    let mut buf = Vec::with_capacity(4 + 12 + 8 + 24 * n + 4 + 8 * g.len() + 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&(g.split() as u32).to_le_bytes());
    buf.extend_from_slice(&g.p().to_le_bytes());
    for &d in g.dims() {
        buf.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &h in g.spacing() {
        buf.extend_from_slice(&h.to_le_bytes());
    }
    for &o in g.origin() {
        buf.extend_from_slice(&o.to_le_bytes());
    }
    let header_crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&header_crc.to_le_bytes());
    let payload_start = buf.len();
    for &v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let payload_crc = crc32fast::hash(&buf[payload_start..]);
    buf.extend_from_slice(&payload_crc.to_le_bytes());
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }
    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }
    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
    fn f64(&mut self) -> Option<f64> {
        self.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<ScalarField> {
    let mut cur = Cursor { bytes, pos: 0 };
    let bad = || Error::MalformedHeader;
    if cur.take(4).ok_or_else(bad)? != MAGIC {
        return Err(bad());
    }
    if cur.u32().ok_or_else(bad)? != VERSION {
        return Err(bad());
    }
    let n = cur.u32().ok_or_else(bad)?;
    if !(2..=MAX_DIMS).contains(&n) {
        return Err(bad());
    }
    let n = n as usize;
    let s = cur.u32().ok_or_else(bad)? as usize;
    let p = cur.f64().ok_or_else(bad)?;
    let mut dims = Vec::with_capacity(n);
    for _ in 0..n {
        dims.push(cur.u64().ok_or_else(bad)?);
    }
    let mut spacing = Vec::with_capacity(n);
    for _ in 0..n {
        spacing.push(cur.f64().ok_or_else(bad)?);
    }
    let mut origin = Vec::with_capacity(n);
    for _ in 0..n {
        origin.push(cur.f64().ok_or_else(bad)?);
    }
    let header_end = cur.pos;
    let stored = cur.u32().ok_or_else(bad)?;
    if crc32fast::hash(&bytes[..header_end]) != stored {
        return Err(Error::ChecksumMismatch);
    }

    let count = dims
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d))
        .ok_or_else(bad)?;
    let remaining = (bytes.len() - cur.pos) as u64;
    let needed = count.checked_mul(8).and_then(|b| b.checked_add(4)).ok_or_else(bad)?;
    if remaining < needed {
        return Err(Error::TruncatedPayload);
    }
    if remaining > needed {
        return Err(Error::InvalidGrid(format!(
            "{} trailing bytes after payload",
            remaining - needed
        )));
    }
    let dims: Vec<usize> = dims.into_iter().map(|d| d as usize).collect();
    let grid = Grid::new(dims, spacing, origin, s, p).map_err(|_| bad())?;

    let payload = cur.take(8 * count as usize).ok_or(Error::TruncatedPayload)?;
    let stored = cur.u32().ok_or(Error::TruncatedPayload)?;
    if crc32fast::hash(payload) != stored {
        return Err(Error::ChecksumMismatch);
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ScalarField::new(grid, values)
}

pub fn save(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(field))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<ScalarField> {
    decode(&fs::read(path)?)
}

/// One row per node: `x1, …, xN, u`.
pub fn write_csv<W: Write>(field: &ScalarField, out: W) -> Result<()> {
    let g = field.grid();
    let n = g.ndim();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=n).map(|a| format!("x{a}")).collect();
    header.push("u".into());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(n + 1);
    for (i, v) in field.values().iter().enumerate() {
        row.clear();
        row.extend((0..n).map(|a| format!("{:?}", g.coord(i, a))));
        row.push(format!("{v:?}"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_csv(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    write_csv(field, fs::File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::new(vec![4, 3, 5], vec![0.1, 0.2, 0.3], vec![-1.0, 0.5, 2.0], 2, 1.4).unwrap();
        let vals = (0..g.len()).map(|_| rng.gen_range(-1e3..1e3)).collect();
        ScalarField::new(g, vals).unwrap()
    }

    #[test]
    fn file_round_trip() {
        let f = sample(3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.anis");
        save(&f, &path).unwrap();
        let g = load(&path).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample(0));
        assert_eq!(&bytes[..4], b"ANIS");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 1.4);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 4);
        assert_eq!(bytes.len(), 24 + 3 * 24 + 4 + 8 * 60 + 4);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut bytes = encode(&sample(1));
        bytes[0] = b'X';
        let err = decode(&bytes).unwrap_err();
        assert_eq!(err.to_string(), "malformed header");
    }

    #[test]
    fn rejects_short_payload() {
        let bytes = encode(&sample(1));
        let err = decode(&bytes[..bytes.len() - 20]).unwrap_err();
        assert_eq!(err.to_string(), "truncated payload");
    }

    #[test]
    fn rejects_flipped_bits() {
        let mut bytes = encode(&sample(2));
        let k = bytes.len() - 30;
        bytes[k] ^= 0x10;
        assert_eq!(decode(&bytes).unwrap_err().to_string(), "checksum mismatch");
        let mut bytes = encode(&sample(2));
        bytes[20] ^= 0x01; // inside p
        assert_eq!(decode(&bytes).unwrap_err().to_string(), "checksum mismatch");
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let f = sample(4);
        let mut out = Vec::new();
        write_csv(&f, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x1,x2,x3,u");
        assert_eq!(lines.count(), f.grid().len());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 12)) {
            let g = Grid::new(vec![3, 4], vec![0.5, 0.25], vec![0.0, 0.0], 1, 1.5).unwrap();
            let f = ScalarField::new(g, vals).unwrap();
            let back = decode(&encode(&f)).unwrap();
            for (a, b) in f.values().iter().zip(back.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
