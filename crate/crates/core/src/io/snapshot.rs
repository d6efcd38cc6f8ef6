//! Binary state snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `CNSF` |
//! | 2 | version `u16` (currently 1) |
//! | 1 | dimension `u8` |
//! | 8 | `alpha` `f64` |
//! | 12 per axis | `N` `u32` then `L` `f64` |
//! | 8 | time `f64` |
//! | 8 per value | `n`, `c`, then each velocity component, row-major with the last axis fastest |

use std::path::Path;
use std::sync::Arc;

use super::IoError;
use crate::model::State;
use crate::spectral::{Field, SpectralGrid, VectorField};

pub const MAGIC: &[u8; 4] = b"CNSF";
pub const VERSION: u16 = 1;

/// Header length for a grid of dimension `dim`.
pub fn header_len(dim: usize) -> usize {
    4 + 2 + 1 + 8 + 12 * dim + 8
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub state: State,
    pub alpha: f64,
}

pub fn encode_snapshot(state: &State, alpha: f64) -> Vec<u8> {
    let grid = state.grid();
    let dim = grid.dim();
    let mut out = Vec::with_capacity(header_len(dim) + (2 + dim) * grid.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(dim as u8);
    out.extend_from_slice(&alpha.to_le_bytes());
    for (n, l) in grid.sizes().iter().zip(grid.lengths()) {
        out.extend_from_slice(&(*n as u32).to_le_bytes());
        out.extend_from_slice(&l.to_le_bytes());
    }
    out.extend_from_slice(&state.t.to_le_bytes());
    let fields = [&state.n, &state.c]
        .into_iter()
        .chain(state.u.components().iter());
    for f in fields {
        for v in f.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        if self.pos + n > self.bytes.len() {
            return Err(IoError::Truncated {
                needed: self.pos + n,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64, IoError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot, IoError> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(IoError::BadMagic);
    }
    let version = u16::from_le_bytes(c.take(2)?.try_into().expect("2 bytes"));
    if version != VERSION {
        return Err(IoError::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let dim = c.take(1)?[0] as usize;
    let alpha = c.f64()?;
    let mut sizes = Vec::with_capacity(dim);
    let mut lengths = Vec::with_capacity(dim);
    for _ in 0..dim {
        sizes.push(u32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes")) as usize);
        lengths.push(c.f64()?);
    }
    let t = c.f64()?;
    let grid: Arc<SpectralGrid> = SpectralGrid::new(&sizes, &lengths)
        .map_err(|e| IoError::Format(format!("snapshot grid: {e}")))?;
    let read_field = |c: &mut Cursor| -> Result<Field, IoError> {
        let raw = c.take(8 * grid.len())?;
        let values = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        Ok(Field::from_values(&grid, values).expect("length matches grid"))
    };
    let n = read_field(&mut c)?;
    let cf = read_field(&mut c)?;
    let u = (0..dim)
        .map(|_| read_field(&mut c))
        .collect::<Result<Vec<_>, _>>()?;
    if c.pos != bytes.len() {
        return Err(IoError::Format(format!(
            "{} trailing bytes after snapshot payload",
            bytes.len() - c.pos
        )));
    }
    let mut state = State::new(n, cf, VectorField::from_components(u).expect("dim components"))
        .expect("fields share the grid");
    state.t = t;
    Ok(Snapshot { state, alpha })
}

pub fn write_snapshot(state: &State, alpha: f64, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, encode_snapshot(state, alpha)).map_err(|e| IoError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    decode_snapshot(&bytes)
}
