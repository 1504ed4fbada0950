//! Binary field snapshots.
//!
//! Layout: a 32-byte header (`YMCF`, version, n, rank code, component count,
//! 12 reserved zero bytes), then little-endian f64 coefficients ordered by
//! site, then component, then basis index.

use std::io::{Read, Write};

use super::{Field, Grid, LatticeField, Rank};
use crate::algebra::Alg;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"YMCF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

pub fn write_snapshot<W: Write>(mut w: W, f: &LatticeField) -> Result<()> {
    let grid = f.grid();
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(MAGIC);
    header[4..8].copy_from_slice(&VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&(grid.n() as u32).to_le_bytes());
    header[12..16].copy_from_slice(&f.rank.code().to_le_bytes());
    header[16..20].copy_from_slice(&(f.comps.len() as u32).to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(grid.sites() * f.comps.len() * 24);
    for site in 0..grid.sites() {
        for c in &f.comps {
            for v in c.data()[site].0 {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a snapshot; the period length is not stored and must be supplied.
pub fn read_snapshot<R: Read>(mut r: R, length: f64) -> Result<LatticeField> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[..4] != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let word = |k: usize| u32::from_le_bytes(header[k..k + 4].try_into().unwrap());
    if word(4) != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {}", word(4))));
    }
    let grid = Grid::new(word(8) as usize, length)?;
    let rank = Rank::from_code(word(12))
        .ok_or_else(|| Error::Snapshot(format!("unknown rank code {}", word(12))))?;
    let ncomp = word(16) as usize;
    if ncomp != rank.components() {
        return Err(Error::Snapshot(format!("{rank:?} with {ncomp} components")));
    }
    let mut raw = vec![0u8; grid.sites() * ncomp * 24];
    r.read_exact(&mut raw)?;
    let mut comps = vec![vec![Alg::ZERO; grid.sites()]; ncomp];
    let mut chunks = raw
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()));
    for site in 0..grid.sites() {
        for comp in comps.iter_mut() {
            let mut a = [0.0; 3];
            for v in a.iter_mut() {
                *v = chunks.next().unwrap();
            }
            comp[site] = Alg(a);
        }
    }
    let fields = comps
        .into_iter()
        .map(|d| Field::from_data(grid, d))
        .collect::<Result<Vec<_>>>()?;
    LatticeField::new(rank, fields)
}
