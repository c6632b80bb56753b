//! Raw binary snapshot format for solution states: a 64-byte header (magic,
//! version, n, N, L, t) followed by the N^n samples as little-endian f64.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{make_grid, Field};

pub const MAGIC: &[u8; 8] = b"EXPHEATF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;

/// Serialize a state and its timestamp. Layout: magic (8 bytes), version
/// (u32), n (u32), N (u32), 4 pad bytes, L (f64), t (f64), zero padding to
/// 64 bytes, then the row-major samples.
pub fn write_snapshot(path: &Path, field: &Field, t: f64) -> Result<()> {
    let grid = field.grid_spec();
    let mut header = [0u8; HEADER_LEN];
    header[..8].copy_from_slice(MAGIC);
    header[8..12].copy_from_slice(&VERSION.to_le_bytes());
    header[12..16].copy_from_slice(&(grid.dimension() as u32).to_le_bytes());
    header[16..20].copy_from_slice(&(grid.points_per_axis() as u32).to_le_bytes());
    header[24..32].copy_from_slice(&grid.half_width().to_le_bytes());
    header[32..40].copy_from_slice(&t.to_le_bytes());
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&header)?;
    for &v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a snapshot back, reconstructing the grid from the header.
pub fn read_snapshot(path: &Path) -> Result<(Field, f64)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[..8] != MAGIC {
        return Err(Error::Config(format!("{}: bad snapshot magic", path.display())));
    }
    let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Config(format!("{}: unsupported snapshot version {version}", path.display())));
    }
    let n = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let npts = u32::from_le_bytes(header[16..20].try_into().unwrap()) as usize;
    let half_width = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let t = f64::from_le_bytes(header[32..40].try_into().unwrap());
    let grid = make_grid(n, npts, half_width)?;
    let mut values = vec![0.0f64; grid.len()];
    let mut buf = [0u8; 8];
    for v in &mut values {
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    Ok((Field::from_values(grid, values)?, t))
}
