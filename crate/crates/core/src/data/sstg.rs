//! SSTG grid files.
//!
//! ```text
//! "SSTG" | version u32 LE | header length u64 LE | JSON header | payload
//! ```
//!
//! The header carries `nlat, nlon, ntime, start_date ("YYYY-MM-DD"), lat0,
//! lon0, dlat, dlon, missing ("nan")`. The payload is `ntime·nlat·nlon`
//! little-endian f32 values, time-major, then latitude, then longitude.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{GridDataset, GridGeometry};
use crate::error::{Error, Result};
use crate::fsutil;

pub const SSTG_MAGIC: [u8; 4] = *b"SSTG";
pub const SSTG_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    nlat: usize,
    nlon: usize,
    ntime: usize,
    start_date: NaiveDate,
    lat0: f64,
    lon0: f64,
    dlat: f64,
    dlon: f64,
    missing: String,
}

pub fn write_grid(g: &GridDataset) -> Result<Vec<u8>> {
    let geo = g.geometry();
    let header = serde_json::to_vec(&Header {
        nlat: geo.nlat,
        nlon: geo.nlon,
        ntime: g.ntime(),
        start_date: g.start_date(),
        lat0: geo.lat0,
        lon0: geo.lon0,
        dlat: geo.dlat,
        dlon: geo.dlon,
        missing: "nan".into(),
    })
    .map_err(|e| Error::Header(e.to_string()))?;

    let mut out = Vec::with_capacity(16 + header.len() + 4 * g.values().len());
    out.extend_from_slice(&SSTG_MAGIC);
    out.extend_from_slice(&SSTG_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for v in g.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn save_grid(g: &GridDataset, path: &Path) -> Result<()> {
    fsutil::write_atomic(path, &write_grid(g)?)
}

pub fn read_grid(bytes: &[u8]) -> Result<GridDataset> {
    if bytes.len() < 4 {
        return Err(Error::Truncated("missing magic".into()));
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != SSTG_MAGIC {
        return Err(Error::BadMagic {
            expected: SSTG_MAGIC,
            found,
        });
    }
    if bytes.len() < 16 {
        return Err(Error::Truncated("incomplete preamble".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != SSTG_VERSION {
        return Err(Error::Version {
            found: version,
            supported: SSTG_VERSION,
        });
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let rest = &bytes[16..];
    if (rest.len() as u64) < header_len {
        return Err(Error::Truncated(format!(
            "header needs {header_len} bytes, {} remain",
            rest.len()
        )));
    }
    let (header, payload) = rest.split_at(header_len as usize);
    let header: Header = serde_json::from_slice(header).map_err(|e| Error::Header(e.to_string()))?;
    if header.missing != "nan" {
        return Err(Error::Header(format!("unsupported missing marker {:?}", header.missing)));
    }

    let count = header
        .ntime
        .checked_mul(header.nlat)
        .and_then(|n| n.checked_mul(header.nlon))
        .ok_or_else(|| Error::Header("grid dimensions overflow".into()))?;
    let expected = count as u64 * 4;
    if payload.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            expected,
            found: payload.len() as u64,
        });
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GridDataset::new(
        GridGeometry {
            nlat: header.nlat,
            nlon: header.nlon,
            lat0: header.lat0,
            lon0: header.lon0,
            dlat: header.dlat,
            dlon: header.dlon,
        },
        header.ntime,
        header.start_date,
        values,
    )
}

pub fn load_grid(path: &Path) -> Result<GridDataset> {
    read_grid(&fsutil::read_file(path)?)
}
