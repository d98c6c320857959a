//! GCKP checkpoints.
//!
//! ```text
//! "GCKP" | version u32 LE | manifest length u64 LE | JSON manifest | blob
//! ```
//!
//! The manifest records the grid shape, block and training configuration,
//! the optional date split, and for every cell that holds a model its
//! normalization range, optimizer settings, epoch counter, and the byte
//! offset and shape of each tensor inside the blob. The blob is a sequence of
//! little-endian f64 values. Per cell it holds the parameters in
//! [`ForecastModel::params`] order (each LSTM layer's packed weights then
//! bias, then each dense layer's weights then bias, all row-major) followed
//! by the Adagrad accumulators in the same order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BlockConfig, CellModel, ForecastModel, GridForecaster};
use crate::data::{Normalizer, SplitSpec};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::optim::{AdagradState, TrainConfig, TrainState};
use crate::tensor::Matrix;

pub const GCKP_MAGIC: [u8; 4] = *b"GCKP";
pub const GCKP_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    rows: usize,
    cols: usize,
    offset: u64,
}

#[derive(Serialize, Deserialize)]
struct CellEntry {
    lat: usize,
    lon: usize,
    config: BlockConfig,
    norm: Normalizer,
    seed: u64,
    epochs_done: u64,
    lr: f64,
    eps: f64,
    params: Vec<TensorEntry>,
    accum: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    nlat: usize,
    nlon: usize,
    config: BlockConfig,
    train_config: TrainConfig,
    split: Option<SplitSpec>,
    blob_bytes: u64,
    cells: Vec<CellEntry>,
}

fn push_tensor(blob: &mut Vec<u8>, m: &Matrix) -> TensorEntry {
    let entry = TensorEntry {
        rows: m.rows(),
        cols: m.cols(),
        offset: blob.len() as u64,
    };
    for v in m.as_slice() {
        blob.extend_from_slice(&v.to_le_bytes());
    }
    entry
}

pub fn write_checkpoint(g: &GridForecaster) -> Result<Vec<u8>> {
    let mut blob = Vec::new();
    let mut cells = Vec::new();
    for (lat, lon) in g.model_cells() {
        let cell = g.cell(lat, lon).unwrap();
        let params = cell.model.params().into_iter().map(|m| push_tensor(&mut blob, m)).collect();
        let accum = cell.state.optimizer.accum.iter().map(|m| push_tensor(&mut blob, m)).collect();
        cells.push(CellEntry {
            lat,
            lon,
            config: cell.model.config().clone(),
            norm: cell.model.norm,
            seed: cell.state.seed,
            epochs_done: cell.state.epochs_done,
            lr: cell.state.optimizer.lr,
            eps: cell.state.optimizer.eps,
            params,
            accum,
        });
    }
    let manifest = Manifest {
        nlat: g.nlat(),
        nlon: g.nlon(),
        config: g.config.clone(),
        train_config: g.train_config.clone(),
        split: g.split,
        blob_bytes: blob.len() as u64,
        cells,
    };
    let json = serde_json::to_vec(&manifest).map_err(|e| Error::Header(e.to_string()))?;

    let mut out = Vec::with_capacity(16 + json.len() + blob.len());
    out.extend_from_slice(&GCKP_MAGIC);
    out.extend_from_slice(&GCKP_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&blob);
    Ok(out)
}

pub fn save_checkpoint(g: &GridForecaster, path: &Path) -> Result<()> {
    fsutil::write_atomic(path, &write_checkpoint(g)?)
}

fn read_tensor(blob: &[u8], entry: &TensorEntry, expected: (usize, usize)) -> Result<Matrix> {
    if (entry.rows, entry.cols) != expected {
        return Err(Error::Header(format!(
            "tensor shape {:?} does not match the configured shape {expected:?}",
            (entry.rows, entry.cols)
        )));
    }
    let start = entry.offset as usize;
    let end = start + 8 * entry.rows * entry.cols;
    let bytes = blob
        .get(start..end)
        .ok_or_else(|| Error::Truncated(format!("tensor at byte {start} runs past the blob")))?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::new(entry.rows, entry.cols, data)
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<GridForecaster> {
    if bytes.len() < 4 {
        return Err(Error::Truncated("missing magic".into()));
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != GCKP_MAGIC {
        return Err(Error::BadMagic {
            expected: GCKP_MAGIC,
            found,
        });
    }
    if bytes.len() < 16 {
        return Err(Error::Truncated("incomplete preamble".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != GCKP_VERSION {
        return Err(Error::Version {
            found: version,
            supported: GCKP_VERSION,
        });
    }
    let manifest_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let rest = &bytes[16..];
    if (rest.len() as u64) < manifest_len {
        return Err(Error::Truncated(format!(
            "manifest needs {manifest_len} bytes, {} remain",
            rest.len()
        )));
    }
    let (json, blob) = rest.split_at(manifest_len as usize);
    let manifest: Manifest = serde_json::from_slice(json).map_err(|e| Error::Header(e.to_string()))?;
    if (blob.len() as u64) < manifest.blob_bytes {
        return Err(Error::Truncated(format!(
            "parameter blob has {} of {} bytes",
            blob.len(),
            manifest.blob_bytes
        )));
    }
    if blob.len() as u64 != manifest.blob_bytes {
        return Err(Error::SizeMismatch {
            expected: manifest.blob_bytes,
            found: blob.len() as u64,
        });
    }

    let mut g = GridForecaster::new(manifest.nlat, manifest.nlon, manifest.config, manifest.train_config);
    g.split = manifest.split;
    for entry in manifest.cells {
        let mut model = ForecastModel::zeros(entry.config, entry.norm)?;
        if entry.params.len() != model.params().len() || entry.accum.len() != entry.params.len() {
            return Err(Error::Header(format!(
                "cell ({}, {}) lists {} parameter and {} accumulator tensors, expected {}",
                entry.lat,
                entry.lon,
                entry.params.len(),
                entry.accum.len(),
                model.params().len()
            )));
        }
        let mut accum = Vec::with_capacity(entry.accum.len());
        for ((slot, p), a) in model.params_mut().into_iter().zip(&entry.params).zip(&entry.accum) {
            let shape = slot.shape();
            *slot = read_tensor(blob, p, shape)?;
            accum.push(read_tensor(blob, a, shape)?);
        }
        let state = TrainState {
            optimizer: AdagradState {
                accum,
                lr: entry.lr,
                eps: entry.eps,
            },
            seed: entry.seed,
            epochs_done: entry.epochs_done,
        };
        g.set_cell(entry.lat, entry.lon, Some(CellModel { model, state }))?;
    }
    Ok(g)
}

pub fn load_checkpoint(path: &Path) -> Result<GridForecaster> {
    read_checkpoint(&fsutil::read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_generate;
    use crate::model::train_grid;

    fn small_grid() -> GridForecaster {
        let data = synth_generate(2, 2, 90, 4);
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 10,
            ..TrainConfig::default()
        };
        train_grid(&data, None, &BlockConfig::new(6, 2).with_units(3), &cfg, None).unwrap().0
    }

    #[test]
    fn roundtrip_is_bitwise() {
        let g = small_grid();
        let back = read_checkpoint(&write_checkpoint(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        for (lat, lon) in g.model_cells() {
            let (a, b) = (g.cell(lat, lon).unwrap(), back.cell(lat, lon).unwrap());
            for (x, y) in a.model.params().iter().zip(b.model.params()) {
                assert!(x.as_slice().iter().zip(y.as_slice()).all(|(p, q)| p.to_bits() == q.to_bits()));
            }
        }
    }

    #[test]
    fn corrupt_magic() {
        let mut bytes = write_checkpoint(&small_grid()).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        let err = read_checkpoint(&bytes).unwrap_err();
        assert!(matches!(err, Error::BadMagic { .. }));
        assert!(err.to_string().contains("bad magic"));
    }

    #[test]
    fn version_and_truncation() {
        let bytes = write_checkpoint(&small_grid()).unwrap();
        let mut v2 = bytes.clone();
        v2[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(read_checkpoint(&v2), Err(Error::Version { found: 2, .. })));
        assert!(matches!(read_checkpoint(&bytes[..bytes.len() - 8]), Err(Error::Truncated(_))));
        assert!(matches!(read_checkpoint(&bytes[..20]), Err(Error::Truncated(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(read_checkpoint(&long), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_checkpoint(Path::new("/nonexistent/model.gckp")),
            Err(Error::NotFound { .. })
        ));
    }
}
