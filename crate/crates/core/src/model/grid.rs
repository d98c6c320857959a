use rayon::prelude::*;

use super::{BlockConfig, ForecastModel};
use crate::data::{window_series, GridDataset, Normalizer, SplitSpec, WindowSet};
use crate::error::{Error, Result};
use crate::optim::{fit, FitReport, TrainConfig, TrainState};

/// A trained block together with the state needed to keep training it.
#[derive(Clone, Debug, PartialEq)]
pub struct CellModel {
    pub model: ForecastModel,
    pub state: TrainState,
}

/// One independent block per sea cell; land cells hold none.
#[derive(Clone, Debug, PartialEq)]
pub struct GridForecaster {
    nlat: usize,
    nlon: usize,
    pub config: BlockConfig,
    pub train_config: TrainConfig,
    /// Date split the grid was trained with, when known.
    pub split: Option<SplitSpec>,
    cells: Vec<Option<CellModel>>,
}

impl GridForecaster {
    pub fn new(nlat: usize, nlon: usize, config: BlockConfig, train_config: TrainConfig) -> Self {
        GridForecaster {
            nlat,
            nlon,
            config,
            train_config,
            split: None,
            cells: vec![None; nlat * nlon],
        }
    }

    pub fn nlat(&self) -> usize {
        self.nlat
    }

    pub fn nlon(&self) -> usize {
        self.nlon
    }

    pub fn cell(&self, lat: usize, lon: usize) -> Option<&CellModel> {
        self.cells.get(lat * self.nlon + lon)?.as_ref()
    }

    pub fn cell_mut(&mut self, lat: usize, lon: usize) -> Option<&mut CellModel> {
        self.cells.get_mut(lat * self.nlon + lon)?.as_mut()
    }

    pub fn set_cell(&mut self, lat: usize, lon: usize, cell: Option<CellModel>) -> Result<()> {
        if lat >= self.nlat || lon >= self.nlon {
            return Err(Error::arg(format!(
                "cell ({lat}, {lon}) outside a {}x{} grid",
                self.nlat, self.nlon
            )));
        }
        self.cells[lat * self.nlon + lon] = cell;
        Ok(())
    }

    /// Cells that hold a model, row-major.
    pub fn model_cells(&self) -> Vec<(usize, usize)> {
        (0..self.nlat)
            .flat_map(|lat| (0..self.nlon).map(move |lon| (lat, lon)))
            .filter(|&(lat, lon)| self.cell(lat, lon).is_some())
            .collect()
    }

    /// Physical-unit forecast for one cell; NaN-filled where no model exists.
    pub fn predict(&self, lat: usize, lon: usize, raw_window: &[f64]) -> Result<Vec<f64>> {
        match self.cell(lat, lon) {
            Some(c) => c.model.predict(raw_window),
            None => Ok(vec![f64::NAN; self.config.l]),
        }
    }

    pub fn check_shape(&self, data: &GridDataset) -> Result<()> {
        if (data.nlat(), data.nlon()) != (self.nlat, self.nlon) {
            return Err(Error::arg(format!(
                "dataset grid {}x{} does not match the model grid {}x{}",
                data.nlat(),
                data.nlon(),
                self.nlat,
                self.nlon
            )));
        }
        Ok(())
    }
}

/// Per-cell seed derived from the run seed and the cell position.
pub fn cell_seed(seed: u64, lat: usize, lon: usize) -> u64 {
    let mut z = seed ^ ((lat as u64) << 32 | lon as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GridTrainReport {
    pub cells: Vec<((usize, usize), FitReport)>,
}

fn cell_windows(data: &GridDataset, lat: usize, lon: usize, config: &BlockConfig, norm: &Normalizer) -> Result<WindowSet> {
    Ok(window_series(&data.series(lat, lon), config.k, config.l)?.normalized(norm))
}

fn train_cell(
    train: &GridDataset,
    validation: Option<&GridDataset>,
    config: &BlockConfig,
    cfg: &TrainConfig,
    (lat, lon): (usize, usize),
) -> Result<(CellModel, FitReport)> {
    let series = train.series(lat, lon);
    let norm = Normalizer::fit(&series)?;
    let windows = window_series(&series, config.k, config.l)?.normalized(&norm);
    let val = match validation {
        Some(v) if v.ntime() >= config.k + config.l => Some(cell_windows(v, lat, lon, config, &norm)?),
        _ => None,
    };
    let seed = cell_seed(cfg.seed, lat, lon);
    let mut model = ForecastModel::new(config.clone(), norm, seed)?;
    let mut state = TrainState::new(&model, cfg.lr, seed.rotate_left(17));
    let report = fit(&mut model, &mut state, &windows, cfg, val.as_ref())?;
    Ok((CellModel { model, state }, report))
}

/// Trains one block per listed cell (all sea cells when `cells` is `None`).
/// Cells train in parallel; each depends only on its own seed and data.
pub fn train_grid(
    train: &GridDataset,
    validation: Option<&GridDataset>,
    config: &BlockConfig,
    cfg: &TrainConfig,
    cells: Option<&[(usize, usize)]>,
) -> Result<(GridForecaster, GridTrainReport)> {
    config.validate()?;
    cfg.validate()?;
    if let Some(v) = validation {
        if (v.nlat(), v.nlon()) != (train.nlat(), train.nlon()) {
            return Err(Error::arg("validation grid shape differs from training grid"));
        }
    }
    let targets: Vec<(usize, usize)> = match cells {
        Some(list) => {
            for &(lat, lon) in list {
                if lat >= train.nlat() || lon >= train.nlon() || train.is_land(lat, lon) {
                    return Err(Error::arg(format!("cell ({lat}, {lon}) is not a sea cell of the grid")));
                }
            }
            list.to_vec()
        }
        None => train.sea_cells(),
    };
    if targets.is_empty() {
        return Err(Error::arg("no sea cells to train"));
    }

    let trained: Vec<_> = targets
        .par_iter()
        .map(|&cell| train_cell(train, validation, config, cfg, cell).map(|r| (cell, r)))
        .collect::<Result<_>>()?;

    let mut grid = GridForecaster::new(train.nlat(), train.nlon(), config.clone(), cfg.clone());
    let mut report = GridTrainReport::default();
    for ((lat, lon), (cell, fit_report)) in trained {
        grid.set_cell(lat, lon, Some(cell))?;
        report.cells.push(((lat, lon), fit_report));
    }
    Ok((grid, report))
}

/// Continues training every cell model on windows of `new_data`, resuming
/// from the stored optimizer state. No validation-based selection applies.
pub fn update_online(g: &GridForecaster, new_data: &GridDataset, epochs: usize) -> Result<GridForecaster> {
    g.check_shape(new_data)?;
    let mut out = g.clone();
    if epochs == 0 {
        return Ok(out);
    }
    let cfg = TrainConfig {
        epochs,
        patience: None,
        ..g.train_config.clone()
    };
    let cells = g.model_cells();
    for &(lat, lon) in &cells {
        if new_data.is_land(lat, lon) {
            return Err(Error::arg(format!("cell ({lat}, {lon}) has a model but no data in the update set")));
        }
    }
    let updated: Vec<CellModel> = cells
        .par_iter()
        .map(|&(lat, lon)| {
            let mut cell = g.cell(lat, lon).unwrap().clone();
            let windows = cell_windows(new_data, lat, lon, &g.config, &cell.model.norm)?;
            fit(&mut cell.model, &mut cell.state, &windows, &cfg, None)?;
            Ok(cell)
        })
        .collect::<Result<_>>()?;
    for (&(lat, lon), cell) in cells.iter().zip(updated) {
        out.set_cell(lat, lon, Some(cell))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_generate;

    fn quick_cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 16,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn cell_order_does_not_matter() {
        let data = synth_generate(2, 2, 120, 1);
        let config = BlockConfig::new(8, 2).with_units(2);
        let forward = [(0, 0), (0, 1), (1, 0), (1, 1)];
        let backward = [(1, 1), (1, 0), (0, 1), (0, 0)];
        let (a, _) = train_grid(&data, None, &config, &quick_cfg(2), Some(&forward)).unwrap();
        let (b, _) = train_grid(&data, None, &config, &quick_cfg(2), Some(&backward)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_epoch_update_is_identity() {
        let data = synth_generate(1, 2, 100, 1);
        let (g, _) = train_grid(&data, None, &BlockConfig::new(6, 1).with_units(2), &quick_cfg(1), None).unwrap();
        assert_eq!(update_online(&g, &data, 0).unwrap(), g);
    }

    #[test]
    fn update_shape_mismatch() {
        let data = synth_generate(1, 2, 100, 1);
        let (g, _) = train_grid(&data, None, &BlockConfig::new(6, 1).with_units(2), &quick_cfg(1), None).unwrap();
        let other = synth_generate(2, 2, 100, 1);
        assert!(matches!(update_online(&g, &other, 1), Err(Error::Argument(_))));
    }

    #[test]
    fn land_cells_predict_nan() {
        let g = GridForecaster::new(1, 1, BlockConfig::new(4, 2), TrainConfig::default());
        let p = g.predict(0, 0, &[1.0; 4]).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.iter().all(|v| v.is_nan()));
    }

    #[test]
    fn cell_seeds_differ() {
        assert_ne!(cell_seed(0, 0, 1), cell_seed(0, 1, 0));
        assert_eq!(cell_seed(5, 2, 3), cell_seed(5, 2, 3));
    }
}
