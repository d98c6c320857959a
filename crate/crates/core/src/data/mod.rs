//! Gridded daily observations, date-range splits, supervised windows and
//! normalization.
//!
//! Time is carried as a day index from `start_date`; calendar dates only
//! appear when a split is resolved or a file is read.

mod csv_input;
mod sstg;
mod synth;

pub use csv_input::{convert_csv, convert_csv_reader};
pub use sstg::{load_grid, read_grid, save_grid, write_grid, SSTG_MAGIC, SSTG_VERSION};
pub use synth::{synth_generate, Drift, SynthConfig};

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower and upper image of the training range under [`Normalizer`].
pub const NORM_LOW: f64 = 0.1;
pub const NORM_HIGH: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub nlat: usize,
    pub nlon: usize,
    pub lat0: f64,
    pub lon0: f64,
    pub dlat: f64,
    pub dlon: f64,
}

/// Time-major grid `[t][lat][lon]` in °C. NaN marks land.
#[derive(Clone, Debug)]
pub struct GridDataset {
    geometry: GridGeometry,
    ntime: usize,
    start_date: NaiveDate,
    values: Vec<f32>,
}

impl PartialEq for GridDataset {
    /// Bitwise on values, so NaN land cells compare equal.
    fn eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry
            && self.ntime == other.ntime
            && self.start_date == other.start_date
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl GridDataset {
    pub fn new(geometry: GridGeometry, ntime: usize, start_date: NaiveDate, values: Vec<f32>) -> Result<Self> {
        let expected = ntime * geometry.nlat * geometry.nlon;
        if values.len() != expected {
            return Err(Error::SizeMismatch {
                expected: expected as u64,
                found: values.len() as u64,
            });
        }
        let g = GridDataset {
            geometry,
            ntime,
            start_date,
            values,
        };
        g.check_land_sea()?;
        Ok(g)
    }

    fn check_land_sea(&self) -> Result<()> {
        for lat in 0..self.nlat() {
            for lon in 0..self.nlon() {
                let mut nan = 0;
                for t in 0..self.ntime {
                    if self.value(t, lat, lon).is_nan() {
                        nan += 1;
                    }
                }
                if nan != 0 && nan != self.ntime {
                    return Err(Error::MixedCell { lat, lon });
                }
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> GridGeometry {
        self.geometry
    }

    pub fn nlat(&self) -> usize {
        self.geometry.nlat
    }

    pub fn nlon(&self) -> usize {
        self.geometry.nlon
    }

    pub fn ntime(&self) -> usize {
        self.ntime
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.nlat(), self.nlon(), self.ntime)
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    /// Last covered day (inclusive). Equals `start_date` for an empty axis.
    pub fn end_date(&self) -> NaiveDate {
        self.start_date + Duration::days(self.ntime.saturating_sub(1) as i64)
    }

    pub fn date_of(&self, t: usize) -> NaiveDate {
        self.start_date + Duration::days(t as i64)
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let d = (date - self.start_date).num_days();
        (d >= 0 && (d as usize) < self.ntime).then_some(d as usize)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn value(&self, t: usize, lat: usize, lon: usize) -> f32 {
        self.values[(t * self.nlat() + lat) * self.nlon() + lon]
    }

    pub fn is_land(&self, lat: usize, lon: usize) -> bool {
        self.ntime == 0 || self.value(0, lat, lon).is_nan()
    }

    /// Row-major `[lat][lon]`, `true` on land.
    pub fn land_mask(&self) -> Vec<bool> {
        (0..self.nlat())
            .flat_map(|lat| (0..self.nlon()).map(move |lon| (lat, lon)))
            .map(|(lat, lon)| self.is_land(lat, lon))
            .collect()
    }

    pub fn sea_cells(&self) -> Vec<(usize, usize)> {
        (0..self.nlat())
            .flat_map(|lat| (0..self.nlon()).map(move |lon| (lat, lon)))
            .filter(|&(lat, lon)| !self.is_land(lat, lon))
            .collect()
    }

    pub fn series(&self, lat: usize, lon: usize) -> Vec<f64> {
        (0..self.ntime).map(|t| self.value(t, lat, lon) as f64).collect()
    }

    /// Days `start..end` (exclusive) as a new dataset.
    pub fn slice_days(&self, start: usize, end: usize) -> Result<GridDataset> {
        if start >= end || end > self.ntime {
            return Err(Error::arg(format!(
                "day range {start}..{end} is empty or outside 0..{}",
                self.ntime
            )));
        }
        let plane = self.nlat() * self.nlon();
        Ok(GridDataset {
            geometry: self.geometry,
            ntime: end - start,
            start_date: self.date_of(start),
            values: self.values[start * plane..end * plane].to_vec(),
        })
    }

    pub fn date_range_view(&self, range: DateRange) -> Result<GridDataset> {
        let (start, end) = self.resolve(range)?;
        self.slice_days(start, end + 1)
    }

    fn resolve(&self, range: DateRange) -> Result<(usize, usize)> {
        match (self.index_of(range.start), self.index_of(range.end)) {
            (Some(s), Some(e)) if s <= e => Ok((s, e)),
            _ => Err(Error::arg(format!(
                "date range {range} is empty or outside the dataset span {}..={}",
                self.start_date,
                self.end_date()
            ))),
        }
    }
}

/// Inclusive calendar range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        DateRange { start, end }
    }

    /// Day count; zero when `end < start`.
    pub fn days(&self) -> usize {
        ((self.end - self.start).num_days() + 1).max(0) as usize
    }
}

impl std::fmt::Display for DateRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..={}", self.start, self.end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: DateRange,
    pub validation: DateRange,
    pub test: DateRange,
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}

impl SplitSpec {
    /// Training through August 2012, validation for the rest of 2012, test
    /// 2013–2015, for a record that starts in September 1981.
    pub fn bohai() -> Self {
        SplitSpec {
            train: DateRange::new(ymd(1981, 9, 1), ymd(2012, 8, 31)),
            validation: DateRange::new(ymd(2012, 9, 1), ymd(2012, 12, 31)),
            test: DateRange::new(ymd(2013, 1, 1), ymd(2015, 12, 31)),
        }
    }

    /// Contiguous train/validation/test split of the whole span by day
    /// fractions; the test range receives the remainder.
    pub fn by_fraction(g: &GridDataset, train: f64, validation: f64) -> Result<Self> {
        if !(train > 0.0 && validation > 0.0 && train + validation < 1.0) {
            return Err(Error::arg(format!(
                "split fractions train {train}, validation {validation} must be positive and sum below 1"
            )));
        }
        let n = g.ntime();
        let n_train = (n as f64 * train).floor() as usize;
        let n_val = (n as f64 * validation).floor() as usize;
        if n_train == 0 || n_val == 0 || n_train + n_val >= n {
            return Err(Error::arg(format!("{n} days are too few for a three-way split")));
        }
        Ok(SplitSpec {
            train: DateRange::new(g.date_of(0), g.date_of(n_train - 1)),
            validation: DateRange::new(g.date_of(n_train), g.date_of(n_train + n_val - 1)),
            test: DateRange::new(g.date_of(n_train + n_val), g.end_date()),
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("train", self.train), ("validation", self.validation), ("test", self.test)] {
            if r.end < r.start {
                return Err(Error::arg(format!("{name} range {r} is empty")));
            }
        }
        if self.train.end >= self.validation.start || self.validation.end >= self.test.start {
            return Err(Error::arg(format!(
                "split ranges must be ordered and disjoint (train {}, validation {}, test {})",
                self.train, self.validation, self.test
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Splits {
    pub train: GridDataset,
    pub validation: GridDataset,
    pub test: GridDataset,
}

pub fn split(g: &GridDataset, spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    Ok(Splits {
        train: g.date_range_view(spec.train)?,
        validation: g.date_range_view(spec.validation)?,
        test: g.date_range_view(spec.test)?,
    })
}

/// Supervised pairs: `k` consecutive days in, the following `l` days out.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WindowSet {
    pub k: usize,
    pub l: usize,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl WindowSet {
    pub fn new(k: usize, l: usize) -> Self {
        WindowSet {
            k,
            l,
            inputs: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn push(&mut self, input: Vec<f64>, target: Vec<f64>) {
        debug_assert_eq!(input.len(), self.k);
        debug_assert_eq!(target.len(), self.l);
        self.inputs.push(input);
        self.targets.push(target);
    }

    pub fn extend(&mut self, other: &WindowSet) -> Result<()> {
        if (other.k, other.l) != (self.k, self.l) {
            return Err(Error::arg(format!(
                "cannot merge windows (k {}, l {}) into (k {}, l {})",
                other.k, other.l, self.k, self.l
            )));
        }
        self.inputs.extend(other.inputs.iter().cloned());
        self.targets.extend(other.targets.iter().cloned());
        Ok(())
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> WindowSet {
        let map = |v: &Vec<f64>| v.iter().map(|&x| f(x)).collect::<Vec<_>>();
        WindowSet {
            k: self.k,
            l: self.l,
            inputs: self.inputs.iter().map(map).collect(),
            targets: self.targets.iter().map(map).collect(),
        }
    }

    pub fn normalized(&self, norm: &Normalizer) -> WindowSet {
        self.map_values(|x| norm.normalize(x))
    }

    /// Keeps only target component `h` (single-output view).
    pub fn horizon(&self, h: usize) -> Result<WindowSet> {
        if h >= self.l {
            return Err(Error::arg(format!("horizon index {h} outside 0..{}", self.l)));
        }
        Ok(WindowSet {
            k: self.k,
            l: 1,
            inputs: self.inputs.clone(),
            targets: self.targets.iter().map(|t| vec![t[h]]).collect(),
        })
    }
}

/// Stride-1 windows: pair `j` reads days `j..j+k` and targets `j+k..j+k+l`.
pub fn window_series(series: &[f64], k: usize, l: usize) -> Result<WindowSet> {
    if k == 0 || l == 0 {
        return Err(Error::arg(format!("window lengths must be positive (k {k}, l {l})")));
    }
    if series.len() < k + l {
        return Err(Error::arg(format!(
            "series of {} days is too short for k {k} + l {l}",
            series.len()
        )));
    }
    let mut out = WindowSet::new(k, l);
    for j in 0..=series.len() - k - l {
        out.push(series[j..j + k].to_vec(), series[j + k..j + k + l].to_vec());
    }
    Ok(out)
}

/// Affine map sending `[min, max]` to `[0.1, 0.9]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: f64,
    pub max: f64,
}

impl Normalizer {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::arg(format!(
                "normalization range needs finite min < max, got [{min}, {max}]"
            )));
        }
        Ok(Normalizer { min, max })
    }

    pub fn fit(series: &[f64]) -> Result<Self> {
        let (min, max) = series
            .iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Self::new(min, max)
    }

    #[inline]
    pub fn normalize(&self, x: f64) -> f64 {
        NORM_LOW + (NORM_HIGH - NORM_LOW) * (x - self.min) / (self.max - self.min)
    }

    #[inline]
    pub fn denormalize(&self, y: f64) -> f64 {
        self.min + (y - NORM_LOW) * (self.max - self.min) / (NORM_HIGH - NORM_LOW)
    }
}
