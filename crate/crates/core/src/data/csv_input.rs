//! Long-format CSV ingestion: header `date,lat,lon,sst`, one row per day
//! and cell, ISO-8601 dates, `-9999` for missing values.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use super::{GridDataset, GridGeometry};
use crate::error::{Error, Result};

pub const MISSING_SENTINEL: f64 = -9999.0;
const COLUMNS: [&str; 4] = ["date", "lat", "lon", "sst"];

struct Row {
    line: usize,
    date: NaiveDate,
    lat: f64,
    lon: f64,
    sst: f32,
}

fn csv_err(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Csv {
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

fn parse_f64(field: &str, row: usize, column: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| csv_err(row, column, format!("cannot parse {field:?} as a number")))
}

/// Sorted distinct coordinates, merging values closer than 1e-6 degrees.
fn axis(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    v
}

fn infer_geometry(rows: &[Row]) -> Result<GridGeometry> {
    let lats = axis(rows.iter().map(|r| r.lat));
    let lons = axis(rows.iter().map(|r| r.lon));
    let spacing = |a: &[f64], name: &str| -> Result<f64> {
        if a.len() < 2 {
            return Ok(0.0);
        }
        let step = a[1] - a[0];
        for w in a.windows(2) {
            if ((w[1] - w[0]) - step).abs() > 1e-6 * step.abs().max(1.0) {
                return Err(Error::arg(format!(
                    "{name} values are not evenly spaced ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(step)
    };
    Ok(GridGeometry {
        nlat: lats.len(),
        nlon: lons.len(),
        lat0: lats[0],
        lon0: lons[0],
        dlat: spacing(&lats, "lat")?,
        dlon: spacing(&lons, "lon")?,
    })
}

fn grid_index(coord: f64, origin: f64, step: f64, n: usize) -> Option<usize> {
    if n == 1 || step == 0.0 {
        return ((coord - origin).abs() < 1e-6).then_some(0);
    }
    let pos = (coord - origin) / step;
    let idx = pos.round();
    ((pos - idx).abs() < 1e-4 && idx >= 0.0 && (idx as usize) < n).then_some(idx as usize)
}

/// Builds a grid from CSV rows. With `geometry = None` the grid is inferred
/// from the distinct coordinates present; cells absent from the file become
/// land.
pub fn convert_csv_reader<R: Read>(input: R, geometry: Option<GridGeometry>) -> Result<GridDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let headers = reader.headers().map_err(|e| csv_err(1, "header", e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != COLUMNS {
        return Err(csv_err(1, "header", format!("expected `date,lat,lon,sst`, found {names:?}")));
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            csv_err(line, "*", e.to_string())
        })?;
        let line = record.position().map_or(rows.len() + 2, |p| p.line() as usize);
        if record.len() != COLUMNS.len() {
            return Err(csv_err(
                line,
                "*",
                format!("expected {} fields, found {}", COLUMNS.len(), record.len()),
            ));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| csv_err(line, "date", format!("{:?}: {e}", &record[0])))?;
        let lat = parse_f64(&record[1], line, "lat")?;
        let lon = parse_f64(&record[2], line, "lon")?;
        let sst = parse_f64(&record[3], line, "sst")?;
        let sst = if sst == MISSING_SENTINEL { f32::NAN } else { sst as f32 };
        rows.push(Row {
            line,
            date,
            lat,
            lon,
            sst,
        });
    }
    if rows.is_empty() {
        return Err(csv_err(2, "*", "no data rows"));
    }

    let geometry = match geometry {
        Some(g) => g,
        None => infer_geometry(&rows)?,
    };
    let dates: BTreeSet<NaiveDate> = rows.iter().map(|r| r.date).collect();
    let start = *dates.iter().next().unwrap();
    let end = *dates.iter().next_back().unwrap();
    let ntime = (end - start).num_days() as usize + 1;
    if dates.len() != ntime {
        return Err(Error::arg(format!(
            "dates between {start} and {end} are not contiguous ({} of {ntime} days present)",
            dates.len()
        )));
    }

    let plane = geometry.nlat * geometry.nlon;
    let mut values = vec![f32::NAN; ntime * plane];
    let mut seen = vec![false; ntime * plane];
    for r in &rows {
        let lat = grid_index(r.lat, geometry.lat0, geometry.dlat, geometry.nlat)
            .ok_or_else(|| csv_err(r.line, "lat", format!("{} is not on the grid", r.lat)))?;
        let lon = grid_index(r.lon, geometry.lon0, geometry.dlon, geometry.nlon)
            .ok_or_else(|| csv_err(r.line, "lon", format!("{} is not on the grid", r.lon)))?;
        let t = (r.date - start).num_days() as usize;
        let idx = t * plane + lat * geometry.nlon + lon;
        if std::mem::replace(&mut seen[idx], true) {
            return Err(csv_err(r.line, "*", format!("duplicate entry for {} ({}, {})", r.date, r.lat, r.lon)));
        }
        values[idx] = r.sst;
    }
    GridDataset::new(geometry, ntime, start, values)
}

pub fn convert_csv(path: &Path, geometry: Option<GridGeometry>) -> Result<GridDataset> {
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound {
            path: path.to_path_buf(),
        },
        _ => Error::Io(e),
    })?;
    convert_csv_reader(std::io::BufReader::new(file), geometry)
}
