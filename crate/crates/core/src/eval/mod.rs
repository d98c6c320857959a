//! Forecast metrics, area averaging, baselines, and grid evaluation.

mod svr;

pub use svr::{rbf_kernel, svr_fit, svr_solve, HorizonSvr, SvrFit, SvrModel, SvrParams};

use std::io::Write;

use rayon::prelude::*;

use crate::data::{window_series, GridDataset};
use crate::error::{Error, Result};
use crate::model::GridForecaster;

/// Denominator floor (°C) of the relative error inside [`acc`].
pub const ACC_TRUTH_FLOOR: f64 = 1.0;

fn check_pair(pred: &[f64], truth: &[f64], what: &str) -> Result<()> {
    if pred.is_empty() || pred.len() != truth.len() {
        return Err(Error::arg(format!(
            "{what} needs equal non-empty lengths (pred {}, truth {})",
            pred.len(),
            truth.len()
        )));
    }
    Ok(())
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth, "rmse")?;
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// One minus the mean relative absolute error, `1 - mean(|p-t| / max(|t|, 1 °C))`.
pub fn acc(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth, "acc")?;
    let rel: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs() / t.abs().max(ACC_TRUTH_FLOOR))
        .sum();
    Ok(1.0 - rel / pred.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub rmse: f64,
    pub acc: f64,
    /// Number of (prediction, truth) pairs behind the figures.
    pub n: usize,
}

impl MetricReport {
    pub fn from_pairs(pred: &[f64], truth: &[f64]) -> Result<Self> {
        Ok(MetricReport {
            rmse: rmse(pred, truth)?,
            acc: acc(pred, truth)?,
            n: pred.len(),
        })
    }
}

/// Unweighted mean of per-cell figures over cells that carry a report.
pub fn area_average(per_cell: &[Option<MetricReport>]) -> Result<MetricReport> {
    let sea: Vec<&MetricReport> = per_cell.iter().flatten().collect();
    if sea.is_empty() {
        return Err(Error::arg("area average needs at least one sea cell"));
    }
    let n = sea.len() as f64;
    Ok(MetricReport {
        rmse: sea.iter().map(|r| r.rmse).sum::<f64>() / n,
        acc: sea.iter().map(|r| r.acc).sum::<f64>() / n,
        n: sea.iter().map(|r| r.n).sum(),
    })
}

/// Repeats the last observation `l` times.
pub fn persistence_forecast(window: &[f64], l: usize) -> Result<Vec<f64>> {
    let last = *window
        .last()
        .ok_or_else(|| Error::arg("persistence needs at least one observation"))?;
    Ok(vec![last; l])
}

/// Metrics of one cell at one horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellReport {
    pub lat: usize,
    pub lon: usize,
    pub horizon: usize,
    pub report: MetricReport,
}

/// Runs `forecast` over every window of each listed cell's series in `data`
/// and scores it against the following `l` observed days.
pub fn evaluate_cells<F>(data: &GridDataset, k: usize, l: usize, cells: &[(usize, usize)], forecast: F) -> Result<Vec<CellReport>>
where
    F: Fn(usize, usize, &[f64]) -> Result<Vec<f64>> + Sync,
{
    cells
        .par_iter()
        .map(|&(lat, lon)| {
            let windows = window_series(&data.series(lat, lon), k, l)?;
            let mut pred = Vec::with_capacity(windows.len() * l);
            let mut truth = Vec::with_capacity(windows.len() * l);
            for (x, y) in windows.inputs.iter().zip(&windows.targets) {
                pred.extend(forecast(lat, lon, x)?);
                truth.extend_from_slice(y);
            }
            Ok(CellReport {
                lat,
                lon,
                horizon: l,
                report: MetricReport::from_pairs(&pred, &truth)?,
            })
        })
        .collect()
}

pub fn evaluate_grid(g: &GridForecaster, data: &GridDataset) -> Result<Vec<CellReport>> {
    g.check_shape(data)?;
    let cells = g.model_cells();
    evaluate_cells(data, g.config.k, g.config.l, &cells, |lat, lon, x| g.predict(lat, lon, x))
}

pub fn evaluate_persistence(data: &GridDataset, k: usize, l: usize, cells: &[(usize, usize)]) -> Result<Vec<CellReport>> {
    evaluate_cells(data, k, l, cells, |_, _, x| persistence_forecast(x, l))
}

/// Per-cell SVR baseline at the grid's `k` and `l`: fitted on the training
/// windows normalized with each cell model's normalizer (optionally only the
/// latest `max_train` of them) and scored on `target` in physical units.
pub fn evaluate_svr(
    grid: &GridForecaster,
    train: &GridDataset,
    target: &GridDataset,
    params: &SvrParams,
    max_train: Option<usize>,
) -> Result<Vec<CellReport>> {
    let (k, l) = (grid.config.k, grid.config.l);
    let cells = grid.model_cells();
    let fitted: Vec<HorizonSvr> = cells
        .par_iter()
        .map(|&(lat, lon)| {
            let norm = grid.cell(lat, lon).unwrap().model.norm;
            let mut windows = window_series(&train.series(lat, lon), k, l)?.normalized(&norm);
            if let Some(cap) = max_train {
                let skip = windows.len().saturating_sub(cap);
                windows.inputs.drain(..skip);
                windows.targets.drain(..skip);
            }
            HorizonSvr::fit(&windows, params)
        })
        .collect::<Result<_>>()?;
    evaluate_cells(target, k, l, &cells, |lat, lon, x| {
        let idx = cells.iter().position(|&c| c == (lat, lon)).unwrap();
        let norm = grid.cell(lat, lon).unwrap().model.norm;
        let xn: Vec<f64> = x.iter().map(|&v| norm.normalize(v)).collect();
        Ok(fitted[idx].predict(&xn).into_iter().map(|y| norm.denormalize(y)).collect())
    })
}

/// Area average of a set of cell reports.
pub fn summarize(reports: &[CellReport]) -> Result<MetricReport> {
    area_average(&reports.iter().map(|r| Some(r.report)).collect::<Vec<_>>())
}

/// CSV with header `cell_lat_idx,cell_lon_idx,horizon,rmse,acc`.
pub fn write_report_csv<W: Write>(out: W, reports: &[CellReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["cell_lat_idx", "cell_lon_idx", "horizon", "rmse", "acc"])
        .map_err(io)?;
    for r in reports {
        w.write_record([
            r.lat.to_string(),
            r.lon.to_string(),
            r.horizon.to_string(),
            r.report.rmse.to_string(),
            r.report.acc.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rmse_values() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 3.53553).abs() < 1e-5);
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn acc_values() {
        assert_eq!(acc(&[10.0, 12.0], &[10.0, 12.0]).unwrap(), 1.0);
        assert!((acc(&[11.0], &[10.0]).unwrap() - 0.9).abs() < 1e-15);
        // truth below the floor divides by 1 °C
        assert!((acc(&[0.7], &[0.2]).unwrap() - 0.5).abs() < 1e-15);
        assert!(acc(&[1.0], &[]).is_err());
    }

    #[test]
    fn area_average_values() {
        let r = |rmse| Some(MetricReport { rmse, acc: 0.9, n: 10 });
        assert_eq!(area_average(&[r(0.2)]).unwrap(), r(0.2).unwrap());
        let two = area_average(&[r(0.2), r(0.4)]).unwrap();
        assert!((two.rmse - 0.3).abs() < 1e-15);
        assert_eq!(area_average(&[r(0.2), r(0.4), None]).unwrap(), two);
        assert!(area_average(&[None, None]).is_err());
    }

    #[test]
    fn persistence_repeats_last() {
        assert_eq!(persistence_forecast(&[15.0, 16.1, 17.2], 3).unwrap(), vec![17.2; 3]);
        assert_eq!(persistence_forecast(&[4.0, 5.0], 1).unwrap(), vec![5.0]);
    }

    #[test]
    fn persistence_degrades_with_horizon() {
        let data = crate::data::synth_generate(1, 1, 1500, 8);
        let cells = [(0, 0)];
        let one = summarize(&evaluate_persistence(&data, 10, 1, &cells).unwrap()).unwrap();
        let month = summarize(&evaluate_persistence(&data, 30, 30, &cells).unwrap()).unwrap();
        assert!(month.rmse > one.rmse);
    }

    #[test]
    fn report_csv_layout() {
        let reports = [CellReport {
            lat: 1,
            lon: 2,
            horizon: 7,
            report: MetricReport { rmse: 0.5, acc: 0.98, n: 70 },
        }];
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &reports).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "cell_lat_idx,cell_lon_idx,horizon,rmse,acc\n1,2,7,0.5,0.98\n");
    }

    proptest! {
        #[test]
        fn rmse_symmetric_and_translation_invariant(
            pairs in prop::collection::vec((-30.0f64..30.0, -30.0f64..30.0), 1..40),
            shift in -100.0f64..100.0,
        ) {
            let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let a = rmse(&p, &t).unwrap();
            prop_assert!((a - rmse(&t, &p).unwrap()).abs() < 1e-12);
            let ps: Vec<f64> = p.iter().map(|v| v + shift).collect();
            let ts: Vec<f64> = t.iter().map(|v| v + shift).collect();
            prop_assert!((a - rmse(&ps, &ts).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn acc_is_one_only_at_truth(
            truth in prop::collection::vec(prop_oneof![1.0f64..40.0, -40.0f64..-1.0], 1..20),
            idx in 0usize..20,
            bump in prop_oneof![1e-6f64..5.0, -5.0f64..-1e-6],
        ) {
            prop_assert_eq!(acc(&truth, &truth).unwrap(), 1.0);
            let mut pred = truth.clone();
            let i = idx % pred.len();
            pred[i] += bump;
            prop_assert!(acc(&pred, &truth).unwrap() < 1.0);
        }
    }
}
