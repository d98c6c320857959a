//! Epsilon-SVR with an RBF kernel as a per-horizon baseline on one cell.
//!
//! ```bash
//! cargo run --release -p gridcast --example svr_baseline
//! ```

use gridcast::data::{synth_generate, window_series, Normalizer};
use gridcast::eval::{persistence_forecast, rmse, svr_solve, HorizonSvr, SvrParams};

fn main() -> gridcast::Result<()> {
    let series = synth_generate(1, 1, 3 * 365, 21).series(0, 0);
    let (train, test) = series.split_at(2 * 365);
    let (k, l) = (12, 3);
    let norm = Normalizer::fit(train)?;
    let windows = window_series(train, k, l)?.normalized(&norm);

    let params = SvrParams::default();
    let first = windows.horizon(0)?;
    let fit = svr_solve(&first.inputs, &first.targets.iter().map(|t| t[0]).collect::<Vec<_>>(), &params)?;
    println!(
        "day-1 model: {} support vectors of {}, {} iterations, KKT gap {:.1e}",
        fit.model.support.len(),
        first.len(),
        fit.iterations,
        fit.gap
    );

    let svr = HorizonSvr::fit(&windows, &params)?;
    let test_windows = window_series(test, k, l)?;
    let (mut pred, mut pers, mut truth) = (Vec::new(), Vec::new(), Vec::new());
    for (x, y) in test_windows.inputs.iter().zip(&test_windows.targets) {
        let xn: Vec<f64> = x.iter().map(|&v| norm.normalize(v)).collect();
        pred.extend(svr.predict(&xn).into_iter().map(|v| norm.denormalize(v)));
        pers.extend(persistence_forecast(x, l)?);
        truth.extend_from_slice(y);
    }
    println!("svr rmse {:.3} °C, persistence rmse {:.3} °C", rmse(&pred, &truth)?, rmse(&pers, &truth)?);
    Ok(())
}
