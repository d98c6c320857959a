//! Train one forecasting block on a single grid cell with a validation set,
//! then forecast the week after the training data.
//!
//! ```bash
//! cargo run --release -p gridcast --example train_single_cell
//! ```

use gridcast::data::{synth_generate, window_series, Normalizer};
use gridcast::model::{BlockConfig, ForecastModel};
use gridcast::optim::{fit, TrainConfig, TrainState};

fn main() -> gridcast::Result<()> {
    let series = synth_generate(1, 1, 6 * 365, 5).series(0, 0);
    let (train, rest) = series.split_at(5 * 365);
    let (validation, future) = rest.split_at(300);

    let config = BlockConfig::new(28, 7);
    let norm = Normalizer::fit(train)?;
    let windows = window_series(train, config.k, config.l)?.normalized(&norm);
    let val = window_series(validation, config.k, config.l)?.normalized(&norm);

    let mut model = ForecastModel::new(config.clone(), norm, 1)?;
    let mut state = TrainState::new(&model, 0.1, 1);
    let cfg = TrainConfig {
        epochs: 20,
        ..TrainConfig::default()
    };
    let report = fit(&mut model, &mut state, &windows, &cfg, Some(&val))?;
    for (epoch, loss) in report.val_losses.iter().enumerate() {
        println!("epoch {:>2}  validation mse {loss:.3e}", epoch + 1);
    }
    println!("kept epoch {}", report.best_epoch.map_or(0, |e| e + 1));

    let history = &validation[validation.len() - config.k..];
    let forecast = model.predict(history)?;
    for (day, (p, t)) in forecast.iter().zip(future).enumerate() {
        println!("day +{}: forecast {p:6.2} °C, observed {t:6.2} °C", day + 1);
    }
    Ok(())
}
