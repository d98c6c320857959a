//! Train one block per sea cell of a small grid, compare with persistence,
//! checkpoint the forecaster and issue a forecast from the reloaded copy.
//!
//! ```bash
//! cargo run --release -p gridcast --example grid_forecast
//! ```

use gridcast::data::{split, synth_generate, SplitSpec};
use gridcast::eval::{evaluate_grid, evaluate_persistence, summarize};
use gridcast::model::{load_checkpoint, save_checkpoint, train_grid, BlockConfig};
use gridcast::optim::TrainConfig;

fn main() -> gridcast::Result<()> {
    let data = synth_generate(3, 3, 6 * 365, 11);
    let spec = SplitSpec::by_fraction(&data, 0.8, 0.1)?;
    let parts = split(&data, &spec)?;
    println!("train {}, validation {}, test {}", spec.train, spec.validation, spec.test);

    let config = BlockConfig::new(28, 7);
    let cfg = TrainConfig {
        epochs: 15,
        ..TrainConfig::default()
    };
    let (mut grid, report) = train_grid(&parts.train, Some(&parts.validation), &config, &cfg, None)?;
    grid.split = Some(spec);
    for ((lat, lon), r) in &report.cells {
        println!("cell ({lat},{lon}) trained {} epochs", r.epochs_run);
    }

    let lstm = summarize(&evaluate_grid(&grid, &parts.test)?)?;
    let persistence = summarize(&evaluate_persistence(&parts.test, config.k, config.l, &data.sea_cells())?)?;
    println!("lstm        rmse {:.3} acc {:.4}", lstm.rmse, lstm.acc);
    println!("persistence rmse {:.3} acc {:.4}", persistence.rmse, persistence.acc);

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("grid.gckp");
    save_checkpoint(&grid, &path)?;
    let restored = load_checkpoint(&path)?;
    let series = data.series(1, 1);
    let forecast = restored.predict(1, 1, &series[series.len() - config.k..])?;
    println!("next week at cell (1,1): {forecast:.2?}");
    Ok(())
}
