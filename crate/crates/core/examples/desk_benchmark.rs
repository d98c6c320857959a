//! LSTM blocks against persistence on a synthetic 4×4 grid spanning twenty
//! years, at 1- and 7-day horizons.
//!
//! ```bash
//! cargo run --release -p gridcast --example desk_benchmark
//! ```

use std::time::Instant;

use gridcast::data::{split, synth_generate, SplitSpec};
use gridcast::eval::{evaluate_grid, evaluate_persistence, summarize};
use gridcast::model::{train_grid, BlockConfig};
use gridcast::optim::TrainConfig;

fn main() -> gridcast::Result<()> {
    let data = synth_generate(4, 4, 7305, 2024);
    let spec = SplitSpec::by_fraction(&data, 0.85, 0.05)?;
    let parts = split(&data, &spec)?;
    let cfg = TrainConfig::default();

    for l in [1, 7] {
        let k = 4 * l;
        let started = Instant::now();
        let config = BlockConfig::new(k, l);
        let (grid, report) = train_grid(&parts.train, Some(&parts.validation), &config, &cfg, None)?;
        let lstm = summarize(&evaluate_grid(&grid, &parts.test)?)?;
        let persistence = summarize(&evaluate_persistence(&parts.test, k, l, &data.sea_cells())?)?;
        let epochs: Vec<usize> = report.cells.iter().map(|(_, r)| r.epochs_run).collect();
        println!(
            "l={l:>2} k={k:>3}  lstm rmse {:.4} acc {:.4} | persistence rmse {:.4} acc {:.4} | epochs {:?} | {:.1?}",
            lstm.rmse,
            lstm.acc,
            persistence.rmse,
            persistence.acc,
            epochs,
            started.elapsed()
        );
    }
    Ok(())
}
