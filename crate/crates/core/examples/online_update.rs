//! Keep training a saved forecaster on newly observed days after the
//! climate has shifted, and compare it with the frozen original.
//!
//! ```bash
//! cargo run --release -p gridcast --example online_update
//! ```

use gridcast::data::{Drift, SynthConfig};
use gridcast::eval::{evaluate_grid, summarize};
use gridcast::model::{read_checkpoint, train_grid, update_online, write_checkpoint, BlockConfig};
use gridcast::optim::TrainConfig;

fn main() -> gridcast::Result<()> {
    let year = 365;
    let data = SynthConfig::new(2, 2, 9 * year, 8)
        .with_drift(Drift {
            start_day: 5 * year,
            offset: 1.0,
            amplitude_scale: 1.0,
            phase_shift_days: 15.0,
        })
        .generate();
    let train = data.slice_days(0, 4 * year)?;
    let validation = data.slice_days(4 * year, 5 * year)?;
    let observed = data.slice_days(5 * year, 8 * year)?;
    let held_out = data.slice_days(8 * year, 9 * year)?;

    let config = BlockConfig::new(12, 3);
    let cfg = TrainConfig {
        epochs: 20,
        ..TrainConfig::default()
    };
    let (original, _) = train_grid(&train, Some(&validation), &config, &cfg, None)?;

    // the stored optimizer state lets training resume where it stopped
    let saved = write_checkpoint(&original)?;
    let updated = update_online(&read_checkpoint(&saved)?, &observed, cfg.epochs)?;

    let before = summarize(&evaluate_grid(&original, &held_out)?)?;
    let after = summarize(&evaluate_grid(&updated, &held_out)?)?;
    println!("original rmse {:.3} acc {:.4}", before.rmse, before.acc);
    println!("updated  rmse {:.3} acc {:.4}", after.rmse, after.acc);
    Ok(())
}
