//! Compare hidden-layer sizes on a few cells, the way the `sweep`
//! subcommand does.
//!
//! ```bash
//! cargo run --release -p gridcast --example hyperparameter_sweep
//! ```

use gridcast::data::{split, synth_generate, SplitSpec};
use gridcast::eval::evaluate_grid;
use gridcast::model::{train_grid, BlockConfig};
use gridcast::optim::TrainConfig;

fn main() -> gridcast::Result<()> {
    let data = synth_generate(3, 3, 4 * 365, 3);
    let parts = split(&data, &SplitSpec::by_fraction(&data, 0.8, 0.1)?)?;
    let cells = [(0, 0), (1, 2), (2, 1)];
    let cfg = TrainConfig {
        epochs: 10,
        ..TrainConfig::default()
    };

    println!("units   {}", cells.map(|(a, b)| format!("  ({a},{b})")).join(" "));
    for units in [2, 4, 6, 8] {
        let config = BlockConfig::new(12, 3).with_units(units);
        let (grid, _) = train_grid(&parts.train, Some(&parts.validation), &config, &cfg, Some(&cells[..]))?;
        let reports = evaluate_grid(&grid, &parts.test)?;
        let row: Vec<String> = cells
            .iter()
            .map(|c| {
                let r = reports.iter().find(|r| (r.lat, r.lon) == *c).unwrap();
                format!("{:7.3}", r.report.rmse)
            })
            .collect();
        println!("{units:>5}   {}", row.join(" "));
    }
    Ok(())
}
