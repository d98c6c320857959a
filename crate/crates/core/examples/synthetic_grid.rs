//! Generate a synthetic SST grid, write it as an SSTG file and read it back.
//!
//! ```bash
//! cargo run --release -p gridcast --example synthetic_grid
//! ```

use gridcast::data::{load_grid, save_grid, Drift, SynthConfig};

fn main() -> gridcast::Result<()> {
    let config = SynthConfig::new(4, 5, 3 * 365, 42).with_drift(Drift {
        start_day: 2 * 365,
        offset: 1.5,
        amplitude_scale: 1.1,
        phase_shift_days: 10.0,
    });
    let grid = config.generate();

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("synthetic.sstg");
    save_grid(&grid, &path)?;
    let back = load_grid(&path)?;
    assert_eq!(back, grid);

    let (nlat, nlon, ntime) = back.shape();
    println!("{nlat}x{nlon} cells, {ntime} days from {} to {}", back.start_date(), back.end_date());
    for (lat, lon) in back.sea_cells().into_iter().take(3) {
        let climate = config.cell_climate(lat, lon);
        let series = back.series(lat, lon);
        let (lo, hi) = series
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        println!(
            "cell ({lat},{lon}) mean {:.2} amplitude {:.2}: observed {lo:.2}..{hi:.2} °C",
            climate.mean, climate.amplitude
        );
    }
    Ok(())
}
