//! Convert a long-format `date,lat,lon,sst` CSV (for instance one extracted
//! from the NOAA OISST NetCDF files) into an SSTG grid.
//!
//! ```bash
//! cargo run --release -p gridcast --example csv_ingest
//! ```

use std::fmt::Write as _;

use chrono::{Duration, NaiveDate};
use gridcast::data::{convert_csv, save_grid};

fn main() -> gridcast::Result<()> {
    let dir = tempfile::tempdir()?;
    let csv_path = dir.path().join("bohai_subset.csv");

    // three latitudes by four longitudes, the north-west corner on land
    let start = NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
    let mut text = String::from("date,lat,lon,sst\n");
    for day in 0..10 {
        let date = start + Duration::days(day);
        for i in 0..3 {
            for j in 0..4 {
                let (lat, lon) = (37.125 + 0.25 * i as f64, 117.375 + 0.25 * j as f64);
                let sst = if i == 2 && j == 0 { -9999.0 } else { 3.0 + 0.1 * day as f64 + 0.2 * j as f64 };
                writeln!(text, "{date},{lat},{lon},{sst}").unwrap();
            }
        }
    }
    std::fs::write(&csv_path, text)?;

    let grid = convert_csv(&csv_path, None)?;
    let g = grid.geometry();
    println!(
        "{}x{} grid from ({}, {}) step ({}, {}), {} days",
        g.nlat,
        g.nlon,
        g.lat0,
        g.lon0,
        g.dlat,
        g.dlon,
        grid.ntime()
    );
    for lat in (0..g.nlat).rev() {
        let row: String = (0..g.nlon).map(|lon| if grid.is_land(lat, lon) { '#' } else { '~' }).collect();
        println!("  {row}");
    }
    save_grid(&grid, &dir.path().join("bohai_subset.sstg"))?;
    Ok(())
}
