use chrono::NaiveDate;
use gridcast::data::{load_grid, read_grid, save_grid, write_grid, GridDataset, GridGeometry};

#[test]
fn bohai_shaped_grid_loads_with_its_shape() {
    let (nlat, nlon, ntime) = (16, 15, 12868);
    let geometry = GridGeometry {
        nlat,
        nlon,
        lat0: 37.125,
        lon0: 117.375,
        dlat: 0.25,
        dlon: 0.25,
    };
    // coastal land occupies the western columns of the northern rows
    let land = |lat: usize, lon: usize| lat >= 12 && lon < 3;
    let mut values = Vec::with_capacity(nlat * nlon * ntime);
    for t in 0..ntime {
        for lat in 0..nlat {
            for lon in 0..nlon {
                values.push(if land(lat, lon) {
                    f32::NAN
                } else {
                    12.0 + 0.001 * t as f32 + 0.1 * lat as f32 - 0.05 * lon as f32
                });
            }
        }
    }
    let g = GridDataset::new(geometry, ntime, NaiveDate::from_ymd_opt(1981, 9, 1).unwrap(), values).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bohai.sstg");
    save_grid(&g, &path).unwrap();
    let back = load_grid(&path).unwrap();
    assert_eq!(back.shape(), (16, 15, 12868));
    assert_eq!(back.sea_cells().len(), 16 * 15 - 12);
    assert!(back.is_land(15, 0) && !back.is_land(0, 0));
    assert_eq!(back, g);
}

#[test]
fn random_grid_roundtrip_bitwise() {
    let g = gridcast::data::synth_generate(4, 4, 30, 77);
    let bytes = write_grid(&g).unwrap();
    let back = read_grid(&bytes).unwrap();
    let a: Vec<u32> = g.values().iter().map(|v| v.to_bits()).collect();
    let b: Vec<u32> = back.values().iter().map(|v| v.to_bits()).collect();
    assert_eq!(a, b);
    assert_eq!(back.geometry(), g.geometry());
    assert_eq!(back.start_date(), g.start_date());
    assert_eq!(write_grid(&back).unwrap(), bytes);
}
