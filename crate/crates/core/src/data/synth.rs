//! Temperature-like synthetic grids: an annual sinusoid per cell plus AR(1)
//! weather noise, optionally with a regime shift partway through.

use std::f64::consts::TAU;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{GridDataset, GridGeometry};

pub const YEAR_DAYS: f64 = 365.25;

/// Change of regime applied from `start_day` on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drift {
    pub start_day: usize,
    /// Added to every value after `start_day` (°C).
    pub offset: f64,
    /// Multiplies the seasonal amplitude after `start_day`.
    pub amplitude_scale: f64,
    /// Shifts the seasonal phase after `start_day` (days).
    pub phase_shift_days: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub nlat: usize,
    pub nlon: usize,
    pub ntime: usize,
    pub seed: u64,
    pub start_date: NaiveDate,
    /// Stationary standard deviation of the AR(1) component (°C).
    pub noise_sigma: f64,
    pub ar_coef: f64,
    pub drift: Option<Drift>,
}

impl SynthConfig {
    pub fn new(nlat: usize, nlon: usize, ntime: usize, seed: u64) -> Self {
        SynthConfig {
            nlat,
            nlon,
            ntime,
            seed,
            start_date: NaiveDate::from_ymd_opt(1981, 9, 1).unwrap(),
            noise_sigma: 0.4,
            ar_coef: 0.8,
            drift: None,
        }
    }

    pub fn with_drift(mut self, drift: Drift) -> Self {
        self.drift = Some(drift);
        self
    }

    /// Seasonal mean, amplitude and phase (radians) of one cell.
    pub fn cell_climate(&self, lat: usize, lon: usize) -> CellClimate {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_c11a_7e00_0000);
        let ka: f64 = rng.gen_range(0.3..1.2);
        let kb: f64 = rng.gen_range(0.3..1.2);
        let pa: f64 = rng.gen_range(0.0..TAU);
        let pb: f64 = rng.gen_range(0.0..TAU);
        let phase0: f64 = rng.gen_range(0.0..TAU);

        let y = lat as f64 / self.nlat.max(2).saturating_sub(1) as f64;
        let x = lon as f64 / self.nlon.max(2).saturating_sub(1) as f64;
        let wave = |k: f64, p: f64| 0.5 + 0.5 * (TAU * k * (x + 0.7 * y) + p).sin();
        CellClimate {
            mean: 10.0 + 6.0 * wave(ka, pa),
            amplitude: 8.0 + 6.0 * wave(kb, pb),
            phase: phase0 + 0.35 * (x - y),
        }
    }

    pub fn generate(&self) -> GridDataset {
        let (nlat, nlon, ntime) = (self.nlat, self.nlon, self.ntime);
        let mut values = vec![0f32; ntime * nlat * nlon];
        let innovation = Normal::new(0.0, self.noise_sigma * (1.0 - self.ar_coef * self.ar_coef).sqrt())
            .expect("finite noise scale");
        let stationary = Normal::new(0.0, self.noise_sigma).expect("finite noise scale");

        for lat in 0..nlat {
            for lon in 0..nlon {
                let climate = self.cell_climate(lat, lon);
                let cell_seed = self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((lat * nlon + lon) as u64 + 1);
                let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
                let mut noise = stationary.sample(&mut rng);
                for t in 0..ntime {
                    if t > 0 {
                        noise = self.ar_coef * noise + innovation.sample(&mut rng);
                    }
                    let (mut amp, mut shift, mut offset) = (climate.amplitude, 0.0, 0.0);
                    if let Some(d) = self.drift.filter(|d| t >= d.start_day) {
                        amp *= d.amplitude_scale;
                        shift = d.phase_shift_days;
                        offset = d.offset;
                    }
                    let season = (TAU * (t as f64 + shift) / YEAR_DAYS + climate.phase).sin();
                    let v = climate.mean + offset + amp * season + noise;
                    values[(t * nlat + lat) * nlon + lon] = v as f32;
                }
            }
        }

        let geometry = GridGeometry {
            nlat,
            nlon,
            lat0: 37.125,
            lon0: 117.375,
            dlat: 0.25,
            dlon: 0.25,
        };
        GridDataset::new(geometry, ntime, self.start_date, values).expect("synthetic grid is all sea")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellClimate {
    pub mean: f64,
    pub amplitude: f64,
    pub phase: f64,
}

pub fn synth_generate(nlat: usize, nlon: usize, ntime: usize, seed: u64) -> GridDataset {
    SynthConfig::new(nlat, nlon, ntime, seed).generate()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Pearson correlation between the series and itself shifted by `lag`.
    fn autocorrelation(x: &[f64], lag: usize) -> f64 {
        let (a, b) = (&x[..x.len() - lag], &x[lag..]);
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(u, v)| (u - ma) * (v - mb)).sum();
        let va: f64 = a.iter().map(|u| (u - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|v| (v - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(synth_generate(3, 2, 100, 5), synth_generate(3, 2, 100, 5));
        assert_ne!(synth_generate(3, 2, 100, 5), synth_generate(3, 2, 100, 6));
    }

    #[test]
    fn values_within_climate_bounds() {
        let cfg = SynthConfig::new(4, 4, 3000, 11);
        let g = cfg.generate();
        for (lat, lon) in g.sea_cells() {
            let c = cfg.cell_climate(lat, lon);
            assert!((8.0..=14.0).contains(&c.amplitude));
            assert!((10.0..=16.0).contains(&c.mean));
            let s = g.series(lat, lon);
            let (lo, hi) = (c.mean - c.amplitude - 5.0 * 0.4, c.mean + c.amplitude + 5.0 * 0.4);
            assert!(s.iter().all(|&v| v >= lo && v <= hi), "cell ({lat},{lon}) out of bounds");
        }
    }

    #[test]
    fn strong_annual_autocorrelation() {
        let g = synth_generate(3, 3, 365 * 4, 2);
        for (lat, lon) in g.sea_cells() {
            assert!(autocorrelation(&g.series(lat, lon), 365) > 0.9);
        }
    }

    #[test]
    fn drift_changes_only_later_days() {
        let base = SynthConfig::new(1, 1, 400, 1);
        let drifted = base.clone().with_drift(Drift {
            start_day: 200,
            offset: 2.0,
            amplitude_scale: 1.0,
            phase_shift_days: 0.0,
        });
        let (a, b) = (base.generate().series(0, 0), drifted.generate().series(0, 0));
        assert_eq!(a[..200], b[..200]);
        assert!((b[300] - a[300] - 2.0).abs() < 1e-4);
    }
}
