//! Grid time-series forecasting of daily sea surface temperature.
//!
//! Every sea cell of a latitude/longitude grid gets its own forecasting
//! block: stacked LSTM layers read the last `k` days and a fully-connected
//! sigmoid head emits the next `l` days. Everything (cell math,
//! backpropagation through time, Adagrad, metrics and the SVR baseline) is
//! implemented here on a small dense [`tensor::Matrix`].
//!
//! Modules, bottom up:
//!
//! - [`tensor`]: matrices and activations
//! - [`lstm`]: cell step, sequence forward pass, exact BPTT
//! - [`model`]: forecasting block, per-cell grid, GCKP checkpoints
//! - [`optim`]: MSE, Adagrad, seeded mini-batch training
//! - [`data`]: grids, SSTG files, CSV ingestion, splits, windows, synthetic data
//! - [`eval`]: RMSE/ACC, area averages, persistence and SVR baselines
//! - [`cli`]: the `gridcast` command line
//!
//! # Examples
//!
//! Each capability has a runnable program under `examples/`:
//!
//! ```text
//! synthetic_grid        seasonal + AR(1) grids, SSTG round trip
//! csv_ingest            long-format CSV to SSTG
//! lstm_gradient_check   BPTT against finite differences
//! train_single_cell     one block, validation-based epoch selection
//! grid_forecast         per-cell training, persistence comparison, checkpoints
//! svr_baseline          epsilon-SVR per horizon
//! online_update         resuming training on newly observed days
//! hyperparameter_sweep  hidden sizes compared per cell
//! desk_benchmark        LSTM against persistence on a 20-year synthetic grid
//! ```
//!
//! Run one with `cargo run --release -p gridcast --example grid_forecast`.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod lstm;
pub mod model;
pub mod optim;
pub mod tensor;

mod fsutil;

pub use error::{Error, Result};
