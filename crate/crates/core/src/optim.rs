//! Mean-squared-error loss, Adagrad, and the seeded mini-batch training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::WindowSet;
use crate::error::{Error, Result};
use crate::model::ForecastModel;
use crate::tensor::Matrix;

pub const DEFAULT_LR: f64 = 0.1;
pub const DEFAULT_EPS: f64 = 1e-8;

/// Returns `(mean squared error, gradient with respect to pred)`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::arg(format!(
            "mse_loss needs equal non-empty lengths (pred {}, target {})",
            pred.len(),
            target.len()
        )));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let e = p - t;
            loss += e * e;
            2.0 * e / n
        })
        .collect();
    Ok((loss / n, grad))
}

/// Per-coordinate sums of squared gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct AdagradState {
    pub accum: Vec<Matrix>,
    pub lr: f64,
    pub eps: f64,
}

impl AdagradState {
    pub fn new(shapes: impl IntoIterator<Item = (usize, usize)>, lr: f64) -> Self {
        AdagradState {
            accum: shapes.into_iter().map(|(r, c)| Matrix::zeros(r, c)).collect(),
            lr,
            eps: DEFAULT_EPS,
        }
    }

    pub fn for_model(model: &ForecastModel, lr: f64) -> Self {
        Self::new(model.params().iter().map(|p| p.shape()), lr)
    }

    /// `accum += g²; θ -= lr·g / (√accum + eps)`, elementwise.
    pub fn step(&mut self, params: Vec<&mut Matrix>, grads: &[Matrix]) -> Result<()> {
        if params.len() != self.accum.len() || grads.len() != self.accum.len() {
            return Err(Error::arg(format!(
                "adagrad expects {} tensors, got {} params and {} grads",
                self.accum.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), acc) in params.iter().zip(grads).zip(&self.accum) {
            if p.shape() != acc.shape() || g.shape() != acc.shape() {
                return Err(Error::arg(format!(
                    "adagrad_step: state {:?} vs parameter {:?} and gradient {:?}",
                    acc.shape(),
                    p.shape(),
                    g.shape()
                )));
            }
        }
        let (lr, eps) = (self.lr, self.eps);
        for ((p, g), acc) in params.into_iter().zip(grads).zip(self.accum.iter_mut()) {
            for ((theta, &gv), a) in p
                .as_mut_slice()
                .iter_mut()
                .zip(g.as_slice())
                .zip(acc.as_mut_slice())
            {
                *a += gv * gv;
                *theta -= lr * gv / (a.sqrt() + eps);
            }
        }
        Ok(())
    }
}

pub fn adagrad_step(state: &mut AdagradState, params: Vec<&mut Matrix>, grads: &[Matrix]) -> Result<()> {
    state.step(params, grads)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub lr: f64,
    /// Stop after this many epochs without validation improvement.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 100,
            epochs: 50,
            seed: 0,
            shuffle: true,
            lr: DEFAULT_LR,
            patience: Some(10),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::arg("batch_size must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::arg(format!("lr must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

/// Everything beyond the parameters that resumed training needs to
/// reproduce an uninterrupted run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainState {
    pub optimizer: AdagradState,
    pub seed: u64,
    pub epochs_done: u64,
}

impl TrainState {
    pub fn new(model: &ForecastModel, lr: f64, seed: u64) -> Self {
        TrainState {
            optimizer: AdagradState::for_model(model, lr),
            seed,
            epochs_done: 0,
        }
    }

    fn epoch_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ self.epochs_done.wrapping_mul(0xA24B_AED4_963E_E407))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitReport {
    /// Mean training loss of every batch, before its update.
    pub batch_losses: Vec<f64>,
    /// Validation loss after each epoch (empty without a validation set).
    pub val_losses: Vec<f64>,
    pub epochs_run: usize,
    /// Index into `val_losses` of the kept parameters.
    pub best_epoch: Option<usize>,
}

/// Mean loss and mean gradient over the selected windows. Per-example
/// gradients are summed in index order.
pub fn batch_gradient(model: &ForecastModel, windows: &WindowSet, indices: &[usize]) -> Result<(f64, Vec<Matrix>)> {
    if indices.is_empty() {
        return Err(Error::arg("empty batch"));
    }
    let mut total = 0.0;
    let mut sum: Option<Vec<Matrix>> = None;
    for &i in indices {
        let (loss, grads) = model.loss_and_grad(&windows.inputs[i], &windows.targets[i])?;
        total += loss;
        match sum.as_mut() {
            None => sum = Some(grads),
            Some(acc) => {
                for (a, g) in acc.iter_mut().zip(&grads) {
                    a.add_assign(g)?;
                }
            }
        }
    }
    let n = indices.len() as f64;
    let grads = sum.unwrap().into_iter().map(|g| g.scale(1.0 / n)).collect();
    Ok((total / n, grads))
}

/// One Adagrad update on the averaged gradient of `indices`; returns the
/// batch loss before the update.
pub fn train_batch(
    model: &mut ForecastModel,
    optimizer: &mut AdagradState,
    windows: &WindowSet,
    indices: &[usize],
) -> Result<f64> {
    let (loss, grads) = batch_gradient(model, windows, indices)?;
    optimizer.step(model.params_mut(), &grads)?;
    Ok(loss)
}

pub fn mean_loss(model: &ForecastModel, windows: &WindowSet) -> Result<f64> {
    if windows.is_empty() {
        return Err(Error::arg("empty window set"));
    }
    let mut total = 0.0;
    for (x, y) in windows.inputs.iter().zip(&windows.targets) {
        total += mse_loss(&model.block_forward(x)?, y)?.0;
    }
    Ok(total / windows.len() as f64)
}

fn check_windows(model: &ForecastModel, windows: &WindowSet, what: &str) -> Result<()> {
    let cfg = model.config();
    if (windows.k, windows.l) != (cfg.k, cfg.l) {
        return Err(Error::arg(format!(
            "{what} windows (k {}, l {}) do not match the model (k {}, l {})",
            windows.k, windows.l, cfg.k, cfg.l
        )));
    }
    Ok(())
}

/// Mini-batch Adagrad over `cfg.epochs` epochs.
///
/// Each epoch's shuffle is seeded from `state.seed` and the number of epochs
/// already run, so splitting a run across calls (or a checkpoint) yields the
/// same parameters as one long call. With a validation set the parameters and
/// optimizer state of the best validation epoch are kept and training stops
/// after `cfg.patience` epochs without improvement.
pub fn fit(
    model: &mut ForecastModel,
    state: &mut TrainState,
    windows: &WindowSet,
    cfg: &TrainConfig,
    validation: Option<&WindowSet>,
) -> Result<FitReport> {
    cfg.validate()?;
    if windows.is_empty() {
        return Err(Error::arg("cannot fit on an empty window set"));
    }
    check_windows(model, windows, "training")?;
    if let Some(v) = validation {
        check_windows(model, v, "validation")?;
        if v.is_empty() {
            return Err(Error::arg("validation window set is empty"));
        }
    }

    let mut report = FitReport::default();
    let mut best: Option<(f64, ForecastModel, AdagradState)> = None;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..windows.len()).collect();

    for _ in 0..cfg.epochs {
        order.sort_unstable();
        if cfg.shuffle {
            order.shuffle(&mut state.epoch_rng());
        }
        for batch in order.chunks(cfg.batch_size) {
            let loss = train_batch(model, &mut state.optimizer, windows, batch)?;
            report.batch_losses.push(loss);
        }
        state.epochs_done += 1;
        report.epochs_run += 1;

        if let Some(v) = validation {
            let val = mean_loss(model, v)?;
            report.val_losses.push(val);
            if best.as_ref().is_none_or(|(b, _, _)| val < *b) {
                best = Some((val, model.clone(), state.optimizer.clone()));
                report.best_epoch = Some(report.val_losses.len() - 1);
                since_best = 0;
            } else {
                since_best += 1;
                if cfg.patience.is_some_and(|p| since_best >= p) {
                    break;
                }
            }
        }
    }

    if let Some((_, m, opt)) = best {
        *model = m;
        state.optimizer = opt;
    }
    Ok(report)
}
