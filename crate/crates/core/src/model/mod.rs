//! The forecasting block (stacked LSTM layers feeding a fully-connected
//! sigmoid head), the per-cell grid of blocks, and checkpoints.

mod checkpoint;
mod grid;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, GCKP_MAGIC, GCKP_VERSION};
pub use grid::{cell_seed, train_grid, update_online, CellModel, GridForecaster, GridTrainReport};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Normalizer;
use crate::error::{Error, Result};
use crate::lstm::{lstm_backward, lstm_backward_seq, lstm_forward, CellVariant, ForwardCache, LstmParams, LstmState};
use crate::optim::mse_loss;
use crate::tensor::{sigmoid_scalar, Matrix};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockConfig {
    /// History length in days.
    pub k: usize,
    /// Prediction length in days.
    pub l: usize,
    pub lstm_layers: usize,
    /// Hidden size of every LSTM layer.
    pub units: usize,
    /// Output sizes of the fully-connected layers; the last equals `l`.
    pub fc_units: Vec<usize>,
    pub variant: CellVariant,
}

impl BlockConfig {
    /// One LSTM layer of 6 units and one fully-connected layer of `l` units.
    pub fn new(k: usize, l: usize) -> Self {
        BlockConfig {
            k,
            l,
            lstm_layers: 1,
            units: 6,
            fc_units: vec![l],
            variant: CellVariant::Paper,
        }
    }

    pub fn with_units(mut self, units: usize) -> Self {
        self.units = units;
        self
    }

    pub fn with_lstm_layers(mut self, n: usize) -> Self {
        self.lstm_layers = n;
        self
    }

    pub fn with_fc_units(mut self, fc_units: Vec<usize>) -> Self {
        self.fc_units = fc_units;
        self
    }

    pub fn with_variant(mut self, variant: CellVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn fc_layers(&self) -> usize {
        self.fc_units.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 || self.k < self.l {
            return Err(Error::arg(format!("need k >= l >= 1 (k {}, l {})", self.k, self.l)));
        }
        if self.lstm_layers == 0 || self.units == 0 {
            return Err(Error::arg(format!(
                "need at least one LSTM layer with at least one unit (layers {}, units {})",
                self.lstm_layers, self.units
            )));
        }
        if self.fc_units.contains(&0) {
            return Err(Error::arg("fully-connected layer sizes must be positive"));
        }
        if self.fc_units.last() != Some(&self.l) {
            return Err(Error::arg(format!(
                "last fully-connected layer must have l = {} units, got {:?}",
                self.l, self.fc_units
            )));
        }
        Ok(())
    }
}

/// Affine layer `y = σ(W x + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Matrix,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            weights: Matrix::zeros(outputs, inputs),
            bias: Matrix::zeros(outputs, 1),
        }
    }

    fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut z = self.weights.matmul(x)?;
        z.add_assign(&self.bias)?;
        Ok(z.map(sigmoid_scalar))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForecastModel {
    config: BlockConfig,
    pub lstm: Vec<LstmParams>,
    pub fc: Vec<Dense>,
    pub norm: Normalizer,
}

struct BlockCache {
    lstm: Vec<ForwardCache>,
    /// Input to each dense layer followed by the final output.
    activations: Vec<Matrix>,
}

impl ForecastModel {
    pub fn zeros(config: BlockConfig, norm: Normalizer) -> Result<Self> {
        config.validate()?;
        let lstm = (0..config.lstm_layers)
            .map(|j| LstmParams::zeros(config.units, if j == 0 { 1 } else { config.units }))
            .collect::<Result<Vec<_>>>()?;
        let mut fc = Vec::with_capacity(config.fc_layers());
        let mut fan_in = config.units;
        for &out in &config.fc_units {
            fc.push(Dense::zeros(fan_in, out));
            fan_in = out;
        }
        Ok(ForecastModel { config, lstm, fc, norm })
    }

    /// Uniform `±1/√fan_in` weights, zero biases, deterministic in `seed`.
    pub fn new(config: BlockConfig, norm: Normalizer, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(config, norm)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut m.lstm {
            *layer = LstmParams::init_with_rng(layer.hidden(), layer.input_dim(), &mut rng)?;
        }
        for layer in &mut m.fc {
            let s = 1.0 / (layer.weights.cols() as f64).sqrt();
            for w in layer.weights.as_mut_slice() {
                *w = rng.gen_range(-s..=s);
            }
        }
        Ok(m)
    }

    pub fn config(&self) -> &BlockConfig {
        &self.config
    }

    /// Parameters in packing order: for each LSTM layer its weights then
    /// bias, then for each dense layer its weights then bias.
    pub fn params(&self) -> Vec<&Matrix> {
        let mut out = Vec::with_capacity(2 * (self.lstm.len() + self.fc.len()));
        for p in &self.lstm {
            out.push(&p.weights);
            out.push(&p.bias);
        }
        for d in &self.fc {
            out.push(&d.weights);
            out.push(&d.bias);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::with_capacity(2 * (self.lstm.len() + self.fc.len()));
        for p in &mut self.lstm {
            out.push(&mut p.weights);
            out.push(&mut p.bias);
        }
        for d in &mut self.fc {
            out.push(&mut d.weights);
            out.push(&mut d.bias);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn check_window(&self, window: &[f64]) -> Result<()> {
        if window.len() != self.config.k {
            return Err(Error::arg(format!(
                "window has {} values, model expects k = {}",
                window.len(),
                self.config.k
            )));
        }
        Ok(())
    }

    fn forward_cached(&self, window: &[f64]) -> Result<BlockCache> {
        self.check_window(window)?;
        let mut seq: Vec<Matrix> = window.iter().map(|&v| Matrix::column(&[v])).collect();
        let mut caches = Vec::with_capacity(self.lstm.len());
        for layer in &self.lstm {
            let (_, cache) = lstm_forward(layer, &seq, &LstmState::zeros(layer.hidden()), self.config.variant)?;
            seq = cache.hidden_states();
            caches.push(cache);
        }
        let mut activations = Vec::with_capacity(self.fc.len() + 1);
        activations.push(seq.pop().expect("non-empty window"));
        for d in &self.fc {
            let next = d.forward(activations.last().unwrap())?;
            activations.push(next);
        }
        Ok(BlockCache { lstm: caches, activations })
    }

    /// Normalized window of `k` values to `l` normalized outputs in (0, 1).
    pub fn block_forward(&self, window: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(window)?.activations.pop().unwrap().into_vec())
    }

    /// Physical-unit window to physical-unit forecast.
    pub fn predict(&self, raw_window: &[f64]) -> Result<Vec<f64>> {
        let window: Vec<f64> = raw_window.iter().map(|&x| self.norm.normalize(x)).collect();
        Ok(self
            .block_forward(&window)?
            .into_iter()
            .map(|y| self.norm.denormalize(y))
            .collect())
    }

    /// MSE of one normalized window against its normalized target, with the
    /// gradient for every parameter in [`ForecastModel::params`] order.
    pub fn loss_and_grad(&self, window: &[f64], target: &[f64]) -> Result<(f64, Vec<Matrix>)> {
        let cache = self.forward_cached(window)?;
        let output = cache.activations.last().unwrap();
        let (loss, dy) = mse_loss(output.as_slice(), target)?;

        let mut fc_grads = Vec::with_capacity(2 * self.fc.len());
        let mut upstream = Matrix::column(&dy);
        for (j, d) in self.fc.iter().enumerate().rev() {
            let y = &cache.activations[j + 1];
            let dz = upstream.hadamard(&y.map(|v| v * (1.0 - v)))?;
            let mut dw = Matrix::zeros(d.weights.rows(), d.weights.cols());
            dw.add_outer(&dz, &cache.activations[j])?;
            upstream = d.weights.t_matmul(&dz)?;
            fc_grads.push(dz);
            fc_grads.push(dw);
        }
        fc_grads.reverse();

        let variant = self.config.variant;
        let mut lstm_grads = Vec::with_capacity(2 * self.lstm.len());
        let top = self.lstm.len() - 1;
        let mut grad = lstm_backward(&self.lstm[top], &cache.lstm[top], &upstream, variant)?;
        for j in (0..top).rev() {
            lstm_grads.push(grad.bias);
            lstm_grads.push(grad.weights);
            grad = lstm_backward_seq(&self.lstm[j], &cache.lstm[j], &grad.inputs, variant)?;
        }
        lstm_grads.push(grad.bias);
        lstm_grads.push(grad.weights);
        lstm_grads.reverse();

        lstm_grads.extend(fc_grads);
        Ok((loss, lstm_grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::lstm_forward;

    fn norm() -> Normalizer {
        Normalizer::new(0.0, 20.0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(BlockConfig::new(10, 1).validate().is_ok());
        assert!(BlockConfig::new(3, 7).validate().is_err());
        assert!(BlockConfig::new(10, 7).with_fc_units(vec![10, 6]).validate().is_err());
        assert!(BlockConfig::new(10, 7).with_lstm_layers(0).validate().is_err());
        assert!(BlockConfig::new(10, 7).with_fc_units(vec![10, 7]).validate().is_ok());
    }

    #[test]
    fn zero_model_outputs_half() {
        let m = ForecastModel::zeros(BlockConfig::new(5, 3).with_lstm_layers(2), norm()).unwrap();
        assert_eq!(m.block_forward(&[0.1, 0.9, 0.3, 0.4, 0.5]).unwrap(), vec![0.5; 3]);
        let p = m.predict(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(p.iter().all(|&v| (v - 10.0).abs() < 1e-12));
    }

    #[test]
    fn output_length_and_range() {
        for seed in 0..5 {
            let cfg = BlockConfig::new(8, 4).with_units(3).with_fc_units(vec![5, 4]);
            let m = ForecastModel::new(cfg, norm(), seed).unwrap();
            let out = m.block_forward(&[0.5; 8]).unwrap();
            assert_eq!(out.len(), 4);
            assert!(out.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn composition_oracle() {
        let cfg = BlockConfig::new(3, 1).with_units(2);
        let m = ForecastModel::new(cfg, norm(), 0).unwrap();
        let window = [0.2, 0.6, 0.4];
        let xs: Vec<Matrix> = window.iter().map(|&v| Matrix::column(&[v])).collect();
        let (state, _) = lstm_forward(&m.lstm[0], &xs, &LstmState::zeros(2), CellVariant::Paper).unwrap();
        let d = &m.fc[0];
        let z = d.weights[(0, 0)] * state.h[(0, 0)] + d.weights[(0, 1)] * state.h[(1, 0)] + d.bias[(0, 0)];
        let expected = 1.0 / (1.0 + (-z).exp());
        assert!((m.block_forward(&window).unwrap()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn predict_consistent_with_block_forward() {
        let cfg = BlockConfig::new(4, 2).with_units(3);
        let m = ForecastModel::new(cfg, Normalizer::new(-2.0, 25.0).unwrap(), 9).unwrap();
        let raw = [3.0, 4.5, 6.0, 5.5];
        let normed: Vec<f64> = raw.iter().map(|&x| m.norm.normalize(x)).collect();
        let direct: Vec<f64> = m.block_forward(&normed).unwrap().iter().map(|&y| m.norm.denormalize(y)).collect();
        for (a, b) in m.predict(&raw).unwrap().iter().zip(direct) {
            assert!((a - b).abs() < 1e-10);
        }
        let bounded = m.predict(&[11.5; 4]).unwrap();
        let span = 25.0 + 2.0;
        assert!(bounded.iter().all(|&v| v > -2.0 - span / 8.0 && v < 25.0 + span / 8.0));
    }

    #[test]
    fn window_length_checked() {
        let m = ForecastModel::zeros(BlockConfig::new(5, 1), norm()).unwrap();
        assert!(matches!(m.block_forward(&[0.5; 4]), Err(Error::Argument(_))));
    }

    #[test]
    fn param_order_and_count() {
        let cfg = BlockConfig::new(6, 2).with_units(3).with_lstm_layers(2).with_fc_units(vec![4, 2]);
        let m = ForecastModel::new(cfg, norm(), 1).unwrap();
        let shapes: Vec<_> = m.params().iter().map(|p| p.shape()).collect();
        assert_eq!(shapes, vec![(12, 4), (12, 1), (12, 6), (12, 1), (4, 3), (4, 1), (2, 4), (2, 1)]);
        let (_, grads) = m.loss_and_grad(&[0.5; 6], &[0.2, 0.7]).unwrap();
        assert_eq!(grads.iter().map(|g| g.shape()).collect::<Vec<_>>(), shapes);
    }
}
