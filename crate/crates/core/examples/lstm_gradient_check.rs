//! Backpropagation through time on a single LSTM layer, checked against
//! central finite differences.
//!
//! ```bash
//! cargo run --release -p gridcast --example lstm_gradient_check
//! ```

use gridcast::lstm::{lstm_backward, lstm_forward, CellVariant, LstmParams, LstmState};
use gridcast::tensor::Matrix;

fn objective(p: &LstmParams, xs: &[Matrix], probe: &Matrix, variant: CellVariant) -> f64 {
    let (state, _) = lstm_forward(p, xs, &LstmState::zeros(p.hidden()), variant).unwrap();
    state.h.as_slice().iter().zip(probe.as_slice()).map(|(h, w)| h * w).sum()
}

fn main() -> gridcast::Result<()> {
    let xs: Vec<Matrix> = [0.31, 0.45, 0.52, 0.48, 0.60, 0.66].iter().map(|&v| Matrix::column(&[v])).collect();
    let probe = Matrix::column(&[1.0, -0.5, 0.25]);
    let step = 1e-5;

    for variant in [CellVariant::Paper, CellVariant::Standard] {
        let p = LstmParams::init(3, 1, 7)?;
        let (_, cache) = lstm_forward(&p, &xs, &LstmState::zeros(3), variant)?;
        let grads = lstm_backward(&p, &cache, &probe, variant)?;

        let mut worst: f64 = 0.0;
        for idx in 0..p.weights.len() {
            let (mut up, mut down) = (p.clone(), p.clone());
            up.weights.as_mut_slice()[idx] += step;
            down.weights.as_mut_slice()[idx] -= step;
            let numeric = (objective(&up, &xs, &probe, variant) - objective(&down, &xs, &probe, variant)) / (2.0 * step);
            let analytic = grads.weights.as_slice()[idx];
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6));
        }
        println!(
            "{variant:>8}: {} weight gradients, worst relative error {worst:.2e}; dL/dx_1 = {:+.5}",
            p.weights.len(),
            grads.inputs[0][(0, 0)]
        );
    }
    Ok(())
}
