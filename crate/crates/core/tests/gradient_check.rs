//! Central finite differences against analytic backpropagation.

use gridcast::lstm::{lstm_backward, lstm_forward, CellVariant, LstmParams, LstmState};
use gridcast::model::BlockConfig;
use gridcast::tensor::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

use common::{block_gradient_error, rel_err, FD_MAX_REL as MAX_REL, FD_STEP as STEP};

fn lstm_objective(p: &LstmParams, xs: &[Matrix], probe: &Matrix, variant: CellVariant) -> f64 {
    let (s, _) = lstm_forward(p, xs, &LstmState::zeros(p.hidden()), variant).unwrap();
    s.h.as_slice().iter().zip(probe.as_slice()).map(|(a, b)| a * b).sum()
}

#[test]
fn lstm_layer_matches_finite_differences() {
    for variant in [CellVariant::Paper, CellVariant::Standard] {
        let p = LstmParams::init(2, 1, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<Matrix> = (0..4).map(|_| Matrix::column(&[rng.gen_range(-1.0..1.0)])).collect();
        let probe = Matrix::column(&[0.7, -1.3]);
        let (_, cache) = lstm_forward(&p, &xs, &LstmState::zeros(2), variant).unwrap();
        let g = lstm_backward(&p, &cache, &probe, variant).unwrap();

        let mut worst: f64 = 0.0;
        for which in 0..2 {
            let n = if which == 0 { p.weights.len() } else { p.bias.len() };
            for idx in 0..n {
                let mut up = p.clone();
                let mut down = p.clone();
                let (u, d) = if which == 0 {
                    (&mut up.weights, &mut down.weights)
                } else {
                    (&mut up.bias, &mut down.bias)
                };
                u.as_mut_slice()[idx] += STEP;
                d.as_mut_slice()[idx] -= STEP;
                let numeric = (lstm_objective(&up, &xs, &probe, variant) - lstm_objective(&down, &xs, &probe, variant)) / (2.0 * STEP);
                let analytic = if which == 0 { g.weights.as_slice()[idx] } else { g.bias.as_slice()[idx] };
                worst = worst.max(rel_err(analytic, numeric));
            }
        }
        for t in 0..xs.len() {
            let mut up = xs.clone();
            let mut down = xs.clone();
            up[t][(0, 0)] += STEP;
            down[t][(0, 0)] -= STEP;
            let numeric = (lstm_objective(&p, &up, &probe, variant) - lstm_objective(&p, &down, &probe, variant)) / (2.0 * STEP);
            worst = worst.max(rel_err(g.inputs[t][(0, 0)], numeric));
        }
        assert!(worst < MAX_REL, "{variant}: worst relative error {worst:e}");
    }
}

#[test]
fn stacked_block_matches_finite_differences() {
    for variant in [CellVariant::Paper, CellVariant::Standard] {
        let config = BlockConfig::new(5, 2)
            .with_units(3)
            .with_lstm_layers(2)
            .with_fc_units(vec![4, 2])
            .with_variant(variant);
        let worst = block_gradient_error(config, 7);
        assert!(worst < MAX_REL, "{variant}: worst relative error {worst:e}");
    }
}
