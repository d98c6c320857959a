//! Independent oracles shared by the integration suites. Nothing here calls
//! into the code path it is used to check.

#![allow(dead_code)]

use gridcast::data::Normalizer;
use gridcast::eval::SvrModel;
use gridcast::model::{BlockConfig, ForecastModel};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_MAX_REL: f64 = 1e-5;
/// Gradients smaller than this are compared absolutely; their central
/// difference is dominated by rounding.
pub const FD_ABS_FLOOR: f64 = 1e-6;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_ABS_FLOOR)
}

/// Max relative error between the analytic gradient of a random block and
/// central differences of its loss, over every parameter.
pub fn block_gradient_error(config: BlockConfig, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
    let model = ForecastModel::new(config.clone(), Normalizer::new(0.0, 1.0).unwrap(), seed).unwrap();
    let window: Vec<f64> = (0..config.k).map(|_| rng.gen_range(0.1..0.9)).collect();
    let target: Vec<f64> = (0..config.l).map(|_| rng.gen_range(0.1..0.9)).collect();
    let loss = |m: &ForecastModel| {
        let out = m.block_forward(&window).unwrap();
        out.iter().zip(&target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / out.len() as f64
    };
    let (_, grads) = model.loss_and_grad(&window, &target).unwrap();
    let mut worst: f64 = 0.0;
    for (pi, g) in grads.iter().enumerate() {
        for idx in 0..g.len() {
            let mut up = model.clone();
            let mut down = model.clone();
            up.params_mut()[pi].as_mut_slice()[idx] += FD_STEP;
            down.params_mut()[pi].as_mut_slice()[idx] -= FD_STEP;
            let numeric = (loss(&up) - loss(&down)) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(g.as_slice()[idx], numeric));
        }
    }
    worst
}

pub fn gaussian_kernel_matrix(xs: &[Vec<f64>], sigma: f64) -> DMatrix<f64> {
    DMatrix::from_fn(xs.len(), xs.len(), |i, j| {
        let d2: f64 = xs[i].iter().zip(&xs[j]).map(|(a, b)| (a - b).powi(2)).sum();
        (-d2 / (2.0 * sigma * sigma)).exp()
    })
}

/// `½ αᵀKα + ε Σ|α| − zᵀα`
pub fn svr_dual_objective(k: &DMatrix<f64>, alpha: &[f64], z: &[f64], eps: f64) -> f64 {
    let a = DVector::from_column_slice(alpha);
    0.5 * (a.transpose() * k * &a)[(0, 0)] + eps * alpha.iter().map(|v| v.abs()).sum::<f64>()
        - alpha.iter().zip(z).map(|(a, t)| a * t).sum::<f64>()
}

/// Exact minimum of the ε-SVR dual by enumerating, for every point, whether
/// its coefficient sits at 0, +C, −C, or is free with a fixed sign, and
/// solving the equality-constrained quadratic for each pattern.
pub fn svr_dual_brute_force(xs: &[Vec<f64>], z: &[f64], c: f64, eps: f64, sigma: f64) -> (f64, Vec<f64>) {
    let n = xs.len();
    let k = gaussian_kernel_matrix(xs, sigma);
    let mut best = (f64::INFINITY, vec![0.0; n]);
    let patterns = 5usize.pow(n as u32);
    for code in 0..patterns {
        let mut states = vec![0u8; n];
        let mut rest = code;
        for s in states.iter_mut() {
            *s = (rest % 5) as u8;
            rest /= 5;
        }
        let mut alpha = vec![0.0; n];
        let free: Vec<usize> = (0..n).filter(|&i| states[i] >= 3).collect();
        for i in 0..n {
            alpha[i] = match states[i] {
                1 => c,
                2 => -c,
                _ => 0.0,
            };
        }
        let fixed_sum: f64 = alpha.iter().sum();
        if free.is_empty() {
            if fixed_sum.abs() > 1e-12 {
                continue;
            }
        } else {
            let f = free.len();
            let mut a = DMatrix::<f64>::zeros(f + 1, f + 1);
            let mut rhs = DVector::<f64>::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                let sign = if states[i] == 3 { 1.0 } else { -1.0 };
                for (cc, &j) in free.iter().enumerate() {
                    a[(r, cc)] = k[(i, j)];
                }
                a[(r, f)] = 1.0;
                a[(f, r)] = 1.0;
                let fixed_part: f64 = (0..n).filter(|j| states[*j] < 3).map(|j| k[(i, j)] * alpha[j]).sum();
                rhs[r] = z[i] - eps * sign - fixed_part;
            }
            rhs[f] = -fixed_sum;
            let Some(sol) = a.lu().solve(&rhs) else { continue };
            let mut ok = true;
            for (r, &i) in free.iter().enumerate() {
                let sign = if states[i] == 3 { 1.0 } else { -1.0 };
                let v = sol[r];
                if v * sign < -1e-12 || v.abs() > c + 1e-12 {
                    ok = false;
                }
                alpha[i] = v;
            }
            if !ok {
                continue;
            }
        }
        let obj = svr_dual_objective(&k, &alpha, z, eps);
        if obj < best.0 {
            best = (obj, alpha);
        }
    }
    best
}

/// Largest violation of the ε-SVR optimality conditions over the training
/// points, given each point's coefficient.
pub fn svr_kkt_violation(model: &SvrModel, xs: &[Vec<f64>], z: &[f64], dual: &[f64]) -> f64 {
    let (c, eps) = (model.c, model.epsilon);
    let at = |a: f64, b: f64| (a - b).abs() <= 1e-12 * c.max(1.0);
    xs.iter()
        .zip(z)
        .zip(dual)
        .map(|((x, &t), &a)| {
            let r = t - model.predict(x);
            if at(a, 0.0) {
                (r.abs() - eps).max(0.0)
            } else if at(a, c) {
                (eps - r).max(0.0)
            } else if at(a, -c) {
                (r + eps).max(0.0)
            } else if a > 0.0 {
                (r - eps).abs()
            } else {
                (r + eps).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Five random points in two dimensions with targets from a smooth surface
/// plus noise.
pub fn svr_toy_problem(seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Vec<f64>> = (0..5)
        .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
        .collect();
    let z = xs
        .iter()
        .map(|x| (x[0]).sin() + 0.5 * x[1] + rng.gen_range(-0.3..0.3))
        .collect();
    (xs, z)
}
