//! ε-insensitive support vector regression with an RBF kernel, solved in
//! the dual by sequential minimal optimization.
//!
//! The dual is written over `2n` variables `β` (the positive and negative
//! halves of each coefficient) as
//!
//! ```text
//! min ½ βᵀQβ + pᵀβ   s.t.  yᵀβ = 0,  0 ≤ β ≤ C
//! y = [+1…; −1…],  p = [ε − z; ε + z],  Q_st = y_s y_t K(x_s mod n, x_t mod n)
//! ```
//!
//! Pairs are chosen by maximal violation for the first index and second-order
//! gain for the second; iteration stops when the maximal KKT gap drops below
//! `tol`. The regression coefficient of point `i` is `β_i − β_{i+n}`.

use std::collections::{HashMap, VecDeque};

use crate::data::WindowSet;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

pub fn rbf_kernel(x: &[f64], y: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::arg(format!("kernel width must be positive, got {sigma}")));
    }
    if x.len() != y.len() {
        return Err(Error::arg(format!("kernel inputs differ in length ({} vs {})", x.len(), y.len())));
    }
    Ok(rbf(x, y, 1.0 / (2.0 * sigma * sigma)))
}

#[inline]
fn rbf(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub sigma: f64,
    /// Stopping threshold on the maximal KKT gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Upper bound on cached kernel rows, in bytes.
    pub cache_bytes: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 10.0,
            epsilon: 0.01,
            sigma: 1.6,
            tol: 1e-3,
            max_iter: 10_000_000,
            cache_bytes: 256 << 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvrModel {
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub bias: f64,
    pub sigma: f64,
    pub c: f64,
    pub epsilon: f64,
}

impl SvrModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let gamma = 1.0 / (2.0 * self.sigma * self.sigma);
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, a)| a * rbf(s, x, gamma))
            .sum::<f64>()
            + self.bias
    }
}

/// Solver output: the model plus full per-point diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct SvrFit {
    pub model: SvrModel,
    /// Coefficient of every training point (zero off the support).
    pub dual: Vec<f64>,
    /// Dual objective `½ αᵀKα + ε Σ|α| − zᵀα` at the solution.
    pub objective: f64,
    pub iterations: usize,
    /// KKT gap at termination.
    pub gap: f64,
}

struct KernelRows<'a> {
    inputs: &'a [Vec<f64>],
    gamma: f64,
    rows: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(inputs: &'a [Vec<f64>], gamma: f64, cache_bytes: usize) -> Self {
        let per_row = (8 * inputs.len()).max(1);
        KernelRows {
            inputs,
            gamma,
            rows: HashMap::new(),
            order: VecDeque::new(),
            capacity: (cache_bytes / per_row).max(2),
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if !self.rows.contains_key(&i) {
            if self.rows.len() >= self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.rows.remove(&old);
                }
            }
            let xi = &self.inputs[i];
            let row = self.inputs.iter().map(|xj| rbf(xi, xj, self.gamma)).collect();
            self.rows.insert(i, row);
            self.order.push_back(i);
        }
        &self.rows[&i]
    }
}

pub fn svr_solve(inputs: &[Vec<f64>], targets: &[f64], params: &SvrParams) -> Result<SvrFit> {
    let n = inputs.len();
    if n < 2 || targets.len() != n {
        return Err(Error::arg(format!(
            "SVR needs at least two points with one target each ({} inputs, {} targets)",
            n,
            targets.len()
        )));
    }
    if let Some(first) = inputs.first() {
        if inputs.iter().any(|x| x.len() != first.len()) {
            return Err(Error::arg("SVR inputs differ in length"));
        }
    }
    if !(params.c > 0.0 && params.epsilon >= 0.0 && params.sigma > 0.0 && params.tol > 0.0) {
        return Err(Error::arg(format!("invalid SVR parameters {params:?}")));
    }

    let c = params.c;
    let gamma = 1.0 / (2.0 * params.sigma * params.sigma);
    let mut kernel = KernelRows::new(inputs, gamma, params.cache_bytes);
    let m = 2 * n;
    let y = |t: usize| if t < n { 1.0 } else { -1.0 };
    let p: Vec<f64> = (0..m)
        .map(|t| if t < n { params.epsilon - targets[t] } else { params.epsilon + targets[t - n] })
        .collect();
    let mut beta = vec![0.0; m];
    let mut grad = p.clone();
    let in_up = |t: usize, b: f64| if t < n { b < c } else { b > 0.0 };
    let in_low = |t: usize, b: f64| if t < n { b > 0.0 } else { b < c };

    let mut iterations = 0;
    let gap = loop {
        // first index: maximal violation among variables that can move up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..m {
            if in_up(t, beta[t]) && -y(t) * grad[t] >= gmax {
                gmax = -y(t) * grad[t];
                i = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        if i != usize::MAX {
            let ki = kernel.row(i % n).to_vec();
            for t in 0..m {
                if !in_low(t, beta[t]) {
                    continue;
                }
                let yg = y(t) * grad[t];
                gmax2 = gmax2.max(yg);
                let b = gmax + yg;
                if b > 0.0 {
                    // Q_ii + Q_tt - 2 y_i y_t Q_it reduces to 2 - 2K for a unit-diagonal kernel
                    let a = (2.0 - 2.0 * ki[t % n]).max(TAU);
                    let obj = -(b * b) / a;
                    if obj <= best_obj {
                        best_obj = obj;
                        j = t;
                    }
                }
            }
        }
        let gap = gmax + gmax2;
        if i == usize::MAX || j == usize::MAX || gap < params.tol {
            break gap.max(0.0);
        }
        if iterations >= params.max_iter {
            return Err(Error::NoConvergence { iterations, gap });
        }
        iterations += 1;

        let (yi, yj) = (y(i), y(j));
        let kij = kernel.row(i % n)[j % n];
        let qij = yi * yj * kij;
        let (old_i, old_j) = (beta[i], beta[j]);
        if yi != yj {
            let quad = (2.0 + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if diff > 0.0 {
                if beta[j] < 0.0 {
                    beta[j] = 0.0;
                    beta[i] = diff;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = -diff;
            }
            if diff > 0.0 {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = c - diff;
                }
            } else if beta[j] > c {
                beta[j] = c;
                beta[i] = c + diff;
            }
        } else {
            let quad = (2.0 - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if sum > c {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = sum - c;
                }
            } else if beta[j] < 0.0 {
                beta[j] = 0.0;
                beta[i] = sum;
            }
            if sum > c {
                if beta[j] > c {
                    beta[j] = c;
                    beta[i] = sum - c;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = sum;
            }
        }

        let (di, dj) = (beta[i] - old_i, beta[j] - old_j);
        let ki = kernel.row(i % n).to_vec();
        let kj = kernel.row(j % n);
        for t in 0..m {
            let yt = y(t);
            grad[t] += yt * (yi * ki[t % n] * di + yj * kj[t % n] * dj);
        }
    };

    // bias: average over free variables, else midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..m {
        let yg = y(t) * grad[t];
        if beta[t] >= c {
            if y(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if beta[t] <= 0.0 {
            if y(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };

    let dual: Vec<f64> = (0..n).map(|i| beta[i] - beta[i + n]).collect();
    let objective = 0.5 * (0..m).map(|t| beta[t] * (grad[t] + p[t])).sum::<f64>();
    let (support, coef): (Vec<Vec<f64>>, Vec<f64>) = dual
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != 0.0)
        .map(|(i, &a)| (inputs[i].clone(), a))
        .unzip();

    Ok(SvrFit {
        model: SvrModel {
            support,
            coef,
            bias: -rho,
            sigma: params.sigma,
            c,
            epsilon: params.epsilon,
        },
        dual,
        objective,
        iterations,
        gap,
    })
}

pub fn svr_fit(inputs: &[Vec<f64>], targets: &[f64], params: &SvrParams) -> Result<SvrModel> {
    Ok(svr_solve(inputs, targets, params)?.model)
}

/// One single-output SVR per forecast day.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizonSvr {
    pub models: Vec<SvrModel>,
}

impl HorizonSvr {
    pub fn fit(windows: &WindowSet, params: &SvrParams) -> Result<Self> {
        let models = (0..windows.l)
            .map(|h| {
                let targets: Vec<f64> = windows.targets.iter().map(|t| t[h]).collect();
                svr_fit(&windows.inputs, &targets, params)
            })
            .collect::<Result<_>>()?;
        Ok(HorizonSvr { models })
    }

    pub fn predict(&self, window: &[f64]) -> Vec<f64> {
        self.models.iter().map(|m| m.predict(window)).collect()
    }
}
