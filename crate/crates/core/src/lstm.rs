//! Single-layer LSTM: cell step, sequence forward pass, and exact
//! backpropagation through time.
//!
//! Parameter packing: `weights` has shape `(4d, input_dim + d)` and `bias`
//! shape `(4d, 1)`. Row blocks are, in order, the input gate `i`, forget
//! gate `f`, output gate `o` and candidate `c`. Columns `0..input_dim`
//! multiply the current input and columns `input_dim..` the previous hidden
//! vector, i.e. each step evaluates `W · [x; h_prev] + b`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{sigmoid_scalar, Matrix};

/// Output rule of the cell.
///
/// `Paper` squashes the gated memory, `h' = tanh(o ⊙ m')`. `Standard` is the
/// canonical `h' = o ⊙ tanh(m')`. All other gate equations are shared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellVariant {
    #[default]
    Paper,
    Standard,
}

impl fmt::Display for CellVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            CellVariant::Paper => "paper",
            CellVariant::Standard => "standard",
        })
    }
}

impl FromStr for CellVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(CellVariant::Paper),
            "standard" => Ok(CellVariant::Standard),
            other => Err(Error::arg(format!(
                "unknown cell variant {other:?} (expected \"paper\" or \"standard\")"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    hidden: usize,
    input_dim: usize,
    pub weights: Matrix,
    pub bias: Matrix,
}

impl LstmParams {
    pub fn zeros(hidden: usize, input_dim: usize) -> Result<Self> {
        if hidden == 0 || input_dim == 0 {
            return Err(Error::arg(format!(
                "LSTM dimensions must be positive (hidden {hidden}, input {input_dim})"
            )));
        }
        Ok(LstmParams {
            hidden,
            input_dim,
            weights: Matrix::zeros(4 * hidden, input_dim + hidden),
            bias: Matrix::zeros(4 * hidden, 1),
        })
    }

    /// Uniform weights in `±1/√(input_dim + hidden)`, zero biases.
    pub fn init(hidden: usize, input_dim: usize, seed: u64) -> Result<Self> {
        Self::init_with_rng(hidden, input_dim, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn init_with_rng<R: Rng + ?Sized>(hidden: usize, input_dim: usize, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(hidden, input_dim)?;
        let s = 1.0 / ((input_dim + hidden) as f64).sqrt();
        for w in p.weights.as_mut_slice() {
            *w = rng.gen_range(-s..=s);
        }
        Ok(p)
    }

    pub fn from_parts(hidden: usize, input_dim: usize, weights: Matrix, bias: Matrix) -> Result<Self> {
        let expected = LstmParams::zeros(hidden, input_dim)?;
        if weights.shape() != expected.weights.shape() {
            return Err(Error::Shape {
                op: "LstmParams weights",
                left: expected.weights.shape(),
                right: weights.shape(),
            });
        }
        if bias.shape() != expected.bias.shape() {
            return Err(Error::Shape {
                op: "LstmParams bias",
                left: expected.bias.shape(),
                right: bias.shape(),
            });
        }
        Ok(LstmParams {
            hidden,
            input_dim,
            weights,
            bias,
        })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub h: Matrix,
    pub m: Matrix,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: Matrix::zeros(hidden, 1),
            m: Matrix::zeros(hidden, 1),
        }
    }
}

/// Everything one step needs to be differentiated later.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    /// `[x; h_prev]`
    pub concat: Matrix,
    pub m_prev: Matrix,
    /// Pre-activations, stacked `i, f, o, c`.
    pub pre: Matrix,
    /// Activations, stacked `i, f, o, c`.
    pub gates: Matrix,
    pub m: Matrix,
    pub h: Matrix,
}

impl StepRecord {
    fn gate(&self, block: usize, hidden: usize) -> &[f64] {
        &self.gates.as_slice()[block * hidden..(block + 1) * hidden]
    }

    pub fn input_gate(&self, hidden: usize) -> &[f64] {
        self.gate(0, hidden)
    }

    pub fn forget_gate(&self, hidden: usize) -> &[f64] {
        self.gate(1, hidden)
    }

    pub fn output_gate(&self, hidden: usize) -> &[f64] {
        self.gate(2, hidden)
    }

    pub fn candidate(&self, hidden: usize) -> &[f64] {
        self.gate(3, hidden)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardCache {
    pub variant: CellVariant,
    pub hidden: usize,
    pub input_dim: usize,
    pub steps: Vec<StepRecord>,
}

impl ForwardCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Hidden vectors emitted at every step, in order.
    pub fn hidden_states(&self) -> Vec<Matrix> {
        self.steps.iter().map(|s| s.h.clone()).collect()
    }
}

/// Gradients of a scalar objective with respect to one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmGrads {
    pub weights: Matrix,
    pub bias: Matrix,
    /// One entry per time step, shape `(input_dim, 1)`.
    pub inputs: Vec<Matrix>,
    pub h0: Matrix,
    pub m0: Matrix,
}

pub fn lstm_step(
    p: &LstmParams,
    x: &Matrix,
    prev: &LstmState,
    variant: CellVariant,
) -> Result<(LstmState, StepRecord)> {
    let d = p.hidden;
    if x.shape() != (p.input_dim, 1) {
        return Err(Error::Shape {
            op: "lstm_step input",
            left: (p.input_dim, 1),
            right: x.shape(),
        });
    }
    if prev.h.shape() != (d, 1) || prev.m.shape() != (d, 1) {
        return Err(Error::Shape {
            op: "lstm_step state",
            left: (d, 1),
            right: if prev.h.shape() != (d, 1) { prev.h.shape() } else { prev.m.shape() },
        });
    }

    let concat = Matrix::vstack(&[x, &prev.h])?;
    let mut pre = p.weights.matmul(&concat)?;
    pre.add_assign(&p.bias)?;

    let mut gates = pre.clone();
    {
        let g = gates.as_mut_slice();
        for v in &mut g[..3 * d] {
            *v = sigmoid_scalar(*v);
        }
        for v in &mut g[3 * d..] {
            *v = v.tanh();
        }
    }

    let mut m = Matrix::zeros(d, 1);
    let mut h = Matrix::zeros(d, 1);
    {
        let g = gates.as_slice();
        let (i, f, o, c) = (&g[..d], &g[d..2 * d], &g[2 * d..3 * d], &g[3 * d..]);
        let m_prev = prev.m.as_slice();
        let m_new = m.as_mut_slice();
        for j in 0..d {
            m_new[j] = f[j] * m_prev[j] + i[j] * c[j];
        }
        let h_new = h.as_mut_slice();
        for j in 0..d {
            h_new[j] = match variant {
                CellVariant::Paper => (o[j] * m_new[j]).tanh(),
                CellVariant::Standard => o[j] * m_new[j].tanh(),
            };
        }
    }

    let record = StepRecord {
        concat,
        m_prev: prev.m.clone(),
        pre,
        gates,
        m: m.clone(),
        h: h.clone(),
    };
    Ok((LstmState { h, m }, record))
}

pub fn lstm_forward(
    p: &LstmParams,
    xs: &[Matrix],
    init: &LstmState,
    variant: CellVariant,
) -> Result<(LstmState, ForwardCache)> {
    if xs.is_empty() {
        return Err(Error::arg("lstm_forward needs a non-empty input sequence"));
    }
    let mut state = init.clone();
    let mut steps = Vec::with_capacity(xs.len());
    for x in xs {
        let (next, record) = lstm_step(p, x, &state, variant)?;
        steps.push(record);
        state = next;
    }
    Ok((
        state,
        ForwardCache {
            variant,
            hidden: p.hidden,
            input_dim: p.input_dim,
            steps,
        },
    ))
}

/// Gradients of `⟨grad_h_final, h_T⟩`.
pub fn lstm_backward(
    p: &LstmParams,
    cache: &ForwardCache,
    grad_h_final: &Matrix,
    variant: CellVariant,
) -> Result<LstmGrads> {
    let mut per_step = vec![Matrix::zeros(p.hidden, 1); cache.len()];
    if let Some(last) = per_step.last_mut() {
        if grad_h_final.shape() != (p.hidden, 1) {
            return Err(Error::Shape {
                op: "lstm_backward grad_h_final",
                left: (p.hidden, 1),
                right: grad_h_final.shape(),
            });
        }
        *last = grad_h_final.clone();
    }
    lstm_backward_seq(p, cache, &per_step, variant)
}

/// Gradients of `Σ_t ⟨grad_hs[t], h_t⟩`, i.e. with an upstream gradient on
/// every emitted hidden vector. Used when another layer consumes the whole
/// hidden sequence.
pub fn lstm_backward_seq(
    p: &LstmParams,
    cache: &ForwardCache,
    grad_hs: &[Matrix],
    variant: CellVariant,
) -> Result<LstmGrads> {
    let d = p.hidden;
    if cache.variant != variant || cache.hidden != d || cache.input_dim != p.input_dim {
        return Err(Error::arg(format!(
            "forward cache (variant {}, hidden {}, input {}) does not match parameters (variant {}, hidden {}, input {})",
            cache.variant, cache.hidden, cache.input_dim, variant, d, p.input_dim
        )));
    }
    if cache.is_empty() {
        return Err(Error::arg("empty forward cache"));
    }
    if grad_hs.len() != cache.len() {
        return Err(Error::arg(format!(
            "{} upstream gradients for {} cached steps",
            grad_hs.len(),
            cache.len()
        )));
    }

    let mut dw = Matrix::zeros(4 * d, p.input_dim + d);
    let mut db = Matrix::zeros(4 * d, 1);
    let mut dxs = vec![Matrix::zeros(p.input_dim, 1); cache.len()];
    let mut dh_next = Matrix::zeros(d, 1);
    let mut dm_next = Matrix::zeros(d, 1);
    let mut dz = Matrix::zeros(4 * d, 1);

    for (t, step) in cache.steps.iter().enumerate().rev() {
        let gh = &grad_hs[t];
        if gh.shape() != (d, 1) {
            return Err(Error::Shape {
                op: "lstm_backward_seq upstream",
                left: (d, 1),
                right: gh.shape(),
            });
        }
        let g = step.gates.as_slice();
        let (i, f, o, c) = (&g[..d], &g[d..2 * d], &g[2 * d..3 * d], &g[3 * d..]);
        let m = step.m.as_slice();
        let h = step.h.as_slice();
        let m_prev = step.m_prev.as_slice();

        let dzs = dz.as_mut_slice();
        let dm_carry = dm_next.as_mut_slice();
        for j in 0..d {
            let dh = gh.as_slice()[j] + dh_next.as_slice()[j];
            let (d_o, dm) = match variant {
                CellVariant::Paper => {
                    let da = dh * (1.0 - h[j] * h[j]);
                    (da * m[j], dm_carry[j] + da * o[j])
                }
                CellVariant::Standard => {
                    let tm = m[j].tanh();
                    (dh * tm, dm_carry[j] + dh * o[j] * (1.0 - tm * tm))
                }
            };
            let di = dm * c[j];
            let df = dm * m_prev[j];
            let dc = dm * i[j];
            dm_carry[j] = dm * f[j];

            dzs[j] = di * i[j] * (1.0 - i[j]);
            dzs[d + j] = df * f[j] * (1.0 - f[j]);
            dzs[2 * d + j] = d_o * o[j] * (1.0 - o[j]);
            dzs[3 * d + j] = dc * (1.0 - c[j] * c[j]);
        }

        dw.add_outer(&dz, &step.concat)?;
        db.add_assign(&dz)?;
        let dconcat = p.weights.t_matmul(&dz)?;
        dxs[t] = dconcat.row_slice(0, p.input_dim);
        dh_next = dconcat.row_slice(p.input_dim, p.input_dim + d);
    }

    Ok(LstmGrads {
        weights: dw,
        bias: db,
        inputs: dxs,
        h0: dh_next,
        m0: dm_next,
    })
}
