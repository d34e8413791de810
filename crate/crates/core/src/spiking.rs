//! Leaky integrate-and-fire neurons with an arctan surrogate gradient.
//!
//! Forward dynamics per step:
//!
//! ```text
//! H[t] = V[t-1] - (V[t-1] - V_reset) / tau + X[t]
//! S[t] = H[t] > V_th
//! V[t] = V_reset if S[t] else H[t]
//! ```
//!
//! The backward pass substitutes `g'(H - V_th)` for the Heaviside derivative
//! and treats the reset as a constant (no gradient through `S` into `V`).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convert::{EventVolume, Polarity};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifParams {
    pub tau: f64,
    pub v_th: f64,
    pub v_reset: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        Self {
            tau: 2.0,
            v_th: 1.0,
            v_reset: 0.0,
        }
    }
}

impl LifParams {
    /// Membrane charge before firing.
    pub fn charge(&self, v: f64, x: f64) -> f64 {
        v - (v - self.v_reset) / self.tau + x
    }

    /// `dH/dV`.
    pub fn leak(&self) -> f64 {
        1.0 - 1.0 / self.tau
    }
}

/// One step from potential `v` with input `x`: `(spike, new potential)`.
pub fn lif_step(params: &LifParams, v: f64, x: f64) -> (bool, f64) {
    let h = params.charge(v, x);
    let spike = h > params.v_th;
    (spike, if spike { params.v_reset } else { h })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    pub alpha: f64,
}

impl Default for Surrogate {
    fn default() -> Self {
        Self { alpha: 2.0 }
    }
}

impl Surrogate {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    /// `g(x) = atan(pi/2 * alpha * x) / pi + 1/2`.
    pub fn value(&self, x: f64) -> f64 {
        (PI / 2.0 * self.alpha * x).atan() / PI + 0.5
    }

    /// `g'(x) = 2 alpha / (4 + (pi alpha x)^2)`.
    pub fn grad(&self, x: f64) -> f64 {
        let z = PI * self.alpha * x;
        2.0 * self.alpha / (4.0 + z * z)
    }
}

/// Forward pass record for one neuron over a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LifTrace {
    /// Pre-reset charge per step.
    pub charge: Vec<f64>,
    pub spikes: Vec<bool>,
}

pub fn lif_forward(params: &LifParams, inputs: &[f64]) -> LifTrace {
    let mut v = params.v_reset;
    let mut charge = Vec::with_capacity(inputs.len());
    let mut spikes = Vec::with_capacity(inputs.len());
    for &x in inputs {
        let h = params.charge(v, x);
        let s = h > params.v_th;
        charge.push(h);
        spikes.push(s);
        v = if s { params.v_reset } else { h };
    }
    LifTrace { charge, spikes }
}

/// Backpropagation through time for a loss with spike gradients
/// `dloss_dspikes`, starting from `V = V_reset`. Returns `dL/dX[t]`.
pub fn lif_sequence_grad(
    params: &LifParams,
    surrogate: &Surrogate,
    inputs: &[f64],
    dloss_dspikes: &[f64],
) -> Result<Vec<f64>> {
    if inputs.is_empty() {
        return Err(Error::Empty("input sequence"));
    }
    if inputs.len() != dloss_dspikes.len() {
        return Err(Error::InvalidConfig(format!(
            "{} inputs but {} spike gradients",
            inputs.len(),
            dloss_dspikes.len()
        )));
    }
    let trace = lif_forward(params, inputs);
    Ok(backward(params, surrogate, &trace, dloss_dspikes))
}

fn backward(params: &LifParams, surrogate: &Surrogate, trace: &LifTrace, dl_ds: &[f64]) -> Vec<f64> {
    let mut grads = vec![0.0; trace.charge.len()];
    let mut dl_dv = 0.0;
    for t in (0..trace.charge.len()).rev() {
        let keep = if trace.spikes[t] { 0.0 } else { 1.0 };
        let dl_dh = dl_ds[t] * surrogate.grad(trace.charge[t] - params.v_th) + dl_dv * keep;
        grads[t] = dl_dh;
        dl_dv = dl_dh * params.leak();
    }
    grads
}

/// Per-timestep input features of a volume: both polarity planes flattened.
pub fn volume_features(vol: &EventVolume) -> Vec<Vec<f64>> {
    (0..vol.timesteps())
        .map(|t| {
            [Polarity::On, Polarity::Off]
                .iter()
                .flat_map(|&p| vol.plane(t, p).iter().map(|&b| if b { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect()
}

/// A single LIF layer followed by an affine readout of spike rates, trained
/// with softmax cross-entropy.
#[derive(Debug, Clone)]
pub struct SpikingClassifier {
    inputs: usize,
    hidden: usize,
    classes: usize,
    w_in: Vec<f64>,
    b_in: Vec<f64>,
    w_out: Vec<f64>,
    b_out: Vec<f64>,
    pub params: LifParams,
    pub surrogate: Surrogate,
}

struct Forward {
    currents: Vec<Vec<f64>>,
    traces: Vec<LifTrace>,
    rates: Vec<f64>,
    probs: Vec<f64>,
}

impl SpikingClassifier {
    pub fn new(inputs: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 3.0 / (inputs as f64).sqrt();
        let w_in = (0..inputs * hidden)
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        let out_scale = 1.0 / (hidden as f64).sqrt();
        let w_out = (0..hidden * classes)
            .map(|_| rng.random_range(-out_scale..out_scale))
            .collect();
        Self {
            inputs,
            hidden,
            classes,
            w_in,
            b_in: vec![0.5; hidden],
            w_out,
            b_out: vec![0.0; classes],
            params: LifParams::default(),
            surrogate: Surrogate::default(),
        }
    }

    fn forward(&self, seq: &[Vec<f64>]) -> Forward {
        let steps = seq.len();
        let currents: Vec<Vec<f64>> = (0..self.hidden)
            .map(|j| {
                let w = &self.w_in[j * self.inputs..(j + 1) * self.inputs];
                seq.iter()
                    .map(|x| self.b_in[j] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                    .collect()
            })
            .collect();
        let traces: Vec<LifTrace> = currents.iter().map(|c| lif_forward(&self.params, c)).collect();
        let rates: Vec<f64> = traces
            .iter()
            .map(|tr| tr.spikes.iter().filter(|&&s| s).count() as f64 / steps as f64)
            .collect();
        let logits: Vec<f64> = (0..self.classes)
            .map(|k| {
                let w = &self.w_out[k * self.hidden..(k + 1) * self.hidden];
                self.b_out[k] + w.iter().zip(&rates).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = exp.iter().sum();
        Forward {
            currents,
            traces,
            rates,
            probs: exp.iter().map(|e| e / z).collect(),
        }
    }

    pub fn predict(&self, seq: &[Vec<f64>]) -> usize {
        let f = self.forward(seq);
        f.probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0)
    }

    pub fn loss(&self, seq: &[Vec<f64>], label: usize) -> f64 {
        -self.forward(seq).probs[label].max(1e-300).ln()
    }

    /// One SGD pass over `data`; returns the mean loss before each update.
    pub fn train_epoch(&mut self, data: &[(Vec<Vec<f64>>, usize)], lr: f64) -> f64 {
        let mut total = 0.0;
        for (seq, label) in data {
            let f = self.forward(seq);
            total += -f.probs[*label].max(1e-300).ln();
            let steps = seq.len() as f64;

            let dlogits: Vec<f64> = f
                .probs
                .iter()
                .enumerate()
                .map(|(k, &p)| p - if k == *label { 1.0 } else { 0.0 })
                .collect();
            let mut drates = vec![0.0; self.hidden];
            for (k, &g) in dlogits.iter().enumerate() {
                let w = &mut self.w_out[k * self.hidden..(k + 1) * self.hidden];
                for (j, wj) in w.iter_mut().enumerate() {
                    drates[j] += g * *wj;
                    *wj -= lr * g * f.rates[j];
                }
                self.b_out[k] -= lr * g;
            }
            for (j, &dr) in drates.iter().enumerate() {
                let dl_ds = vec![dr / steps; seq.len()];
                let dx = backward(&self.params, &self.surrogate, &f.traces[j], &dl_ds);
                debug_assert_eq!(dx.len(), f.currents[j].len());
                let w = &mut self.w_in[j * self.inputs..(j + 1) * self.inputs];
                for (t, &g) in dx.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    for (wi, &xi) in w.iter_mut().zip(&seq[t]) {
                        *wi -= lr * g * xi;
                    }
                    self.b_in[j] -= lr * g;
                }
            }
        }
        total / data.len().max(1) as f64
    }
}
