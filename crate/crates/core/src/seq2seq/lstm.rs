//! One LSTM layer: parameters, the single-step recurrence, and batched
//! forward/backward over a step-aligned sequence.
//!
//! Gates are stacked input|forget|candidate|output in every 4H-wide buffer.

use rand::Rng;

use crate::error::{Error, Result};

use super::math::{matvec_add, matvec_t_add, outer_add, sigmoid};

/// Stacked gate order used by all 4H-wide tensors and the checkpoint format.
pub const GATE_ORDER: &str = "ifgo";

/// Weights of one LSTM layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    pub input_dim: usize,
    pub hidden: usize,
    /// (4H, input_dim) row-major.
    pub w_input: Vec<f64>,
    /// (4H, H) row-major.
    pub w_hidden: Vec<f64>,
    /// 4H.
    pub bias: Vec<f64>,
}

impl LstmLayerParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmLayerParams {
            input_dim,
            hidden,
            w_input: vec![0.0; 4 * hidden * input_dim],
            w_hidden: vec![0.0; 4 * hidden * hidden],
            bias: vec![0.0; 4 * hidden],
        }
    }

    pub fn random<R: Rng>(input_dim: usize, hidden: usize, scale: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_dim, hidden);
        for w in p.w_input.iter_mut().chain(p.w_hidden.iter_mut()) {
            *w = rng.gen_range(-scale..scale);
        }
        p
    }

    /// Standard LSTM recurrence: i,f,o = sigmoid, g = tanh,
    /// c' = f*c + i*g, h' = o * tanh(c').
    pub fn step(&self, x: &[f64], h: &[f64], c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if x.len() != self.input_dim || h.len() != self.hidden || c.len() != self.hidden {
            return Err(Error::Shape(format!(
                "lstm step expects x[{}], h[{}], c[{}]; got x[{}], h[{}], c[{}]",
                self.input_dim,
                self.hidden,
                self.hidden,
                x.len(),
                h.len(),
                c.len()
            )));
        }
        let hid = self.hidden;
        let mut z = self.bias.clone();
        matvec_add(&self.w_input, 4 * hid, self.input_dim, x, &mut z);
        matvec_add(&self.w_hidden, 4 * hid, hid, h, &mut z);
        let mut h_new = vec![0.0; hid];
        let mut c_new = vec![0.0; hid];
        for k in 0..hid {
            let i = sigmoid(z[k]);
            let f = sigmoid(z[hid + k]);
            let g = z[2 * hid + k].tanh();
            let o = sigmoid(z[3 * hid + k]);
            c_new[k] = f * c[k] + i * g;
            h_new[k] = o * c_new[k].tanh();
        }
        Ok((h_new, c_new))
    }
}

/// Accumulated parameter gradients for one layer.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub w_input: Vec<f64>,
    pub w_hidden: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerGrads {
    pub fn zeros_like(params: &LstmLayerParams) -> Self {
        LayerGrads {
            w_input: vec![0.0; params.w_input.len()],
            w_hidden: vec![0.0; params.w_hidden.len()],
            bias: vec![0.0; params.bias.len()],
        }
    }
}

/// Per-step activations kept for backward. For inactive batch rows the gate
/// block stays zero and h/c carry the previous step's values.
#[derive(Debug, Clone)]
pub(crate) struct LayerStepCache {
    /// B x 4H, post-activation gates in `GATE_ORDER`.
    pub gates: Vec<f64>,
    /// B x H cell state after the step.
    pub c: Vec<f64>,
    /// B x H hidden state after the step.
    pub h: Vec<f64>,
}

/// Runs one layer over T aligned steps for a batch of B rows.
///
/// `inputs[t]` is a B x input_dim matrix. `active`, when given, marks which
/// batch rows actually step at time t; inactive rows carry their state, which
/// keeps each row's final state identical to an unbatched run.
pub(crate) fn layer_forward(
    params: &LstmLayerParams,
    batch: usize,
    inputs: &[&[f64]],
    active: Option<&[Vec<bool>]>,
    h0: &[f64],
    c0: &[f64],
) -> Vec<LayerStepCache> {
    let hid = params.hidden;
    let in_dim = params.input_dim;
    let mut caches: Vec<LayerStepCache> = Vec::with_capacity(inputs.len());
    for (t, x_t) in inputs.iter().enumerate() {
        debug_assert_eq!(x_t.len(), batch * in_dim);
        let mut cache = LayerStepCache {
            gates: vec![0.0; batch * 4 * hid],
            c: vec![0.0; batch * hid],
            h: vec![0.0; batch * hid],
        };
        for b in 0..batch {
            let (h_prev, c_prev) = if t == 0 {
                (&h0[b * hid..(b + 1) * hid], &c0[b * hid..(b + 1) * hid])
            } else {
                let prev = &caches[t - 1];
                (
                    &prev.h[b * hid..(b + 1) * hid],
                    &prev.c[b * hid..(b + 1) * hid],
                )
            };
            let is_active = active.map_or(true, |m| m[t][b]);
            if !is_active {
                cache.h[b * hid..(b + 1) * hid].copy_from_slice(h_prev);
                cache.c[b * hid..(b + 1) * hid].copy_from_slice(c_prev);
                continue;
            }
            let x = &x_t[b * in_dim..(b + 1) * in_dim];
            let z = &mut cache.gates[b * 4 * hid..(b + 1) * 4 * hid];
            z.copy_from_slice(&params.bias);
            matvec_add(&params.w_input, 4 * hid, in_dim, x, z);
            matvec_add(&params.w_hidden, 4 * hid, hid, h_prev, z);
            for k in 0..hid {
                z[k] = sigmoid(z[k]);
                z[hid + k] = sigmoid(z[hid + k]);
                z[2 * hid + k] = z[2 * hid + k].tanh();
                z[3 * hid + k] = sigmoid(z[3 * hid + k]);
                let c_new = z[hid + k] * c_prev[k] + z[k] * z[2 * hid + k];
                cache.c[b * hid + k] = c_new;
                cache.h[b * hid + k] = z[3 * hid + k] * c_new.tanh();
            }
        }
        caches.push(cache);
    }
    caches
}

/// Backpropagates through one layer. `d_h_steps[t]` carries the per-step
/// upstream gradient (from the layer above or the output projection);
/// `d_h_final`/`d_c_final` inject gradient on the final state (the decoder
/// initialization path). Returns per-step input gradients plus the gradients
/// flowing into the initial state.
#[allow(clippy::too_many_arguments)]
pub(crate) fn layer_backward(
    params: &LstmLayerParams,
    batch: usize,
    inputs: &[&[f64]],
    active: Option<&[Vec<bool>]>,
    h0: &[f64],
    c0: &[f64],
    caches: &[LayerStepCache],
    d_h_steps: &[Vec<f64>],
    d_h_final: Option<&[f64]>,
    d_c_final: Option<&[f64]>,
    grads: &mut LayerGrads,
) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let hid = params.hidden;
    let in_dim = params.input_dim;
    let steps = inputs.len();

    let mut dh_run = d_h_final.map_or_else(|| vec![0.0; batch * hid], <[f64]>::to_vec);
    let mut dc_run = d_c_final.map_or_else(|| vec![0.0; batch * hid], <[f64]>::to_vec);
    let mut d_inputs = vec![vec![0.0; batch * in_dim]; steps];
    let mut dz = vec![0.0; 4 * hid];

    for t in (0..steps).rev() {
        let cache = &caches[t];
        for b in 0..batch {
            let dh_total: Vec<f64> = (0..hid)
                .map(|k| dh_run[b * hid + k] + d_h_steps[t][b * hid + k])
                .collect();
            let is_active = active.map_or(true, |m| m[t][b]);
            if !is_active {
                dh_run[b * hid..(b + 1) * hid].copy_from_slice(&dh_total);
                continue;
            }
            let (h_prev, c_prev) = if t == 0 {
                (&h0[b * hid..(b + 1) * hid], &c0[b * hid..(b + 1) * hid])
            } else {
                let prev = &caches[t - 1];
                (
                    &prev.h[b * hid..(b + 1) * hid],
                    &prev.c[b * hid..(b + 1) * hid],
                )
            };
            let gates = &cache.gates[b * 4 * hid..(b + 1) * 4 * hid];
            for k in 0..hid {
                let i = gates[k];
                let f = gates[hid + k];
                let g = gates[2 * hid + k];
                let o = gates[3 * hid + k];
                let tanh_c = cache.c[b * hid + k].tanh();
                let dh = dh_total[k];
                let d_o = dh * tanh_c;
                let dc_total = dc_run[b * hid + k] + dh * o * (1.0 - tanh_c * tanh_c);
                let d_i = dc_total * g;
                let d_f = dc_total * c_prev[k];
                let d_g = dc_total * i;
                dz[k] = d_i * i * (1.0 - i);
                dz[hid + k] = d_f * f * (1.0 - f);
                dz[2 * hid + k] = d_g * (1.0 - g * g);
                dz[3 * hid + k] = d_o * o * (1.0 - o);
                dc_run[b * hid + k] = dc_total * f;
            }
            let x = &inputs[t][b * in_dim..(b + 1) * in_dim];
            outer_add(&mut grads.w_input, &dz, x);
            outer_add(&mut grads.w_hidden, &dz, h_prev);
            for (gb, d) in grads.bias.iter_mut().zip(&dz) {
                *gb += d;
            }
            matvec_t_add(
                &params.w_input,
                4 * hid,
                in_dim,
                &dz,
                &mut d_inputs[t][b * in_dim..(b + 1) * in_dim],
            );
            let dh_prev = &mut dh_run[b * hid..(b + 1) * hid];
            dh_prev.fill(0.0);
            matvec_t_add(&params.w_hidden, 4 * hid, hid, &dz, dh_prev);
        }
    }
    (d_inputs, dh_run, dc_run)
}
