//! LSTM cells and stacked layers with backpropagation through time.
//!
//! Gate pre-activations are laid out as `[input | forget | cell | output]`,
//! each `hidden` columns wide.

use rand::Rng;

use super::dense::sigmoid;
use super::tensor::Tensor2;
use super::{glorot_uniform, Parameterized};
use crate::error::{FcgError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// inputs × 4·hidden
    pub w_x: Tensor2,
    /// hidden × 4·hidden
    pub w_h: Tensor2,
    /// 1 × 4·hidden
    pub bias: Tensor2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Tensor2,
    pub c: Tensor2,
}

impl LstmState {
    pub fn zeros(batch: usize, hidden: usize) -> Self {
        LstmState {
            h: Tensor2::zeros(batch, hidden),
            c: Tensor2::zeros(batch, hidden),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellCache {
    x: Tensor2,
    h_prev: Tensor2,
    c_prev: Tensor2,
    /// post-activation gates, batch × 4·hidden
    gates: Tensor2,
    tanh_c: Tensor2,
}

#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub w_x: Tensor2,
    pub w_h: Tensor2,
    pub bias: Tensor2,
}

impl LstmGrads {
    pub fn zeros_like(p: &LstmParams) -> Self {
        LstmGrads {
            w_x: Tensor2::zeros(p.w_x.rows, p.w_x.cols),
            w_h: Tensor2::zeros(p.w_h.rows, p.w_h.cols),
            bias: Tensor2::zeros(1, p.bias.cols),
        }
    }

    pub fn into_vec(self) -> Vec<Tensor2> {
        vec![self.w_x, self.w_h, self.bias]
    }
}

impl LstmParams {
    pub fn new(inputs: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut bias = Tensor2::zeros(1, 4 * hidden);
        // forget gate starts open
        for v in &mut bias.data[hidden..2 * hidden] {
            *v = 1.0;
        }
        LstmParams {
            w_x: glorot_uniform(inputs, 4 * hidden, rng),
            w_h: glorot_uniform(hidden, 4 * hidden, rng),
            bias,
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_h.rows
    }

    pub fn inputs(&self) -> usize {
        self.w_x.rows
    }

    fn check(&self) -> Result<()> {
        let h = self.hidden();
        self.w_h.expect_shape((h, 4 * h), "lstm recurrent weights")?;
        self.w_x.expect_shape((self.inputs(), 4 * h), "lstm input weights")?;
        self.bias.expect_shape((1, 4 * h), "lstm bias")
    }

    /// One step of the gated update.
    pub fn cell(&self, x: &Tensor2, state: &LstmState) -> Result<(LstmState, CellCache)> {
        self.check()?;
        let h = self.hidden();
        if x.cols != self.inputs() || state.h.cols != h || state.c.shape() != state.h.shape() {
            return Err(FcgError::shape(format!(
                "lstm cell expects input width {} and hidden width {h}, got {} and {}",
                self.inputs(),
                x.cols,
                state.h.cols
            )));
        }
        if x.rows != state.h.rows {
            return Err(FcgError::shape("lstm input and state batch sizes differ"));
        }
        let mut gates = x.matmul(&self.w_x)?;
        gates.add_assign(&state.h.matmul(&self.w_h)?)?;
        gates.add_row(&self.bias)?;
        let batch = x.rows;
        let mut c = Tensor2::zeros(batch, h);
        let mut tanh_c = Tensor2::zeros(batch, h);
        let mut h_out = Tensor2::zeros(batch, h);
        for b in 0..batch {
            let g = gates.row_mut(b);
            for j in 0..h {
                g[j] = sigmoid(g[j]);
                g[h + j] = sigmoid(g[h + j]);
                g[2 * h + j] = g[2 * h + j].tanh();
                g[3 * h + j] = sigmoid(g[3 * h + j]);
            }
            let g = gates.row(b);
            let cp = state.c.row(b);
            for j in 0..h {
                let cv = g[h + j] * cp[j] + g[j] * g[2 * h + j];
                let tc = cv.tanh();
                c.data[b * h + j] = cv;
                tanh_c.data[b * h + j] = tc;
                h_out.data[b * h + j] = g[3 * h + j] * tc;
            }
        }
        let cache = CellCache {
            x: x.clone(),
            h_prev: state.h.clone(),
            c_prev: state.c.clone(),
            gates,
            tanh_c,
        };
        Ok((LstmState { h: h_out, c }, cache))
    }

    /// Backward through one step; accumulates parameter gradients into `grads`
    /// and returns (dx, dh_prev, dc_prev).
    pub fn cell_backward(
        &self,
        cache: &CellCache,
        dh: &Tensor2,
        dc: &Tensor2,
        grads: &mut LstmGrads,
    ) -> Result<(Tensor2, Tensor2, Tensor2)> {
        let h = self.hidden();
        let batch = cache.x.rows;
        dh.expect_shape((batch, h), "lstm dh")?;
        dc.expect_shape((batch, h), "lstm dc")?;
        let mut dz = Tensor2::zeros(batch, 4 * h);
        let mut dc_prev = Tensor2::zeros(batch, h);
        for b in 0..batch {
            let g = cache.gates.row(b);
            let cp = cache.c_prev.row(b);
            let tc = cache.tanh_c.row(b);
            let dhb = dh.row(b);
            let dcb = dc.row(b);
            let dzb = &mut dz.data[b * 4 * h..(b + 1) * 4 * h];
            for j in 0..h {
                let (i_g, f_g, c_g, o_g) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let d_o = dhb[j] * tc[j];
                let dct = dcb[j] + dhb[j] * o_g * (1.0 - tc[j] * tc[j]);
                let d_i = dct * c_g;
                let d_g = dct * i_g;
                let d_f = dct * cp[j];
                dc_prev.data[b * h + j] = dct * f_g;
                dzb[j] = d_i * i_g * (1.0 - i_g);
                dzb[h + j] = d_f * f_g * (1.0 - f_g);
                dzb[2 * h + j] = d_g * (1.0 - c_g * c_g);
                dzb[3 * h + j] = d_o * o_g * (1.0 - o_g);
            }
        }
        grads.w_x.add_assign(&cache.x.t_matmul(&dz)?)?;
        grads.w_h.add_assign(&cache.h_prev.t_matmul(&dz)?)?;
        grads.bias.add_assign(&dz.sum_rows())?;
        let dx = dz.matmul_t(&self.w_x)?;
        let dh_prev = dz.matmul_t(&self.w_h)?;
        Ok((dx, dh_prev, dc_prev))
    }
}

impl Parameterized for LstmParams {
    fn params(&self) -> Vec<&Tensor2> {
        vec![&self.w_x, &self.w_h, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor2> {
        vec![&mut self.w_x, &mut self.w_h, &mut self.bias]
    }

    fn param_names(&self) -> Vec<String> {
        vec!["w_x".into(), "w_h".into(), "b".into()]
    }
}

/// Free-function form of one LSTM step.
pub fn lstm_cell(
    x: &Tensor2,
    h_prev: &Tensor2,
    c_prev: &Tensor2,
    params: &LstmParams,
) -> Result<(Tensor2, Tensor2)> {
    let (s, _) = params.cell(
        x,
        &LstmState {
            h: h_prev.clone(),
            c: c_prev.clone(),
        },
    )?;
    Ok((s.h, s.c))
}

/// Layers of LSTM cells where each layer feeds the next.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmStack {
    pub layers: Vec<LstmParams>,
}

/// Everything the backward pass needs from a forward run.
#[derive(Debug, Clone)]
pub struct StackTrace {
    /// layer × time
    caches: Vec<Vec<CellCache>>,
    /// top-layer hidden state at every step
    pub outputs: Vec<Tensor2>,
    /// state of every layer after the last step
    pub final_states: Vec<LstmState>,
}

impl LstmStack {
    pub fn new(inputs: usize, hidden: usize, depth: usize, rng: &mut impl Rng) -> Self {
        let layers = (0..depth)
            .map(|l| LstmParams::new(if l == 0 { inputs } else { hidden }, hidden, rng))
            .collect();
        LstmStack { layers }
    }

    pub fn hidden(&self) -> usize {
        self.layers[0].hidden()
    }

    pub fn zero_states(&self, batch: usize) -> Vec<LstmState> {
        self.layers
            .iter()
            .map(|l| LstmState::zeros(batch, l.hidden()))
            .collect()
    }

    /// One time step through every layer, updating `states` in place.
    pub fn step(&self, x: &Tensor2, states: &mut [LstmState]) -> Result<Tensor2> {
        let mut input = x.clone();
        for (layer, state) in self.layers.iter().zip(states.iter_mut()) {
            let (next, _) = layer.cell(&input, state)?;
            input = next.h.clone();
            *state = next;
        }
        Ok(input)
    }

    pub fn forward(&self, inputs: &[Tensor2], init: &[LstmState]) -> Result<StackTrace> {
        if init.len() != self.layers.len() {
            return Err(FcgError::shape("one initial state per layer required"));
        }
        let mut states: Vec<LstmState> = init.to_vec();
        let mut caches: Vec<Vec<CellCache>> = vec![Vec::with_capacity(inputs.len()); self.layers.len()];
        let mut outputs = Vec::with_capacity(inputs.len());
        for x in inputs {
            let mut input = x.clone();
            for (l, layer) in self.layers.iter().enumerate() {
                let (next, cache) = layer.cell(&input, &states[l])?;
                caches[l].push(cache);
                input = next.h.clone();
                states[l] = next;
            }
            outputs.push(input);
        }
        Ok(StackTrace {
            caches,
            outputs,
            final_states: states,
        })
    }

    /// Backpropagation through time.
    ///
    /// `d_outputs[t]` is the loss gradient w.r.t. the top hidden state at
    /// step t and `d_final` the gradient w.r.t. each layer's final state.
    /// Returns per-layer parameter gradients, gradients w.r.t. the initial
    /// states and w.r.t. each input.
    pub fn backward(
        &self,
        trace: &StackTrace,
        d_outputs: &[Tensor2],
        d_final: &[LstmState],
    ) -> Result<(Vec<LstmGrads>, Vec<LstmState>, Vec<Tensor2>)> {
        let steps = trace.outputs.len();
        if d_outputs.len() != steps || d_final.len() != self.layers.len() {
            return Err(FcgError::shape("lstm backward gradient counts disagree with the trace"));
        }
        let mut grads: Vec<LstmGrads> = self.layers.iter().map(LstmGrads::zeros_like).collect();
        let mut d_init = Vec::with_capacity(self.layers.len());
        let mut upstream: Vec<Tensor2> = d_outputs.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let mut dh_next = d_final[l].h.clone();
            let mut dc_next = d_final[l].c.clone();
            let mut d_inputs = vec![Tensor2::zeros(0, 0); steps];
            for t in (0..steps).rev() {
                let mut dh = upstream[t].clone();
                dh.add_assign(&dh_next)?;
                let (dx, dh_prev, dc_prev) =
                    layer.cell_backward(&trace.caches[l][t], &dh, &dc_next, &mut grads[l])?;
                d_inputs[t] = dx;
                dh_next = dh_prev;
                dc_next = dc_prev;
            }
            d_init.push(LstmState {
                h: dh_next,
                c: dc_next,
            });
            upstream = d_inputs;
        }
        d_init.reverse();
        Ok((grads, d_init, upstream))
    }
}

impl Parameterized for LstmStack {
    fn params(&self) -> Vec<&Tensor2> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor2> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    fn param_names(&self) -> Vec<String> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.param_names().into_iter().map(move |n| format!("l{i}.{n}")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_everything_gives_zero_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = LstmParams::new(3, 4, &mut rng);
        p.bias = Tensor2::zeros(1, 16);
        let (h, c) = lstm_cell(&Tensor2::zeros(2, 3), &Tensor2::zeros(2, 4), &Tensor2::zeros(2, 4), &p).unwrap();
        assert!(h.data.iter().chain(&c.data).all(|&v| v == 0.0));
    }

    #[test]
    fn empty_memory_ignores_forget_gate() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = LstmParams::new(3, 4, &mut rng);
        let x = Tensor2::from_vec(1, 3, vec![0.3, -0.7, 1.1]).unwrap();
        let h0 = Tensor2::from_vec(1, 4, vec![0.1, 0.2, -0.3, 0.05]).unwrap();
        let (_, c) = lstm_cell(&x, &h0, &Tensor2::zeros(1, 4), &p).unwrap();
        let mut z = x.matmul(&p.w_x).unwrap();
        z.add_assign(&h0.matmul(&p.w_h).unwrap()).unwrap();
        z.add_row(&p.bias).unwrap();
        for j in 0..4 {
            let i = sigmoid(z.data[j]);
            let g = z.data[8 + j].tanh();
            assert!((c.data[j] - i * g).abs() < 1e-15);
        }
        // a different forget bias leaves c unchanged
        let mut q = p.clone();
        for v in &mut q.bias.data[4..8] {
            *v -= 3.0;
        }
        let (_, c2) = lstm_cell(&x, &h0, &Tensor2::zeros(1, 4), &q).unwrap();
        assert_eq!(c, c2);
    }

    #[test]
    fn wrong_widths_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = LstmParams::new(3, 4, &mut rng);
        assert!(lstm_cell(&Tensor2::zeros(1, 2), &Tensor2::zeros(1, 4), &Tensor2::zeros(1, 4), &p).is_err());
    }
}
