//! Sequence-to-sequence LSTM over latent crack trajectories.
//!
//! The encoder reads the observed prefix. Its final states seed the decoder,
//! with the top hidden state passed through a fully connected bridge. The
//! decoder starts from the last observed latent and emits one latent per
//! step through a fully connected head; each output is a residual update of
//! the decoder's input.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FcgError, Result};
use crate::nn::{
    reweighted_mse_grad, Activation, AdamConfig, AdamState, Dense, LstmStack, LstmState,
    Parameterized, Tensor2,
};

pub const LSTM_DEPTH: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqTrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lambda: f64,
    pub adam: AdamConfig,
}

impl Default for SeqTrainConfig {
    fn default() -> Self {
        SeqTrainConfig {
            hidden: 100,
            epochs: 100,
            batch_size: 32,
            lambda: 500.0,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeqModel {
    pub encoder: LstmStack,
    pub bridge: Dense,
    pub decoder: LstmStack,
    pub head: Dense,
    pub latent_dim: usize,
}

/// One latent trajectory: time × latent dimension.
pub type Trajectory = Vec<Vec<f64>>;

fn step_tensor(trajs: &[&Trajectory], t: usize) -> Tensor2 {
    let rows: Vec<&[f64]> = trajs.iter().map(|tr| tr[t].as_slice()).collect();
    Tensor2::from_rows(&rows).expect("trajectories share the latent width")
}

impl SeqModel {
    pub fn new(latent_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        SeqModel {
            encoder: LstmStack::new(latent_dim, hidden, LSTM_DEPTH, rng),
            bridge: Dense::new(hidden, hidden, Activation::Tanh, rng),
            decoder: LstmStack::new(latent_dim, hidden, LSTM_DEPTH, rng),
            head: Dense::new(hidden, latent_dim, Activation::Identity, rng),
            latent_dim,
        }
    }

    fn bridge_states(&self, enc_final: &[LstmState]) -> Result<Vec<LstmState>> {
        let mut states = enc_final.to_vec();
        let top = states.last_mut().expect("at least one layer");
        top.h = self.bridge.infer(&top.h)?;
        Ok(states)
    }

    fn check_width(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.latent_dim {
            return Err(FcgError::shape(format!(
                "latent width {} vs model dimension {}",
                z.len(),
                self.latent_dim
            )));
        }
        Ok(())
    }

    /// Free-running forecast after `observed`. `stop` sees each emitted latent
    /// and ends the rollout early by returning true (that latent is kept).
    pub fn rollout(
        &self,
        observed: &[Vec<f64>],
        horizon: usize,
        mut stop: impl FnMut(&[f64]) -> Result<bool>,
    ) -> Result<Vec<Vec<f64>>> {
        if observed.is_empty() {
            return Err(FcgError::domain("rollout needs at least one observed latent"));
        }
        for z in observed {
            self.check_width(z)?;
        }
        let mut states = self.encoder.zero_states(1);
        for z in observed {
            self.encoder.step(&Tensor2::row_vector(z), &mut states)?;
        }
        let mut states = self.bridge_states(&states)?;
        let mut input = observed.last().unwrap().clone();
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let h = self.decoder.step(&Tensor2::row_vector(&input), &mut states)?;
            let delta = self.head.infer(&h)?;
            let next: Vec<f64> = input.iter().zip(&delta.data).map(|(a, b)| a + b).collect();
            let done = stop(&next)?;
            out.push(next.clone());
            if done {
                break;
            }
            input = next;
        }
        Ok(out)
    }

    pub fn predict(&self, observed: &[Vec<f64>], horizon: usize) -> Result<Vec<Vec<f64>>> {
        self.rollout(observed, horizon, |_| Ok(false))
    }

    /// Teacher-forced loss and gradients for equal-length trajectories split
    /// after `prefix` steps. A prefix covering the whole sequence contributes
    /// zero loss.
    pub fn batch_gradients(
        &self,
        trajs: &[&Trajectory],
        rare: &[bool],
        prefix: usize,
        lambda: f64,
    ) -> Result<(f64, Vec<Tensor2>)> {
        let len = trajs.first().map_or(0, |t| t.len());
        if trajs.iter().any(|t| t.len() != len) || rare.len() != trajs.len() {
            return Err(FcgError::shape("batch trajectories must share one length"));
        }
        if prefix == 0 || prefix > len {
            return Err(FcgError::domain(format!("prefix {prefix} outside [1, {len}]")));
        }
        let batch = trajs.len();
        let d = self.latent_dim;
        let steps = len - prefix;
        if steps == 0 {
            let zeros = self.params().iter().map(|p| Tensor2::zeros(p.rows, p.cols)).collect();
            return Ok((0.0, zeros));
        }

        let enc_inputs: Vec<Tensor2> = (0..prefix).map(|t| step_tensor(trajs, t)).collect();
        let enc = self.encoder.forward(&enc_inputs, &self.encoder.zero_states(batch))?;
        let top = LSTM_DEPTH - 1;
        let (bridged, bridge_cache) = self.bridge.forward(&enc.final_states[top].h)?;
        let mut dec_init = enc.final_states.clone();
        dec_init[top].h = bridged;

        let dec_inputs: Vec<Tensor2> = (0..steps).map(|j| step_tensor(trajs, prefix - 1 + j)).collect();
        let dec = self.decoder.forward(&dec_inputs, &dec_init)?;
        let stacked = Tensor2::from_rows(
            &dec.outputs
                .iter()
                .flat_map(|o| (0..o.rows).map(move |r| o.row(r).to_vec()))
                .collect::<Vec<_>>(),
        )?;
        let (delta, head_cache) = self.head.forward(&stacked)?;

        // entry order: step-major, then batch row, then latent dimension
        let mut pred = Vec::with_capacity(steps * batch * d);
        let mut target = Vec::with_capacity(steps * batch * d);
        let mut mask = Vec::with_capacity(steps * batch * d);
        for j in 0..steps {
            for (b, tr) in trajs.iter().enumerate() {
                for k in 0..d {
                    pred.push(dec_inputs[j].row(b)[k] + delta.row(j * batch + b)[k]);
                    target.push(tr[prefix + j][k]);
                    mask.push(rare[b]);
                }
            }
        }
        let (loss, d_pred) = reweighted_mse_grad(&target, &pred, &mask, lambda)?;

        let d_delta = Tensor2::from_vec(steps * batch, d, d_pred)?;
        let (d_stacked, head_grads) = self.head.backward(&head_cache, &d_delta, true)?;
        let d_stacked = d_stacked.expect("input gradient requested");
        let hidden = self.decoder.hidden();
        let d_outputs: Vec<Tensor2> = (0..steps)
            .map(|j| {
                Tensor2::from_vec(
                    batch,
                    hidden,
                    d_stacked.data[j * batch * hidden..(j + 1) * batch * hidden].to_vec(),
                )
            })
            .collect::<Result<_>>()?;
        let zero_final = self.decoder.zero_states(batch);
        let (dec_grads, d_dec_init, _) = self.decoder.backward(&dec, &d_outputs, &zero_final)?;

        let (d_enc_top_h, bridge_grads) = self.bridge.backward(&bridge_cache, &d_dec_init[top].h, true)?;
        let mut d_enc_final = d_dec_init;
        d_enc_final[top].h = d_enc_top_h.expect("input gradient requested");
        let zero_outputs: Vec<Tensor2> = (0..prefix).map(|_| Tensor2::zeros(batch, hidden)).collect();
        let (enc_grads, _, _) = self.encoder.backward(&enc, &zero_outputs, &d_enc_final)?;

        let grads = enc_grads
            .into_iter()
            .flat_map(|g| g.into_vec())
            .chain(bridge_grads.into_vec())
            .chain(dec_grads.into_iter().flat_map(|g| g.into_vec()))
            .chain(head_grads.into_vec())
            .collect();
        Ok((loss, grads))
    }

    /// Mean squared error of free-running forecasts from `prefix` onwards.
    pub fn forecast_mse(&self, traj: &Trajectory, prefix: usize) -> Result<f64> {
        let steps = traj.len().saturating_sub(prefix);
        if steps == 0 {
            return Ok(0.0);
        }
        let pred = self.predict(&traj[..prefix], steps)?;
        let mut sum = 0.0;
        for (p, t) in pred.iter().zip(&traj[prefix..]) {
            sum += p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        Ok(sum / (steps * self.latent_dim) as f64)
    }
}

impl Parameterized for SeqModel {
    fn params(&self) -> Vec<&Tensor2> {
        let mut out = self.encoder.params();
        out.extend(self.bridge.params());
        out.extend(self.decoder.params());
        out.extend(self.head.params());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut out = self.encoder.params_mut();
        out.extend(self.bridge.params_mut());
        out.extend(self.decoder.params_mut());
        out.extend(self.head.params_mut());
        out
    }

    fn param_names(&self) -> Vec<String> {
        let tag = |prefix: &'static str, names: Vec<String>| {
            names.into_iter().map(move |n| format!("seq.{prefix}.{n}"))
        };
        tag("enc", self.encoder.param_names())
            .chain(tag("bridge", self.bridge.param_names()))
            .chain(tag("dec", self.decoder.param_names()))
            .chain(tag("head", self.head.param_names()))
            .collect()
    }
}

/// Train on latent trajectories with per-trajectory rare flags.
///
/// Every batch draws its own split point so all observation times are seen.
pub fn train_seq(
    trajectories: &[Trajectory],
    rare: &[bool],
    cfg: &SeqTrainConfig,
    seed: u64,
) -> Result<(SeqModel, Vec<f64>)> {
    if trajectories.is_empty() || rare.len() != trajectories.len() {
        return Err(FcgError::domain("need one rare flag per training trajectory"));
    }
    if cfg.batch_size == 0 {
        return Err(FcgError::config("training.batch_size", "must be >= 1"));
    }
    let d = trajectories[0].first().map_or(0, |z| z.len());
    if trajectories.iter().any(|t| t.len() < 3 || t.iter().any(|z| z.len() != d)) {
        return Err(FcgError::domain(
            "trajectories need >= 3 steps and a common latent width",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = SeqModel::new(d, cfg.hidden, &mut rng);
    let names = model.param_names();
    let mut adam = AdamState::new(cfg.adam)?;

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, t) in trajectories.iter().enumerate() {
        groups.entry(t.len()).or_default().push(i);
    }
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut batches: Vec<Vec<usize>> = Vec::new();
        for members in groups.values() {
            let mut m = members.clone();
            m.shuffle(&mut rng);
            batches.extend(m.chunks(cfg.batch_size).map(|c| c.to_vec()));
        }
        batches.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in &batches {
            let len = trajectories[batch[0]].len();
            let prefix = rng.random_range(1..len);
            let trajs: Vec<&Trajectory> = batch.iter().map(|&i| &trajectories[i]).collect();
            let flags: Vec<bool> = batch.iter().map(|&i| rare[i]).collect();
            let (loss, grads) = model.batch_gradients(&trajs, &flags, prefix, cfg.lambda)?;
            if !loss.is_finite() {
                return Err(FcgError::Diverged { stage: "sequence", epoch });
            }
            adam.step(&mut model.params_mut(), &grads, &names)
                .map_err(|e| match e {
                    FcgError::PoisonedUpdate { .. } => FcgError::Diverged { stage: "sequence", epoch },
                    other => other,
                })?;
            total += loss;
        }
        trace.push(total / batches.len() as f64);
    }
    Ok((model, trace))
}
