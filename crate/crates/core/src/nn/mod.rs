//! Small neural building blocks with hand-written backward passes.

pub mod adam;
pub mod dense;
pub mod loss;
pub mod lstm;
pub mod tensor;

use rand::Rng;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use dense::{dense_layer, Activation, Dense, DenseCache, DenseGrads};
pub use loss::{
    kl_divergence, mse, reweighted_mse, reweighted_mse_grad, vae_loss, vae_loss_with,
    GaussianLatent, ReconstructionNorm,
};
pub use lstm::{lstm_cell, CellCache, LstmGrads, LstmParams, LstmStack, LstmState, StackTrace};
pub use tensor::Tensor2;

/// Anything owning named parameter tensors in a fixed order.
pub trait Parameterized {
    fn params(&self) -> Vec<&Tensor2>;
    fn params_mut(&mut self) -> Vec<&mut Tensor2>;
    fn param_names(&self) -> Vec<String>;
}

/// Uniform init with limit √(6 / (fan_in + fan_out)).
pub fn glorot_uniform(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Tensor2 {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.random_range(-limit..limit))
        .collect();
    Tensor2 {
        rows: fan_in,
        cols: fan_out,
        data,
    }
}
