use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor2;
use super::{glorot_uniform, Parameterized};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `y`.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fully connected layer `activation(x · W + b)` over a batch of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Tensor2,
    pub bias: Tensor2,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Tensor2,
    output: Tensor2,
}

impl DenseCache {
    pub fn output(&self) -> &Tensor2 {
        &self.output
    }
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub weights: Tensor2,
    pub bias: Tensor2,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        Dense {
            weights: glorot_uniform(inputs, outputs, rng),
            bias: Tensor2::zeros(1, outputs),
            activation,
        }
    }

    pub fn from_parts(weights: Tensor2, bias: Tensor2, activation: Activation) -> Result<Self> {
        bias.expect_shape((1, weights.cols), "dense bias")?;
        Ok(Dense {
            weights,
            bias,
            activation,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weights.rows
    }

    pub fn outputs(&self) -> usize {
        self.weights.cols
    }

    pub fn infer(&self, input: &Tensor2) -> Result<Tensor2> {
        let mut z = input.matmul(&self.weights)?;
        z.add_row(&self.bias)?;
        let act = self.activation;
        z.data.iter_mut().for_each(|v| *v = act.apply(*v));
        Ok(z)
    }

    pub fn forward(&self, input: &Tensor2) -> Result<(Tensor2, DenseCache)> {
        let output = self.infer(input)?;
        Ok((
            output.clone(),
            DenseCache {
                input: input.clone(),
                output,
            },
        ))
    }

    /// Gradients for the parameters and, when asked, the input.
    pub fn backward(
        &self,
        cache: &DenseCache,
        grad_output: &Tensor2,
        want_input_grad: bool,
    ) -> Result<(Option<Tensor2>, DenseGrads)> {
        let act = self.activation;
        let delta = grad_output.zip_map(&cache.output, |g, y| g * act.derivative_from_output(y))?;
        let grads = DenseGrads {
            weights: cache.input.t_matmul(&delta)?,
            bias: delta.sum_rows(),
        };
        let input_grad = if want_input_grad {
            Some(delta.matmul_t(&self.weights)?)
        } else {
            None
        };
        Ok((input_grad, grads))
    }
}

impl Parameterized for Dense {
    fn params(&self) -> Vec<&Tensor2> {
        vec![&self.weights, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor2> {
        vec![&mut self.weights, &mut self.bias]
    }

    fn param_names(&self) -> Vec<String> {
        vec!["w".into(), "b".into()]
    }
}

impl DenseGrads {
    pub fn into_vec(self) -> Vec<Tensor2> {
        vec![self.weights, self.bias]
    }
}

/// Convenience form: `activation(input · weights + bias)`.
pub fn dense_layer(
    input: &Tensor2,
    weights: &Tensor2,
    bias: &Tensor2,
    activation: Activation,
) -> Result<Tensor2> {
    Dense::from_parts(weights.clone(), bias.clone(), activation)?.infer(input)
}
