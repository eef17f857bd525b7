use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Affine map `x ↦ act(x W + b)` with `W` of shape `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn xavier(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / (in_dim + out_dim).max(1) as f64).sqrt();
        let weight = Matrix::from_fn(in_dim, out_dim, |_, _| rng.random_range(-bound..=bound));
        Self {
            weight,
            bias: vec![0.0; out_dim],
            activation,
        }
    }
}

/// Multi-layer perceptron. With no layers it is the identity map.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

impl MlpParams {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Layer widths `dims[0] → … → dims[last]`; hidden layers use
    /// `hidden_activation`, the output layer is linear.
    pub fn init(dims: &[usize], hidden_activation: Activation, rng: &mut impl Rng) -> Self {
        let n = dims.len().saturating_sub(1);
        let layers = (0..n)
            .map(|l| {
                let act = if l + 1 == n {
                    Activation::Identity
                } else {
                    hidden_activation
                };
                Layer::xavier(dims[l], dims[l + 1], act, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let p = Self { layers };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.bias.len() != layer.out_dim() {
                return Err(Error::dims("mlp bias", (layer.out_dim(), 1), (layer.bias.len(), 1)));
            }
            if let Some(next) = self.layers.get(l + 1) {
                if next.in_dim() != layer.out_dim() {
                    return Err(Error::dims("mlp chain", (layer.out_dim(), 0), (next.in_dim(), 0)));
                }
            }
            if !layer.weight.is_finite() || layer.bias.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("layer {l} has non-finite parameters")));
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn in_dim(&self) -> Option<usize> {
        self.layers.first().map(Layer::in_dim)
    }

    pub fn out_dim(&self) -> Option<usize> {
        self.layers.last().map(Layer::out_dim)
    }

    pub fn num_params(&self) -> usize {
        self.param_sizes().iter().sum()
    }

    /// Sizes of the parameter blocks in `weight, bias` order per layer.
    pub fn param_sizes(&self) -> Vec<usize> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice().len(), l.bias.len()])
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &mut self.layers {
            out.push(l.weight.as_mut_slice());
            out.push(l.bias.as_mut_slice());
        }
        out
    }

    /// All parameters flattened in layer order.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }
}

/// Activations saved by [`mlp_forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    input_shape: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrad>,
    pub input: Matrix,
}

impl MlpGrads {
    pub fn grad_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|g| [g.weight.as_slice(), g.bias.as_slice()])
            .collect()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.grad_slices().concat()
    }
}

pub fn mlp_forward(p: &MlpParams, x: &Matrix) -> Result<(Matrix, MlpCache)> {
    if let Some(d) = p.in_dim() {
        if x.cols() != d {
            return Err(Error::dims("mlp_forward", (x.rows(), d), x.shape()));
        }
    }
    let mut inputs = Vec::with_capacity(p.layers.len());
    let mut pre = Vec::with_capacity(p.layers.len());
    let mut h = x.clone();
    for layer in &p.layers {
        let mut z = h.matmul(&layer.weight)?;
        for i in 0..z.rows() {
            for (v, b) in z.row_mut(i).iter_mut().zip(&layer.bias) {
                *v += b;
            }
        }
        let out = z.map(|v| layer.activation.apply(v));
        inputs.push(std::mem::replace(&mut h, out));
        pre.push(z);
    }
    Ok((
        h,
        MlpCache {
            inputs,
            pre,
            input_shape: x.shape(),
        },
    ))
}

pub fn mlp_backward(p: &MlpParams, cache: &MlpCache, upstream: &Matrix) -> Result<MlpGrads> {
    if cache.inputs.len() != p.layers.len() {
        return Err(Error::InvalidData("cache does not match parameters".into()));
    }
    let out_shape = match p.out_dim() {
        Some(d) => (cache.input_shape.0, d),
        None => cache.input_shape,
    };
    if upstream.shape() != out_shape {
        return Err(Error::dims("mlp_backward", out_shape, upstream.shape()));
    }
    let mut grads = Vec::with_capacity(p.layers.len());
    let mut delta = upstream.clone();
    for (l, layer) in p.layers.iter().enumerate().rev() {
        if layer.activation != Activation::Identity {
            for (d, &z) in delta.as_mut_slice().iter_mut().zip(cache.pre[l].as_slice()) {
                *d *= layer.activation.derivative(z);
            }
        }
        let weight = cache.inputs[l].t_matmul(&delta)?;
        let bias = delta.col_sums();
        let next = delta.matmul_t(&layer.weight)?;
        grads.push(LayerGrad { weight, bias });
        delta = next;
    }
    grads.reverse();
    Ok(MlpGrads {
        layers: grads,
        input: delta,
    })
}
