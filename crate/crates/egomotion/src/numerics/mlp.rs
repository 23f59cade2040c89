//! Feed-forward network with tanh hidden layers, identity output, and
//! hand-derived reverse-mode gradients.
//!
//! The backward pass is checked against central finite differences in the
//! test suite; keep any change here in lockstep with those oracles.

use super::rng::Rng;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// One dense layer, weight stored row-major as `[out, in]`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    /// Xavier-uniform init: U(-s, s) with s = sqrt(6 / (fan_in + fan_out)).
    pub fn xavier(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut weight = Tensor::zeros(&[fan_out, fan_in]);
        for v in weight.data_mut() {
            *v = rng.uniform_in(-s, s);
        }
        Linear {
            weight,
            bias: Tensor::zeros(&[fan_out]),
        }
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Linear {
            weight: Tensor::zeros(&[fan_out, fan_in]),
            bias: Tensor::zeros(&[fan_out]),
        }
    }

    /// y = W x + b
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (out_dim, in_dim) = (self.weight.rows(), self.weight.cols());
        debug_assert_eq!(x.len(), in_dim);
        debug_assert_eq!(y.len(), out_dim);
        let w = self.weight.data();
        let b = self.bias.data();
        for o in 0..out_dim {
            let row = &w[o * in_dim..(o + 1) * in_dim];
            let mut acc = b[o];
            for (wi, xi) in row.iter().zip(x.iter()) {
                acc += wi * xi;
            }
            y[o] = acc;
        }
    }

    /// Accumulates dW += dy (x)ᵀ, db += dy, and writes dx = Wᵀ dy.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut LinearGrad, dx: &mut [f64]) {
        let (out_dim, in_dim) = (self.weight.rows(), self.weight.cols());
        debug_assert_eq!(x.len(), in_dim);
        debug_assert_eq!(dy.len(), out_dim);
        debug_assert_eq!(dx.len(), in_dim);
        let w = self.weight.data();
        let dw = grad.weight.data_mut();
        let db = grad.bias.data_mut();
        dx.fill(0.0);
        for o in 0..out_dim {
            let g = dy[o];
            db[o] += g;
            let row = &w[o * in_dim..(o + 1) * in_dim];
            let drow = &mut dw[o * in_dim..(o + 1) * in_dim];
            for i in 0..in_dim {
                drow[i] += g * x[i];
                dx[i] += g * row[i];
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearGrad {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl LinearGrad {
    pub fn zeros_like(layer: &Linear) -> Self {
        LinearGrad {
            weight: Tensor::zeros(layer.weight.shape()),
            bias: Tensor::zeros(layer.bias.shape()),
        }
    }
}

/// Multi-layer perceptron: `dims = [in, hidden..., out]`, tanh on hidden
/// layers, identity on the output layer.
#[derive(Debug, Clone)]
pub struct Mlp {
    dims: Vec<usize>,
    layers: Vec<Linear>,
}

/// Intermediate activations kept for the backward pass. `activations[l]` is
/// the input of layer `l`; the final entry is the network output.
#[derive(Debug, Clone)]
pub struct MlpCache {
    activations: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache is never empty")
    }
}

/// Per-layer gradients in the same order as [`Mlp::params`].
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub layers: Vec<LinearGrad>,
}

impl MlpGradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        MlpGradients {
            layers: net.layers.iter().map(LinearGrad::zeros_like).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &MlpGradients, scale: f64) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::dimension(
                "MlpGradients::add_scaled",
                self.layers.len(),
                other.layers.len(),
            ));
        }
        for (a, b) in self.layers.iter_mut().zip(other.layers.iter()) {
            a.weight.add_scaled(&b.weight, scale)?;
            a.bias.add_scaled(&b.bias, scale)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weight.scale(s);
            l.bias.scale(s);
        }
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        self.layers
            .iter()
            .flat_map(|l| [&l.weight, &l.bias])
            .collect()
    }

    pub fn norm_l2(&self) -> f64 {
        self.tensors()
            .iter()
            .map(|t| t.data().iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

impl Mlp {
    pub fn new(dims: &[usize], rng: &mut Rng) -> Result<Self> {
        Self::validate_dims(dims)?;
        let layers = dims
            .windows(2)
            .map(|w| Linear::xavier(w[0], w[1], rng))
            .collect();
        Ok(Mlp {
            dims: dims.to_vec(),
            layers,
        })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::validate_dims(dims)?;
        let layers = dims.windows(2).map(|w| Linear::zeros(w[0], w[1])).collect();
        Ok(Mlp {
            dims: dims.to_vec(),
            layers,
        })
    }

    fn validate_dims(dims: &[usize]) -> Result<()> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::invalid(
                "Mlp::new",
                format!("layer dims must have >= 2 non-zero entries, got {dims:?}"),
            ));
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("dims checked at construction")
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut cache = self.forward_cached(input)?;
        Ok(cache.activations.pop().expect("non-empty by construction"))
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<MlpCache> {
        if input.len() != self.input_dim() {
            return Err(Error::dimension(
                "Mlp::forward input",
                self.input_dim(),
                input.len(),
            ));
        }
        let n_layers = self.layers.len();
        let mut activations = Vec::with_capacity(n_layers + 1);
        activations.push(input.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let x = activations.last().expect("non-empty");
            let mut y = vec![0.0; layer.weight.rows()];
            layer.apply(x, &mut y);
            if l + 1 < n_layers {
                for v in &mut y {
                    *v = v.tanh();
                }
            }
            activations.push(y);
        }
        Ok(MlpCache { activations })
    }

    /// Backpropagates `output_grad` (dL/dy) through the cached forward pass.
    /// Returns parameter gradients and the gradient with respect to the input.
    pub fn backward(&self, cache: &MlpCache, output_grad: &[f64]) -> Result<(MlpGradients, Vec<f64>)> {
        if output_grad.len() != self.output_dim() {
            return Err(Error::dimension(
                "Mlp::backward output_grad",
                self.output_dim(),
                output_grad.len(),
            ));
        }
        let mut grads = MlpGradients::zeros_like(self);
        self.backward_accumulate(cache, output_grad, &mut grads)
            .map(|dx| (grads, dx))
    }

    /// Like [`Mlp::backward`] but accumulates into an existing gradient
    /// buffer; used when many samples contribute to one update.
    pub fn backward_accumulate(
        &self,
        cache: &MlpCache,
        output_grad: &[f64],
        grads: &mut MlpGradients,
    ) -> Result<Vec<f64>> {
        if output_grad.len() != self.output_dim() {
            return Err(Error::dimension(
                "Mlp::backward output_grad",
                self.output_dim(),
                output_grad.len(),
            ));
        }
        if cache.activations.len() != self.layers.len() + 1 {
            return Err(Error::dimension(
                "Mlp::backward cache",
                self.layers.len() + 1,
                cache.activations.len(),
            ));
        }
        let n_layers = self.layers.len();
        let mut dy = output_grad.to_vec();
        for l in (0..n_layers).rev() {
            // Hidden layers produced a = tanh(z); convert dL/da to dL/dz.
            if l + 1 < n_layers {
                let a = &cache.activations[l + 1];
                for (g, ai) in dy.iter_mut().zip(a.iter()) {
                    *g *= 1.0 - ai * ai;
                }
            }
            let x = &cache.activations[l];
            let mut dx = vec![0.0; x.len()];
            self.layers[l].backward(x, &dy, &mut grads.layers[l], &mut dx);
            dy = dx;
        }
        Ok(dy)
    }

    /// Parameters in a fixed order: (weight, bias) per layer.
    pub fn params(&self) -> Vec<&Tensor> {
        self.layers
            .iter()
            .flat_map(|l| [&l.weight, &l.bias])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    /// All parameters as one flat vector (gradient-check support).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for t in self.params() {
            out.extend_from_slice(t.data());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::dimension("Mlp::set_flat_params", self.n_params(), flat.len()));
        }
        let mut offset = 0;
        for t in self.params_mut() {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gradcheck::{central_difference, max_relative_error};

    #[test]
    fn single_affine_layer_matches_hand_value() {
        // 1 -> 1 network, weight 2, bias 1, input 3 => output 7.
        let mut net = Mlp::zeros(&[1, 1]).unwrap();
        net.layers[0].weight.data_mut()[0] = 2.0;
        net.layers[0].bias.data_mut()[0] = 1.0;
        let y = net.forward(&[3.0]).unwrap();
        assert_eq!(y, vec![7.0]);
    }

    #[test]
    fn hidden_layers_use_tanh() {
        let mut net = Mlp::zeros(&[1, 1, 1]).unwrap();
        net.layers[0].weight.data_mut()[0] = 1.0;
        net.layers[1].weight.data_mut()[0] = 1.0;
        let y = net.forward(&[0.5]).unwrap();
        assert!((y[0] - 0.5f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn forward_rejects_bad_input_dim() {
        let net = Mlp::zeros(&[3, 2]).unwrap();
        assert!(net.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(11);
        for (i, dims) in [vec![3, 1], vec![4, 5, 2], vec![2, 8, 8, 3]].iter().enumerate() {
            let mut net = Mlp::new(dims, &mut rng).unwrap();
            let input: Vec<f64> = (0..dims[0]).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let target: Vec<f64> = (0..*dims.last().unwrap())
                .map(|_| rng.uniform_in(-1.0, 1.0))
                .collect();

            // loss = 0.5 * ||y - target||^2 so dL/dy = y - target
            let cache = net.forward_cached(&input).unwrap();
            let dy: Vec<f64> = cache
                .output()
                .iter()
                .zip(target.iter())
                .map(|(y, t)| y - t)
                .collect();
            let (grads, dinput) = net.backward(&cache, &dy).unwrap();

            let mut analytic: Vec<f64> = Vec::new();
            for t in grads.tensors() {
                analytic.extend_from_slice(t.data());
            }
            analytic.extend_from_slice(&dinput);

            let theta0 = net.flat_params();
            let mut full: Vec<f64> = theta0.clone();
            full.extend_from_slice(&input);
            let n_params = theta0.len();
            let numeric = central_difference(
                &mut |v: &[f64]| {
                    net.set_flat_params(&v[..n_params]).unwrap();
                    let y = net.forward(&v[n_params..]).unwrap();
                    let loss: f64 = y
                        .iter()
                        .zip(target.iter())
                        .map(|(a, b)| 0.5 * (a - b) * (a - b))
                        .sum();
                    loss
                },
                &full,
                1e-5,
            );
            net.set_flat_params(&theta0).unwrap();

            let err = max_relative_error(&analytic, &numeric, 1e-8);
            assert!(err < 1e-4, "config {i}: max rel err {err}");
        }
    }
}
