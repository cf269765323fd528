//! Fully connected Q-value approximator with hand-written backpropagation.
//!
//! Parameters live in one flat vector, layer by layer: the weight matrix
//! (row-major, `outputs x inputs`) followed by the bias vector. Gradients use
//! the same layout, which keeps clipping, SGD and finite-difference checks trivial.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
    /// `ln(1 + e^x)`, a smooth rectifier.
    Softplus,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
            Activation::Softplus => {
                if z > 30.0 {
                    z
                } else {
                    z.exp().ln_1p()
                }
            }
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Softplus => 1.0 / (1.0 + (-z).exp()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork")]
pub struct QNetwork {
    dims: Vec<usize>,
    activations: Vec<Activation>,
    params: Vec<f64>,
}

#[derive(Deserialize)]
struct RawNetwork {
    dims: Vec<usize>,
    activations: Vec<Activation>,
    params: Vec<f64>,
}

impl TryFrom<RawNetwork> for QNetwork {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        QNetwork::from_parts(raw.dims, raw.activations, raw.params)
    }
}

fn param_count_for(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

/// Per-layer pre-activations and outputs of one forward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardTrace {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.post.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Reusable buffers for [`QNetwork::backward`].
#[derive(Debug, Clone, Default)]
pub struct BackwardScratch {
    delta: Vec<f64>,
    carry: Vec<f64>,
}

impl QNetwork {
    /// Glorot-uniform weights and zero biases. `hidden` applies to every layer
    /// but the last, which is linear.
    pub fn new(dims: &[usize], hidden: Activation, rng: &mut impl Rng) -> Result<Self> {
        let mut net = Self::zeros(dims, hidden)?;
        for l in 0..net.n_layers() {
            let (fan_in, fan_out) = (net.dims[l], net.dims[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let (w, _) = net.layer_range(l);
            for p in &mut net.params[w] {
                *p = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    pub fn zeros(dims: &[usize], hidden: Activation) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Config(format!("invalid layer dims {dims:?}")));
        }
        let n_layers = dims.len() - 1;
        let activations = (0..n_layers)
            .map(|l| if l + 1 == n_layers { Activation::Linear } else { hidden })
            .collect();
        Ok(Self {
            dims: dims.to_vec(),
            activations,
            params: vec![0.0; param_count_for(dims)],
        })
    }

    pub fn from_parts(dims: Vec<usize>, activations: Vec<Activation>, params: Vec<f64>) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) || activations.len() != dims.len() - 1 {
            return Err(Error::Config(format!(
                "invalid network layout: dims {dims:?}, {} activations",
                activations.len()
            )));
        }
        if params.len() != param_count_for(&dims) {
            return Err(Error::ShapeMismatch {
                left: vec![params.len()],
                right: vec![param_count_for(&dims)],
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("non-finite network parameter".into()));
        }
        Ok(Self {
            dims,
            activations,
            params,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn n_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn input_width(&self) -> usize {
        self.dims[0]
    }

    pub fn output_width(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Index ranges of layer `l`'s weights and biases inside the flat parameter vector.
    pub fn layer_range(&self, l: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let offset = param_count_for(&self.dims[..=l]);
        let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
        let w = offset..offset + n_in * n_out;
        (w.clone(), w.end..w.end + n_out)
    }

    /// Overwrites this network's parameters with `other`'s. Shapes must match.
    pub fn copy_from(&mut self, other: &QNetwork) -> Result<()> {
        if self.dims != other.dims || self.activations != other.activations {
            return Err(Error::ShapeMismatch {
                left: self.dims.clone(),
                right: other.dims.clone(),
            });
        }
        self.params.copy_from_slice(&other.params);
        Ok(())
    }

    /// Forward pass keeping every layer's pre-activation for backpropagation.
    pub fn forward_traced(&self, input: &[f64], trace: &mut ForwardTrace) {
        assert_eq!(input.len(), self.input_width(), "input width");
        let n_layers = self.n_layers();
        trace.pre.resize_with(n_layers, Vec::new);
        trace.post.resize_with(n_layers, Vec::new);
        for l in 0..n_layers {
            let (w_range, b_range) = self.layer_range(l);
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let weights = &self.params[w_range];
            let biases = &self.params[b_range];
            let (before, rest) = trace.post.split_at_mut(l);
            let x: &[f64] = if l == 0 { input } else { &before[l - 1] };
            let pre = &mut trace.pre[l];
            pre.clear();
            pre.extend((0..n_out).map(|j| {
                let row = &weights[j * n_in..(j + 1) * n_in];
                biases[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            }));
            let act = self.activations[l];
            let post = &mut rest[0];
            post.clear();
            post.extend(pre.iter().map(|&z| act.apply(z)));
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut trace = ForwardTrace::default();
        self.forward_traced(input, &mut trace);
        trace.post.pop().unwrap_or_default()
    }

    /// Q-values `(idle, charge)` for a feature vector.
    pub fn q_values(&self, features: &[f64]) -> Result<[f64; 2]> {
        if features.iter().any(|v| !v.is_finite()) || features.len() != self.input_width() {
            return Err(Error::NonFiniteInput(features.to_vec()));
        }
        if self.output_width() != 2 {
            return Err(Error::ShapeMismatch {
                left: vec![self.output_width()],
                right: vec![2],
            });
        }
        let out = self.forward(features);
        Ok([out[0], out[1]])
    }

    /// Adds `d loss / d params` for one sample into `grad`, given the traced
    /// forward pass for `input` and `d loss / d output` in `d_out`.
    pub fn backward(&self, input: &[f64], trace: &ForwardTrace, d_out: &[f64], grad: &mut [f64], scratch: &mut BackwardScratch) {
        let n_layers = self.n_layers();
        let BackwardScratch { delta, carry } = scratch;
        delta.clear();
        delta.extend(
            d_out
                .iter()
                .zip(&trace.pre[n_layers - 1])
                .map(|(d, &z)| d * self.activations[n_layers - 1].derivative(z)),
        );
        for l in (0..n_layers).rev() {
            let (w_range, b_range) = self.layer_range(l);
            let n_in = self.dims[l];
            let x: &[f64] = if l == 0 { input } else { &trace.post[l - 1] };
            let weights = &self.params[w_range.clone()];
            {
                let (gw, gb) = grad[w_range.start..b_range.end].split_at_mut(w_range.len());
                for (j, &dj) in delta.iter().enumerate() {
                    if dj == 0.0 {
                        continue;
                    }
                    gb[j] += dj;
                    for (g, &v) in gw[j * n_in..(j + 1) * n_in].iter_mut().zip(x) {
                        *g += dj * v;
                    }
                }
            }
            if l == 0 {
                break;
            }
            carry.clear();
            carry.resize(n_in, 0.0);
            for (j, &dj) in delta.iter().enumerate() {
                if dj == 0.0 {
                    continue;
                }
                for (s, &w) in carry.iter_mut().zip(&weights[j * n_in..(j + 1) * n_in]) {
                    *s += w * dj;
                }
            }
            let act = self.activations[l - 1];
            delta.clear();
            delta.extend(carry.iter().zip(&trace.pre[l - 1]).map(|(s, &z)| s * act.derivative(z)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_output_biases() {
        let mut net = QNetwork::zeros(&[6, 8, 2], Activation::Softplus).unwrap();
        let (_, b) = net.layer_range(1);
        net.params_mut()[b.clone()].copy_from_slice(&[0.25, -1.5]);
        let q = net.q_values(&[0.3, -1.0, 2.0, 0.0, 0.5, 0.9]).unwrap();
        assert_eq!(q, [0.25, -1.5]);
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let a = QNetwork::new(&[6, 16, 2], Activation::Softplus, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = QNetwork::new(&[6, 16, 2], Activation::Softplus, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let x = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        assert_eq!(a.q_values(&x).unwrap(), b.q_values(&x).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn hand_sized_net_matches_manual_arithmetic() {
        // 2-2-2, identity-like hidden weights with a relu, then a mixing layer.
        let params = vec![
            1.0, 0.0, 0.0, 1.0, // W1
            0.5, -0.5, // b1
            1.0, 2.0, -1.0, 1.0, // W2
            0.1, 0.0, // b2
        ];
        let net = QNetwork::from_parts(vec![2, 2, 2], vec![Activation::Relu, Activation::Linear], params).unwrap();
        // h = relu([2 + 0.5, 0.25 - 0.5]) = [2.5, 0]
        // q = [2.5 + 0 + 0.1, -2.5 + 0 + 0] = [2.6, -2.5]
        let q = net.q_values(&[2.0, 0.25]).unwrap();
        assert!((q[0] - 2.6).abs() < 1e-12 && (q[1] + 2.5).abs() < 1e-12);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((Activation::Softplus.apply(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(Activation::Softplus.apply(100.0), 100.0);
        assert!(Activation::Softplus.apply(-800.0) >= 0.0);
        assert!((Activation::Softplus.derivative(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs_and_shapes() {
        let net = QNetwork::zeros(&[6, 4, 2], Activation::Softplus).unwrap();
        assert!(net.q_values(&[f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(net.q_values(&[0.0; 5]).is_err());
        assert!(QNetwork::zeros(&[6], Activation::Relu).is_err());
        assert!(QNetwork::from_parts(vec![2, 2], vec![Activation::Linear], vec![0.0; 5]).is_err());
        let mut other = QNetwork::zeros(&[6, 5, 2], Activation::Softplus).unwrap();
        assert!(other.copy_from(&net).is_err());
    }

    #[test]
    fn serde_round_trip_is_exact() {
        let net = QNetwork::new(&[6, 7, 2], Activation::Softplus, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let text = serde_json::to_string(&net).unwrap();
        assert_eq!(serde_json::from_str::<QNetwork>(&text).unwrap(), net);
    }
}
