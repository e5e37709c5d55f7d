//! Bottleneck MLP: architecture spec, seeded initialization, forward pass
//! with activation cache, exact backpropagation, encoder/decoder split, and
//! JSON weight persistence.

use crate::error::{Error, Result};
use crate::rng;
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Linear => x,
        }
    }

    /// Derivative given the pre-activation z and the activation a = f(z).
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

/// Architecture description. `layer_sizes` runs input, hidden layers,
/// output; `activations` has one tag per weight layer; `bottleneck_index`
/// points into `layer_sizes` at the latent layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    pub bottleneck_index: usize,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, activations: Vec<Activation>, bottleneck_index: usize) -> Result<Self> {
        let spec = MlpSpec { layer_sizes, activations, bottleneck_index };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.layer_sizes.len();
        if n < 2 {
            return Err(Error::invalid("need at least an input and an output layer"));
        }
        if self.layer_sizes.iter().any(|&w| w == 0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        if self.activations.len() != n - 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} layers need {} activations, got {}",
                n,
                n - 1,
                self.activations.len()
            )));
        }
        if self.bottleneck_index == 0 || self.bottleneck_index >= n {
            return Err(Error::invalid(format!(
                "bottleneck_index {} must point at a non-input layer (1..{})",
                self.bottleneck_index, n
            )));
        }
        let k = self.layer_sizes[self.bottleneck_index];
        for i in 1..(n - 1) {
            if self.layer_sizes[i] < k {
                return Err(Error::invalid(format!(
                    "bottleneck width {k} exceeds interior layer {i} width {}",
                    self.layer_sizes[i]
                )));
            }
        }
        Ok(())
    }

    /// Orbit-shape architecture: 4 inputs, two 14-wide tanh layers, a linear
    /// k-wide bottleneck, two 110-wide tanh layers, 100 linear outputs.
    pub fn kepler(k: usize) -> Result<Self> {
        MlpSpec::new(
            vec![4, 14, 14, k, 110, 110, 100],
            vec![
                Activation::Tanh,
                Activation::Tanh,
                Activation::Linear,
                Activation::Tanh,
                Activation::Tanh,
                Activation::Linear,
            ],
            3,
        )
    }

    /// Brain-network architecture: 11 inputs, two 21-wide relu layers, a
    /// linear k-wide bottleneck, one relu layer 10 wider than the output,
    /// then the linear output layer.
    pub fn lb(k: usize, output_dim: usize) -> Result<Self> {
        MlpSpec::new(
            vec![11, 21, 21, k, output_dim + 10, output_dim],
            vec![
                Activation::Relu,
                Activation::Relu,
                Activation::Linear,
                Activation::Relu,
                Activation::Linear,
            ],
            3,
        )
    }

    /// Same architecture with the bottleneck width replaced by `k`.
    pub fn with_bottleneck(&self, k: usize) -> Result<Self> {
        let mut spec = self.clone();
        spec.layer_sizes[spec.bottleneck_index] = k;
        spec.validate()?;
        Ok(spec)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn latent_dim(&self) -> usize {
        self.layer_sizes[self.bottleneck_index]
    }

    pub fn layer_count(&self) -> usize {
        self.layer_sizes.len() - 1
    }
}

/// Dense network with per-layer weight matrices (input width x output width)
/// and bias vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Activations cached by a forward pass over weight layers `lo..hi`.
/// `a[0]` is the layer input; `a[i+1] = act(z[i])`.
pub struct ForwardCache {
    lo: usize,
    a: Vec<Array2<f64>>,
    z: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.a.last().unwrap()
    }
}

/// Gradients of a scalar loss with respect to the weight layers covered by
/// the backward pass and the layer input.
pub struct Gradients {
    pub dw: Vec<Array2<f64>>,
    pub db: Vec<Array1<f64>>,
    pub dx: Array2<f64>,
}

impl Mlp {
    /// Glorot-uniform initialization from a seed; biases start at zero.
    pub fn init(spec: MlpSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut r = rng::seeded(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..spec.layer_count() {
            let (n_in, n_out) = (spec.layer_sizes[l], spec.layer_sizes[l + 1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            let data: Vec<f64> = (0..n_in * n_out)
                .map(|_| rng::uniform_in(&mut r, -limit, limit))
                .collect();
            weights.push(Array2::from_shape_vec((n_in, n_out), data).unwrap());
            biases.push(Array1::zeros(n_out));
        }
        Ok(Mlp { spec, weights, biases })
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Weights (row-major) then biases, per layer, in layer order.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..self.weights.len() {
            out.extend(self.weights[l].iter());
            out.extend(self.biases[l].iter());
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut pos = 0;
        for l in 0..self.weights.len() {
            for w in self.weights[l].iter_mut() {
                *w = flat[pos];
                pos += 1;
            }
            for b in self.biases[l].iter_mut() {
                *b = flat[pos];
                pos += 1;
            }
        }
        Ok(())
    }

    fn check_width(&self, x: &Array2<f64>, layer: usize) -> Result<()> {
        if x.ncols() != self.spec.layer_sizes[layer] {
            return Err(Error::ShapeMismatch(format!(
                "input width {} does not match layer width {}",
                x.ncols(),
                self.spec.layer_sizes[layer]
            )));
        }
        Ok(())
    }

    /// Forward over weight layers `lo..hi`, caching all activations.
    pub fn forward_cached_range(&self, x: &Array2<f64>, lo: usize, hi: usize) -> Result<ForwardCache> {
        if hi > self.spec.layer_count() || lo > hi {
            return Err(Error::invalid(format!("bad layer range {lo}..{hi}")));
        }
        self.check_width(x, lo)?;
        let mut a = vec![x.to_owned()];
        let mut z = Vec::new();
        for l in lo..hi {
            let pre = a.last().unwrap().dot(&self.weights[l]) + &self.biases[l];
            let act = self.spec.activations[l];
            let post = pre.mapv(|v| act.apply(v));
            z.push(pre);
            a.push(post);
        }
        Ok(ForwardCache { lo, a, z })
    }

    pub fn forward_cached(&self, x: &Array2<f64>) -> Result<ForwardCache> {
        self.forward_cached_range(x, 0, self.spec.layer_count())
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let mut cache = self.forward_cached(x)?;
        Ok(cache.a.pop().expect("cache holds at least the input"))
    }

    /// Reverse-mode gradients from an output cotangent dL/dy over the layer
    /// range covered by `cache`. The caller owns the loss definition; the
    /// trainer passes 2 (y - target) / (batch * width) for the MSE and the
    /// latent fitter passes 2 (y - target) for the residual sum of squares.
    pub fn backward(&self, cache: &ForwardCache, cotangent: &Array2<f64>) -> Result<Gradients> {
        let n_layers = cache.z.len();
        if cotangent.dim() != cache.a[n_layers].dim() {
            return Err(Error::ShapeMismatch(format!(
                "cotangent shape {:?} does not match output shape {:?}",
                cotangent.dim(),
                cache.a[n_layers].dim()
            )));
        }
        let mut dw = vec![Array2::zeros((0, 0)); n_layers];
        let mut db = vec![Array1::zeros(0); n_layers];
        let mut delta = cotangent.to_owned();
        if n_layers == 0 {
            return Ok(Gradients { dw, db, dx: delta });
        }
        for i in (0..n_layers).rev() {
            let l = cache.lo + i;
            let act = self.spec.activations[l];
            // delta currently holds dL/da[i+1]; fold in the activation.
            ndarray::Zip::from(&mut delta)
                .and(&cache.z[i])
                .and(&cache.a[i + 1])
                .for_each(|d, &z, &a| *d *= act.derivative(z, a));
            dw[i] = cache.a[i].t().dot(&delta);
            db[i] = delta.sum_axis(Axis(0));
            delta = delta.dot(&self.weights[l].t());
        }
        Ok(Gradients { dw, db, dx: delta })
    }

    /// Gradient entries flattened in the `params_flat` order.
    pub fn grads_flat(&self, grads: &Gradients) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..grads.dw.len() {
            out.extend(grads.dw[l].iter());
            out.extend(grads.db[l].iter());
        }
        out
    }

    /// Layers up to and including the bottleneck.
    pub fn encode(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let mut cache = self.forward_cached_range(x, 0, self.spec.bottleneck_index)?;
        Ok(cache.a.pop().expect("cache holds at least the input"))
    }

    /// Layers after the bottleneck.
    pub fn decode(&self, latent: &Array2<f64>) -> Result<Array2<f64>> {
        let mut cache = self.decode_cached(latent)?;
        Ok(cache.a.pop().expect("cache holds at least the input"))
    }

    /// Forward cache over the decoder only; `backward` on it yields the
    /// gradient with respect to the latent input.
    pub fn decode_cached(&self, latent: &Array2<f64>) -> Result<ForwardCache> {
        self.forward_cached_range(latent, self.spec.bottleneck_index, self.spec.layer_count())
    }

    pub fn encoder_param_count(&self) -> usize {
        (0..self.spec.bottleneck_index)
            .map(|l| self.weights[l].len() + self.biases[l].len())
            .sum()
    }

    pub fn decoder_param_count(&self) -> usize {
        (self.spec.bottleneck_index..self.spec.layer_count())
            .map(|l| self.weights[l].len() + self.biases[l].len())
            .sum()
    }

    pub fn save_weights(&self, path: &Path) -> Result<()> {
        let file = WeightsFile {
            spec: self.spec.clone(),
            weights: self.weights.iter().map(|w| w.iter().cloned().collect()).collect(),
            biases: self.biases.iter().map(|b| b.to_vec()).collect(),
        };
        let json = serde_json::to_string(&file).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load_weights(path: &Path) -> Result<Mlp> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: WeightsFile = serde_json::from_str(&json).map_err(|e| Error::json(path, e))?;
        file.spec.validate()?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..file.spec.layer_count() {
            let (n_in, n_out) = (file.spec.layer_sizes[l], file.spec.layer_sizes[l + 1]);
            let w = file
                .weights
                .get(l)
                .ok_or_else(|| Error::Artifact(format!("missing weight layer {l}")))?;
            let b = file
                .biases
                .get(l)
                .ok_or_else(|| Error::Artifact(format!("missing bias layer {l}")))?;
            if w.len() != n_in * n_out || b.len() != n_out {
                return Err(Error::ShapeMismatch(format!(
                    "layer {l} expects {}x{} weights and {} biases, got {} and {}",
                    n_in,
                    n_out,
                    n_out,
                    w.len(),
                    b.len()
                )));
            }
            weights.push(Array2::from_shape_vec((n_in, n_out), w.clone()).unwrap());
            biases.push(Array1::from_vec(b.clone()));
        }
        Ok(Mlp { spec: file.spec, weights, biases })
    }
}

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    spec: MlpSpec,
    /// Row-major per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Mean squared error over every batch x output element.
pub fn mse(pred: &Array2<f64>, target: &Array2<f64>) -> f64 {
    let n = pred.len();
    let mut acc = 0.0;
    for (p, t) in pred.iter().zip(target.iter()) {
        let d = p - t;
        acc += d * d;
    }
    acc / n as f64
}

/// dMSE/dpred, matching `mse`.
pub fn mse_cotangent(pred: &Array2<f64>, target: &Array2<f64>) -> Array2<f64> {
    let scale = 2.0 / pred.len() as f64;
    let mut out = pred - target;
    out.mapv_inplace(|v| v * scale);
    out
}
