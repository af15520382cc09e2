//! Bounded fully connected feature network.
//!
//! Hidden layers use `tanh`; the output layer is `bound * tanh(.)`, so every
//! feature satisfies `|phi_j| <= bound` regardless of the weights.
//!
//! The window `[x_k, x_{k-1}, .., x_{k-M}]` is first mapped to backward
//! differences `[x_k, del x_k, .., del^M x_k]` and then standardized with
//! frozen per-dimension statistics. The map is linear and invertible, so it
//! changes conditioning only: each difference order is orders of magnitude
//! smaller than the one before and would otherwise vanish under a shared
//! scale.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::{all_finite, Real};

use super::{EmbeddingWindow, FeatureVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense<T> {
    /// `out x in`
    pub weights: Mat<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Mat::zeros(outputs, inputs),
            bias: vec![T::zero(); outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = self.weights.mul_vec(x);
        for (yi, &b) in y.iter_mut().zip(&self.bias) {
            *yi += b;
        }
        y
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Backward differences `[x_k, del x_k, del^2 x_k, ..]` of a newest-first
/// window of `state_dim` blocks.
pub fn difference_coordinates<T: Real>(z: &[T], state_dim: usize) -> Vec<T> {
    let blocks = z.len() / state_dim;
    let mut out = vec![T::zero(); z.len()];
    for j in 0..blocks {
        for i in 0..=j {
            let c = T::lit(if i % 2 == 0 { 1.0 } else { -1.0 } * binomial(j, i));
            for s in 0..state_dim {
                out[j * state_dim + s] += c * z[i * state_dim + s];
            }
        }
    }
    out
}

/// Adjoint of [`difference_coordinates`].
fn difference_adjoint<T: Real>(g: &[T], state_dim: usize) -> Vec<T> {
    let blocks = g.len() / state_dim;
    let mut out = vec![T::zero(); g.len()];
    for j in 0..blocks {
        for i in 0..=j {
            let c = T::lit(if i % 2 == 0 { 1.0 } else { -1.0 } * binomial(j, i));
            for s in 0..state_dim {
                out[i * state_dim + s] += c * g[j * state_dim + s];
            }
        }
    }
    out
}

/// Per-dimension affine standardization `(z - mean) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Real> Normalization<T> {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![T::zero(); dim],
            scale: vec![T::one(); dim],
        }
    }

    /// Statistics of a sample of windows. Scales are floored at `floor`.
    pub fn fit<'a, I>(dim: usize, samples: I, floor: T) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [T]>,
    {
        let mut count = 0usize;
        let mut mean = vec![T::zero(); dim];
        let mut m2 = vec![T::zero(); dim];
        for z in samples {
            if z.len() != dim {
                return Err(Error::dims(format!("window length {} != {dim}", z.len())));
            }
            count += 1;
            let c = T::from_usize_lossy(count);
            for i in 0..dim {
                let delta = z[i] - mean[i];
                mean[i] += delta / c;
                m2[i] += delta * (z[i] - mean[i]);
            }
        }
        if count == 0 {
            return Err(Error::Empty);
        }
        let c = T::from_usize_lossy(count);
        let scale = m2.iter().map(|&s| (s / c).sqrt().max(floor)).collect();
        Ok(Self { mean, scale })
    }

    fn apply(&self, z: &[T]) -> Vec<T> {
        z.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }
}

/// Weights of the feature map together with the window layout it expects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationParams<T> {
    pub state_dim: usize,
    /// Number of delayed states beyond the current one.
    pub depth: usize,
    pub bound: T,
    pub normalization: Normalization<T>,
    pub layers: Vec<Dense<T>>,
}

/// Activations recorded by a forward pass, consumed by [`RepresentationParams::backward`].
#[derive(Clone, Debug)]
pub struct ForwardTrace<T> {
    /// Input to each layer; `inputs[0]` is the standardized difference window.
    inputs: Vec<Vec<T>>,
    /// Output-layer `tanh` values before scaling by the bound.
    squashed: Vec<T>,
}

impl<T: Real> ForwardTrace<T> {
    pub fn features(&self, bound: T) -> FeatureVector<T> {
        FeatureVector(self.squashed.iter().map(|&s| bound * s).collect())
    }
}

impl<T: Real> RepresentationParams<T> {
    /// Xavier-uniform weights, zero biases, identity normalization.
    pub fn init<R: Rng + ?Sized>(
        state_dim: usize,
        depth: usize,
        hidden: &[usize],
        features: usize,
        bound: T,
        rng: &mut R,
    ) -> Result<Self> {
        if state_dim == 0 || features == 0 {
            return Err(Error::BadParams(
                "state_dim and features must be positive".into(),
            ));
        }
        if !(bound > T::zero()) {
            return Err(Error::BadParams("feature bound must be positive".into()));
        }
        let input = state_dim * (depth + 1);
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(features);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut d = Dense::zeros(fan_in, fan_out);
                for v in d.weights.as_mut_slice() {
                    *v = T::lit(rng.random_range(-limit..limit));
                }
                d
            })
            .collect();
        Ok(Self {
            state_dim,
            depth,
            bound,
            normalization: Normalization::identity(input),
            layers,
        })
    }

    /// Same architecture with every weight and bias set to zero.
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs(), l.outputs()))
                .collect(),
            ..self.clone()
        }
    }

    pub fn input_dim(&self) -> usize {
        self.state_dim * (self.depth + 1)
    }

    pub fn features(&self) -> usize {
        self.layers.last().map_or(0, Dense::outputs)
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::BadParams("network has no layers".into()));
        }
        let mut width = self.input_dim();
        for (i, l) in self.layers.iter().enumerate() {
            if l.inputs() != width || l.bias.len() != l.outputs() {
                return Err(Error::dims(format!("layer {i} shape inconsistent")));
            }
            width = l.outputs();
        }
        if self.normalization.mean.len() != self.input_dim()
            || self.normalization.scale.len() != self.input_dim()
        {
            return Err(Error::dims("normalization length != input dimension"));
        }
        if !(self.bound > T::zero()) || !self.bound.is_finite() {
            return Err(Error::BadParams(
                "feature bound must be positive and finite".into(),
            ));
        }
        if self.normalization.scale.iter().any(|&s| !(s > T::zero())) {
            return Err(Error::BadParams(
                "normalization scales must be positive".into(),
            ));
        }
        let finite = self
            .layers
            .iter()
            .all(|l| all_finite(l.weights.as_slice()) && all_finite(&l.bias));
        if !finite {
            return Err(Error::NonFinite("network weights".into()));
        }
        Ok(())
    }

    pub fn featurize(&self, z: &EmbeddingWindow<T>) -> Result<FeatureVector<T>> {
        Ok(self.forward(z.values())?.features(self.bound))
    }

    pub fn forward(&self, z: &[T]) -> Result<ForwardTrace<T>> {
        if z.len() != self.input_dim() {
            return Err(Error::dims(format!(
                "window length {} does not match network input {}",
                z.len(),
                self.input_dim()
            )));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        inputs.push(
            self.normalization
                .apply(&difference_coordinates(z, self.state_dim)),
        );
        let last = self.layers.len() - 1;
        let mut squashed = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let a = layer.apply(&inputs[i]);
            let h: Vec<T> = a.into_iter().map(T::tanh).collect();
            if i == last {
                squashed = h;
            } else {
                inputs.push(h);
            }
        }
        Ok(ForwardTrace { inputs, squashed })
    }

    /// Backpropagates `d loss / d phi` through a recorded forward pass.
    ///
    /// Parameter gradients are accumulated into `grads` when given. Returns
    /// the gradient with respect to the raw (unstandardized) window.
    pub fn backward(
        &self,
        trace: &ForwardTrace<T>,
        grad_phi: &[T],
        grads: Option<&mut NetworkGrad<T>>,
    ) -> Vec<T> {
        let mut grads = grads;
        let mut delta: Vec<T> = grad_phi
            .iter()
            .zip(&trace.squashed)
            .map(|(&g, &s)| g * self.bound * (T::one() - s * s))
            .collect();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &trace.inputs[i];
            if let Some(g) = grads.as_deref_mut() {
                let gl = &mut g.layers[i];
                for (r, &d) in delta.iter().enumerate() {
                    if d == T::zero() {
                        continue;
                    }
                    let row =
                        &mut gl.weights.as_mut_slice()[r * input.len()..(r + 1) * input.len()];
                    for (w, &x) in row.iter_mut().zip(input) {
                        *w += d * x;
                    }
                    gl.bias[r] += d;
                }
            }
            let back = layer.weights.tr_mul_vec(&delta);
            delta = if i == 0 {
                back
            } else {
                back.iter()
                    .zip(input)
                    .map(|(&g, &h)| g * (T::one() - h * h))
                    .collect()
            };
        }
        let scaled: Vec<T> = delta
            .iter()
            .zip(&self.normalization.scale)
            .map(|(&g, &s)| g / s)
            .collect();
        difference_adjoint(&scaled, self.state_dim)
    }

    /// Weights then bias of each layer, in layer order.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::dims(format!(
                "flat parameter vector has {} entries, network has {}",
                flat.len(),
                self.num_params()
            )));
        }
        let mut at = 0;
        for l in &mut self.layers {
            let w = l.weights.as_mut_slice();
            w.copy_from_slice(&flat[at..at + w.len()]);
            at += w.len();
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> RepresentationParams<U> {
        let v = |xs: &[T]| xs.iter().map(|x| U::lit(x.as_f64())).collect::<Vec<U>>();
        RepresentationParams {
            state_dim: self.state_dim,
            depth: self.depth,
            bound: U::lit(self.bound.as_f64()),
            normalization: Normalization {
                mean: v(&self.normalization.mean),
                scale: v(&self.normalization.scale),
            },
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weights: l.weights.cast(),
                    bias: v(&l.bias),
                })
                .collect(),
        }
    }
}

/// Gradient buffer with the same layout as the network parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkGrad<T> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Real> NetworkGrad<T> {
    pub fn zeros_for(params: &RepresentationParams<T>) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs(), l.outputs()))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, &y) in a
                .weights
                .as_mut_slice()
                .iter_mut()
                .zip(b.weights.as_slice())
            {
                *x += y;
            }
            for (x, &y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for l in &mut self.layers {
            l.weights.as_mut_slice().iter_mut().for_each(|x| *x *= s);
            l.bias.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }
}
