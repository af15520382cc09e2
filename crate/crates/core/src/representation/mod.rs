//! Time-delay embedding of the state history and the learned feature map.
//!
//! A window `z_k = [x_k, x_{k-1}, ..., x_{k-M}]` (newest first, `M + 1`
//! states) is mapped to a bounded feature vector `phi`. The disturbance model
//! is `d_model = phi_t(z) theta`, where `phi_t` places `phi^T` on the diagonal
//! blocks of an `n x nk` matrix and `theta` is the row-major flattening of an
//! `n x k` coefficient matrix.

mod network;
pub mod weights;

pub use network::{
    difference_coordinates, Dense, ForwardTrace, NetworkGrad, Normalization, RepresentationParams,
};

use crate::error::{Error, Result};
use crate::linalg::{dot, Mat};
use crate::scalar::{all_finite, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingWindow<T> {
    values: Vec<T>,
    state_dim: usize,
    depth: usize,
}

impl<T: Real> EmbeddingWindow<T> {
    pub fn new(values: Vec<T>, state_dim: usize, depth: usize) -> Result<Self> {
        if values.len() != state_dim * (depth + 1) {
            return Err(Error::dims(format!(
                "window of {} values cannot hold {} states of dimension {state_dim}",
                values.len(),
                depth + 1
            )));
        }
        if !all_finite(&values) {
            return Err(Error::NonFinite("embedding window".into()));
        }
        Ok(Self {
            values,
            state_dim,
            depth,
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// The `lag`-th state back from the newest one.
    pub fn state(&self, lag: usize) -> &[T] {
        &self.values[lag * self.state_dim..(lag + 1) * self.state_dim]
    }
}

/// Builds `[x_k, x_{k-1}, ..., x_{k-M}]` from a history ordered oldest to newest.
pub fn embed<T: Real, S: AsRef<[T]>>(
    history: &[S],
    depth: usize,
    state_dim: usize,
) -> Result<EmbeddingWindow<T>> {
    if state_dim == 0 {
        return Err(Error::BadParams("state dimension must be positive".into()));
    }
    if history.len() < depth + 1 {
        return Err(Error::InsufficientHistory {
            needed: depth + 1,
            available: history.len(),
        });
    }
    let mut values = Vec::with_capacity(state_dim * (depth + 1));
    for x in history.iter().rev().take(depth + 1) {
        let x = x.as_ref();
        if x.len() != state_dim {
            return Err(Error::dims(format!(
                "state of length {} in history, expected {state_dim}",
                x.len()
            )));
        }
        values.extend_from_slice(x);
    }
    EmbeddingWindow::new(values, state_dim, depth)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector<T>(pub Vec<T>);

impl<T: Real> FeatureVector<T> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// `n x nk` block-diagonal matrix with `phi^T` on each diagonal block.
///
/// Stored compactly as the single shared row `phi`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix<T> {
    phi: Vec<T>,
    blocks: usize,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn rows(&self) -> usize {
        self.blocks
    }

    pub fn cols(&self) -> usize {
        self.blocks * self.phi.len()
    }

    pub fn features(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self) -> &[T] {
        &self.phi
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let k = self.phi.len();
        if j / k == i {
            self.phi[j % k]
        } else {
            T::zero()
        }
    }

    pub fn to_dense(&self) -> Mat<T> {
        let mut m = Mat::zeros(self.rows(), self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                m[(i, j)] = self.get(i, j);
            }
        }
        m
    }

    /// `phi_t * theta`
    pub fn mul_vec(&self, theta: &[T]) -> Result<Vec<T>> {
        if theta.len() != self.cols() {
            return Err(Error::dims(format!(
                "theta has {} entries, feature matrix has {} columns",
                theta.len(),
                self.cols()
            )));
        }
        let k = self.phi.len();
        Ok((0..self.blocks)
            .map(|i| dot(&self.phi, &theta[i * k..(i + 1) * k]))
            .collect())
    }

    /// `phi_t^T * r`
    pub fn tr_mul_vec(&self, r: &[T]) -> Result<Vec<T>> {
        if r.len() != self.rows() {
            return Err(Error::dims(format!(
                "vector has {} entries, feature matrix has {} rows",
                r.len(),
                self.rows()
            )));
        }
        Ok(r.iter()
            .flat_map(|&ri| self.phi.iter().map(move |&p| ri * p))
            .collect())
    }
}

pub fn block_diag<T: Real>(phi: &FeatureVector<T>, n: usize) -> FeatureMatrix<T> {
    debug_assert!(!phi.is_empty(), "feature vector must be nonempty");
    FeatureMatrix {
        phi: phi.0.clone(),
        blocks: n,
    }
}

/// Model disturbance `phi_t * theta`.
pub fn predict<T: Real>(phi_t: &FeatureMatrix<T>, theta: &[T]) -> Result<Vec<T>> {
    phi_t.mul_vec(theta)
}

pub fn featurize<T: Real>(
    params: &RepresentationParams<T>,
    z: &EmbeddingWindow<T>,
) -> Result<FeatureVector<T>> {
    params.featurize(z)
}
