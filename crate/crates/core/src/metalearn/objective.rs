//! Outer (query) loss of the bi-level problem and its exact gradient
//! through the closed-form ridge inner solution.
//!
//! With support features `phi_s`, targets `d_s`, the inner solution is
//! `W = A^-1 C`, `A = sum phi_s phi_s^T + lambda2 I`, `C = sum phi_s d_s^T`.
//! The outer loss over `H` query samples is
//!
//! ```text
//! J = (1/H) sum_q [ 1/2 |W^T phi_q - d_q|^2 + lambda1 |phi_q|_1 ]
//! ```
//!
//! and its gradient reaches `phi_s` through `W`:
//! `dJ/dW = G = (1/H) sum phi_q r_q^T`, `Y = A^-1 G`,
//! `dJ/dphi_s = -(Y W^T + W Y^T) phi_s + Y d_s`.

use crate::error::Result;
use crate::linalg::{dot, Mat};
use crate::representation::{ForwardTrace, NetworkGrad, RepresentationParams};
use crate::scalar::Real;

use super::dataset::{SegmentPairs, TrajectorySegment};
use super::ridge::SharedRidge;
use super::MetaConfig;

/// Query loss split into its parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossParts<T> {
    /// Mean of `1/2 |prediction - target|^2` over the query.
    pub prediction: T,
    /// Mean L1 norm of the query features.
    pub sparsity: T,
}

impl<T: Real> LossParts<T> {
    pub fn total(&self, lambda1: T) -> T {
        self.prediction + lambda1 * self.sparsity
    }
}

fn traces<T: Real>(
    params: &RepresentationParams<T>,
    pairs: &[(crate::representation::EmbeddingWindow<T>, Vec<T>)],
) -> Result<Vec<ForwardTrace<T>>> {
    pairs
        .iter()
        .map(|(z, _)| params.forward(z.values()))
        .collect()
}

fn evaluate<T: Real>(
    params: &RepresentationParams<T>,
    pairs: &SegmentPairs<T>,
    lambda1: T,
    lambda2: T,
    grad: Option<&mut NetworkGrad<T>>,
) -> Result<LossParts<T>> {
    let bound = params.bound;
    let s_tr = traces(params, &pairs.support)?;
    let q_tr = traces(params, &pairs.query)?;
    let s_phi: Vec<Vec<T>> = s_tr.iter().map(|t| t.features(bound).0).collect();
    let q_phi: Vec<Vec<T>> = q_tr.iter().map(|t| t.features(bound).0).collect();
    let s_d: Vec<&[T]> = pairs.support.iter().map(|(_, d)| d.as_slice()).collect();
    let ridge = SharedRidge::fit(&s_phi, &s_d, lambda2)?;
    let w = &ridge.weights;
    let (k, n) = (w.rows(), w.cols());
    let h = T::from_usize_lossy(pairs.query.len());

    let mut parts = LossParts {
        prediction: T::zero(),
        sparsity: T::zero(),
    };
    let mut residuals = Vec::with_capacity(q_phi.len());
    for (phi, (_, d)) in q_phi.iter().zip(&pairs.query) {
        let r: Vec<T> = ridge
            .predict(phi)
            .iter()
            .zip(d)
            .map(|(&p, &t)| p - t)
            .collect();
        parts.prediction += T::lit(0.5) * dot(&r, &r);
        parts.sparsity += phi.iter().map(|v| v.abs()).sum::<T>();
        residuals.push(r);
    }
    parts.prediction /= h;
    parts.sparsity /= h;

    let Some(grad) = grad else {
        return Ok(parts);
    };

    // query features
    let mut g_w = Mat::zeros(k, n);
    for ((phi, r), trace) in q_phi.iter().zip(&residuals).zip(&q_tr) {
        let wr = w.mul_vec(r);
        let g_phi: Vec<T> = (0..k)
            .map(|i| (wr[i] + lambda1 * sign(phi[i])) / h)
            .collect();
        params.backward(trace, &g_phi, Some(&mut *grad));
        for i in 0..k {
            for j in 0..n {
                g_w[(i, j)] += phi[i] * r[j] / h;
            }
        }
    }

    // support features through the ridge solution
    let y = ridge.chol.solve_mat(&g_w);
    let mut sym = Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let mut acc = T::zero();
            for c in 0..n {
                acc += y[(i, c)] * w[(j, c)] + w[(i, c)] * y[(j, c)];
            }
            sym[(i, j)] = -acc;
        }
    }
    for ((phi, d), trace) in s_phi.iter().zip(&s_d).zip(&s_tr) {
        let mut g_phi = sym.mul_vec(phi);
        let yd = y.mul_vec(d);
        for i in 0..k {
            g_phi[i] += yd[i];
        }
        params.backward(trace, &g_phi, Some(&mut *grad));
    }
    Ok(parts)
}

fn sign<T: Real>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

pub fn pair_loss<T: Real>(
    params: &RepresentationParams<T>,
    pairs: &SegmentPairs<T>,
    lambda1: T,
    lambda2: T,
) -> Result<LossParts<T>> {
    evaluate(params, pairs, lambda1, lambda2, None)
}

pub fn pair_gradient<T: Real>(
    params: &RepresentationParams<T>,
    pairs: &SegmentPairs<T>,
    lambda1: T,
    lambda2: T,
) -> Result<(T, NetworkGrad<T>)> {
    let mut grad = NetworkGrad::zeros_for(params);
    let parts = evaluate(params, pairs, lambda1, lambda2, Some(&mut grad))?;
    Ok((parts.total(lambda1), grad))
}

/// Query loss of `segment` after fitting `theta` on its support by ridge.
pub fn outer_loss<T: Real>(
    params: &RepresentationParams<T>,
    segment: &TrajectorySegment<T>,
    cfg: &MetaConfig,
) -> Result<T> {
    let l1 = T::lit(cfg.lambda1);
    Ok(pair_loss(params, &segment.pairs()?, l1, T::lit(cfg.lambda2))?.total(l1))
}

/// Loss and its gradient with respect to every network parameter.
pub fn meta_gradient<T: Real>(
    params: &RepresentationParams<T>,
    segment: &TrajectorySegment<T>,
    cfg: &MetaConfig,
) -> Result<(T, NetworkGrad<T>)> {
    pair_gradient(
        params,
        &segment.pairs()?,
        T::lit(cfg.lambda1),
        T::lit(cfg.lambda2),
    )
}
