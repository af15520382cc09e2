use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Mat};
use crate::representation::FeatureMatrix;
use crate::scalar::{all_finite, Real};

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if lambda.is_nan() {
        return Err(Error::NumericalFailure("ridge weight is NaN".into()));
    }
    if !(lambda > T::zero()) {
        return Err(Error::BadParams("ridge weight must be positive".into()));
    }
    Ok(())
}

/// `theta = (Phi^T Phi + lambda I)^-1 Phi^T delta` by Cholesky.
pub fn ridge_solve<T: Real>(phi: &Mat<T>, delta: &[T], lambda: T) -> Result<Vec<T>> {
    check_lambda(lambda)?;
    if delta.len() != phi.rows() {
        return Err(Error::dims(format!(
            "{} targets for {} regressor rows",
            delta.len(),
            phi.rows()
        )));
    }
    if !all_finite(phi.as_slice()) || !all_finite(delta) {
        return Err(Error::NumericalFailure("non-finite regression data".into()));
    }
    let mut a = phi.gram();
    a.add_diag(lambda);
    let chol = Cholesky::factor(&a)?;
    let theta = chol.solve(&phi.tr_mul_vec(delta));
    if !all_finite(&theta) {
        return Err(Error::NumericalFailure("ridge solution not finite".into()));
    }
    Ok(theta)
}

/// Vertically stacks the dense block matrices of `blocks`.
pub fn stack_features<T: Real>(blocks: &[FeatureMatrix<T>]) -> Result<Mat<T>> {
    let first = blocks.first().ok_or(Error::Empty)?;
    let cols = first.cols();
    let mut data = Vec::with_capacity(blocks.len() * first.rows() * cols);
    for b in blocks {
        if b.cols() != cols {
            return Err(Error::dims("feature blocks differ in width"));
        }
        data.extend_from_slice(b.to_dense().as_slice());
    }
    Mat::from_row_major(data.len() / cols, cols, data)
}

/// Ridge regression exploiting the block-diagonal feature structure: with
/// stacked rows `phi_i^T` on every output, the normal equations decouple into
/// one shared `k x k` system `A W = C`, `A = sum phi_i phi_i^T + lambda I`,
/// `C = sum phi_i d_i^T`.
#[derive(Clone, Debug)]
pub struct SharedRidge<T> {
    pub chol: Cholesky<T>,
    /// `k x n`; column `j` holds the coefficients of output `j`.
    pub weights: Mat<T>,
}

impl<T: Real> SharedRidge<T> {
    pub fn fit<P: AsRef<[T]>, D: AsRef<[T]>>(phis: &[P], targets: &[D], lambda: T) -> Result<Self> {
        check_lambda(lambda)?;
        let first = phis.first().ok_or(Error::Empty)?;
        if targets.len() != phis.len() {
            return Err(Error::dims("features and targets differ in count"));
        }
        let k = first.as_ref().len();
        let n = targets[0].as_ref().len();
        let mut a = Mat::zeros(k, k);
        let mut c = Mat::zeros(k, n);
        for (p, d) in phis.iter().zip(targets) {
            let (p, d) = (p.as_ref(), d.as_ref());
            if p.len() != k || d.len() != n {
                return Err(Error::dims("ragged regression data"));
            }
            for i in 0..k {
                for j in 0..k {
                    a[(i, j)] += p[i] * p[j];
                }
                for j in 0..n {
                    c[(i, j)] += p[i] * d[j];
                }
            }
        }
        if !all_finite(a.as_slice()) || !all_finite(c.as_slice()) {
            return Err(Error::NumericalFailure("non-finite regression data".into()));
        }
        a.add_diag(lambda);
        let chol = Cholesky::factor(&a)?;
        let weights = chol.solve_mat(&c);
        Ok(Self { chol, weights })
    }

    /// Row-major flattening of `W^T`, i.e. the `theta` of `phi_t(z) theta`.
    pub fn theta(&self) -> Vec<T> {
        self.weights.transpose().as_slice().to_vec()
    }

    pub fn predict(&self, phi: &[T]) -> Vec<T> {
        self.weights.tr_mul_vec(phi)
    }
}
