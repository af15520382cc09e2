use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Mat};
use crate::scalar::{all_finite, Real};

/// Feedback-calibrated disturbance observer
///
/// ```text
/// aux' = -L (aux + d_model + L x + f(x) + g(x) u)
/// d_hat = d_model + L x + aux
/// ```
///
/// `x` is the sub-state whose derivative carries the disturbance (velocity).
/// Writing `q = aux + L x`, `q' = L (d - d_model - q)`, so `d_hat` tracks the
/// model residual through a first-order filter of bandwidth `L` without
/// differentiating `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct FcObserverState<T> {
    gain: Mat<T>,
    pub aux: Vec<T>,
    last_x: Option<Vec<T>>,
}

impl<T: Real> FcObserverState<T> {
    pub fn new(gain: Mat<T>) -> Result<Self> {
        if gain.rows() != gain.cols() || !gain.is_symmetric(T::lit(1e-12)) {
            return Err(Error::BadParams(
                "observer gain must be square and symmetric".into(),
            ));
        }
        Cholesky::factor(&gain)
            .map_err(|_| Error::BadParams("observer gain must be positive definite".into()))?;
        let n = gain.rows();
        Ok(Self {
            gain,
            aux: vec![T::zero(); n],
            last_x: None,
        })
    }

    pub fn diagonal(n: usize, l: T) -> Result<Self> {
        Self::new(Mat::scaled_identity(n, l))
    }

    pub fn gain(&self) -> &Mat<T> {
        &self.gain
    }

    pub fn dim(&self) -> usize {
        self.gain.rows()
    }

    pub fn is_initialized(&self) -> bool {
        self.last_x.is_some()
    }

    /// Sets `aux` so that the current estimate equals `d_hat`.
    pub fn initialize(&mut self, d_hat: &[T], d_model: &[T], x: &[T]) -> Result<()> {
        self.check(d_model, x, d_hat)?;
        let lx = self.gain.mul_vec(x);
        self.aux = (0..self.dim())
            .map(|i| d_hat[i] - d_model[i] - lx[i])
            .collect();
        self.last_x = Some(x.to_vec());
        Ok(())
    }

    pub fn estimate(&self, d_model: &[T], x: &[T]) -> Vec<T> {
        let lx = self.gain.mul_vec(x);
        (0..self.dim())
            .map(|i| d_model[i] + lx[i] + self.aux[i])
            .collect()
    }

    fn check(&self, a: &[T], b: &[T], c: &[T]) -> Result<()> {
        let n = self.dim();
        if a.len() != n || b.len() != n || c.len() != n {
            return Err(Error::dims(format!(
                "observer of dimension {n} got mismatched inputs"
            )));
        }
        Ok(())
    }

    /// Advances `aux` over one interval ending at the sample `x` and returns
    /// the new estimate.
    ///
    /// `f_plus_gu` is the drift plus input applied during the interval. The
    /// model output is held at its new value while `x` is interpolated
    /// linearly from the previous sample. The first call only initializes the
    /// observer so that `d_hat = d_model`.
    pub fn fc_step(&mut self, d_model: &[T], x: &[T], f_plus_gu: &[T], dt: T) -> Result<Vec<T>> {
        self.check(d_model, x, f_plus_gu)?;
        if !(dt > T::zero()) {
            return Err(Error::BadParams("dt must be positive".into()));
        }
        let Some(x0) = self.last_x.take() else {
            self.initialize(d_model, d_model, x)?;
            return Ok(d_model.to_vec());
        };
        let n = self.dim();
        let l = &self.gain;
        let rhs = |s: T, aux: &[T]| -> Vec<T> {
            let w = s / dt;
            let xs: Vec<T> = (0..n).map(|i| x0[i] + w * (x[i] - x0[i])).collect();
            let lx = l.mul_vec(&xs);
            let inner: Vec<T> = (0..n)
                .map(|i| aux[i] + d_model[i] + lx[i] + f_plus_gu[i])
                .collect();
            l.mul_vec(&inner).into_iter().map(|v| -v).collect()
        };
        let aux = crate::plant::rk4(&self.aux, T::zero(), dt, rhs);
        if !all_finite(&aux) {
            return Err(Error::NonFinite("observer state".into()));
        }
        self.aux = aux;
        self.last_x = Some(x.to_vec());
        let d_hat = self.estimate(d_model, x);
        if !all_finite(&d_hat) {
            return Err(Error::NonFinite("observer estimate".into()));
        }
        Ok(d_hat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scalar plant `v' = d(t)` sampled exactly, given as `v(t)`.
    fn run(l: f64, v_of_t: impl Fn(f64) -> f64, dt: f64, steps: usize) -> Vec<f64> {
        let mut obs = FcObserverState::diagonal(1, l).unwrap();
        (0..=steps)
            .map(|k| {
                let t = k as f64 * dt;
                obs.fc_step(&[0.0], &[v_of_t(t)], &[0.0], dt).unwrap()[0]
            })
            .collect()
    }

    #[test]
    fn perfect_model_stays_exact() {
        let mut obs = FcObserverState::diagonal(1, 8.0).unwrap();
        let d = 1.7;
        let dt = 0.01;
        for k in 0..=500 {
            let v = 0.3 + d * k as f64 * dt;
            let est = obs.fc_step(&[d], &[v], &[0.0], dt).unwrap();
            assert!((est[0] - d).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_disturbance_decays_exponentially() {
        let (l, d, dt) = (4.0, 2.0, 0.001);
        let est = run(l, |t| d * t, dt, 1250);
        for (k, e) in est.iter().enumerate().skip(1) {
            let t = k as f64 * dt;
            let expected = d * (-l * t).exp();
            assert!(
                ((d - e) - expected).abs() <= 0.01 * expected + 1e-9,
                "k {k}"
            );
        }
    }

    #[test]
    fn ramp_steady_error_is_rate_over_gain() {
        let (l, c, dt) = (5.0, 3.0, 0.001);
        let est = run(l, |t| 0.5 * c * t * t, dt, 4000);
        let t = 4.0;
        let err = c * t - est[4000];
        assert!((err - c / l).abs() < 0.02 * c / l, "err {err}");
    }

    #[test]
    fn rejects_indefinite_gain() {
        assert!(FcObserverState::diagonal(2, -1.0f64).is_err());
        let asym = Mat::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(FcObserverState::new(asym).is_err());
    }
}
