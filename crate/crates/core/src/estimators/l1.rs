use crate::error::{Error, Result};
use crate::scalar::{all_finite, Real};

/// L1-style estimator: a velocity state predictor, piecewise-constant
/// adaptation of the lumped disturbance, and a first-order low-pass on the
/// adapted signal.
///
/// Predictor `v_hat' = f + g u + sigma - a (v_hat - v)`; at each sample
/// `sigma = -a e^{-aT} / (1 - e^{-aT}) (v_hat - v)`. The estimate is `sigma`
/// passed through `w / (s + w)`. For a constant disturbance `d` the adapted
/// signal settles at `e^{-aT} d`.
#[derive(Clone, Debug, PartialEq)]
pub struct L1Adaptive<T> {
    pub cutoff: T,
    pub predictor_gain: T,
    v_hat: Option<Vec<T>>,
    err: Vec<T>,
    sigma: Vec<T>,
    filtered: Vec<T>,
}

impl<T: Real> L1Adaptive<T> {
    pub fn new(dim: usize, cutoff: T, predictor_gain: T) -> Result<Self> {
        if !(cutoff > T::zero()) || !(predictor_gain > T::zero()) {
            return Err(Error::BadParams(
                "L1 cutoff and predictor gain must be positive".into(),
            ));
        }
        Ok(Self {
            cutoff,
            predictor_gain,
            v_hat: None,
            err: vec![T::zero(); dim],
            sigma: vec![T::zero(); dim],
            filtered: vec![T::zero(); dim],
        })
    }

    pub fn estimate(&self) -> &[T] {
        &self.filtered
    }

    /// Advances over one interval ending at the measured velocity `v`;
    /// `f_plus_gu` is the drift plus input applied during the interval.
    pub fn step(&mut self, v: &[T], f_plus_gu: &[T], dt: T) -> Result<Vec<T>> {
        let n = self.sigma.len();
        if v.len() != n || f_plus_gu.len() != n {
            return Err(Error::dims("L1 estimator input sizes"));
        }
        if !(dt > T::zero()) {
            return Err(Error::BadParams("dt must be positive".into()));
        }
        let Some(mut v_hat) = self.v_hat.take() else {
            self.v_hat = Some(v.to_vec());
            return Ok(self.filtered.clone());
        };
        let a = self.predictor_gain;
        let decay = (-a * dt).exp();
        let adapt = -a * decay / (T::one() - decay);
        let alpha = T::one() - (-self.cutoff * dt).exp();
        for i in 0..n {
            v_hat[i] += dt * (f_plus_gu[i] + self.sigma[i] - a * self.err[i]);
            self.err[i] = v_hat[i] - v[i];
            self.sigma[i] = adapt * self.err[i];
            let y = self.filtered[i];
            self.filtered[i] = y + alpha * (self.sigma[i] - y);
        }
        if !all_finite(&v_hat) || !all_finite(&self.filtered) {
            return Err(Error::NonFinite("L1 estimator state".into()));
        }
        self.v_hat = Some(v_hat);
        Ok(self.filtered.clone())
    }
}
