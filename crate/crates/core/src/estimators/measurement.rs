use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::plant::NoiseConfig;
use crate::scalar::Real;

/// Finite-difference disturbance reconstruction on the velocity rows:
/// `(v - v_prev) / dt - (f + g u)`.
pub fn disturbance_measurement<T: Real>(v_prev: &[T], v: &[T], f_plus_gu: &[T], dt: T) -> Vec<T> {
    v_prev
        .iter()
        .zip(v)
        .zip(f_plus_gu)
        .map(|((&a, &b), &f)| (b - a) / dt - f)
        .collect()
}

/// One step of `y' = (x - y) / tau` with the input held over `dt`.
pub fn low_pass_step<T: Real>(y: &mut [T], input: &[T], tau: T, dt: T) {
    let alpha = T::one() - (-dt / tau).exp();
    for (yi, &xi) in y.iter_mut().zip(input) {
        *yi += alpha * (xi - *yi);
    }
}

/// Measurement channel with its own noise stream and filter state.
#[derive(Clone, Debug)]
pub struct DisturbanceSensor<T> {
    config: NoiseConfig,
    rng: ChaCha8Rng,
    filtered: Option<Vec<T>>,
    dim: usize,
}

impl<T: Real> DisturbanceSensor<T> {
    pub fn new(config: &NoiseConfig, dim: usize, seed: u64) -> Self {
        Self {
            config: config.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            filtered: None,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Noisy, filtered reconstruction. With noise disabled the raw
    /// finite difference is returned unfiltered.
    pub fn measure(&mut self, v_prev: &[T], v: &[T], f_plus_gu: &[T], dt: T) -> Vec<T> {
        let mut raw = disturbance_measurement(v_prev, v, f_plus_gu, dt);
        if !self.config.enabled {
            return raw;
        }
        if self.config.std > 0.0 {
            let normal = Normal::new(0.0, self.config.std).expect("validated std");
            for r in raw.iter_mut() {
                *r += T::lit(normal.sample(&mut self.rng));
            }
        }
        match self.filtered.as_mut() {
            None => {
                self.filtered = Some(raw.clone());
                raw
            }
            Some(y) => {
                low_pass_step(y, &raw, T::lit(self.config.tau), dt);
                y.clone()
            }
        }
    }
}
