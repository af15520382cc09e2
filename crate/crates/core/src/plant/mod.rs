//! Point-mass translational dynamics `p' = v`, `v' = gravity + u + d`.
//!
//! The state is `x = [p, v]` with `dof` axes each, the input is a commanded
//! acceleration, and disturbances act on the velocity rows only.

mod collect;
mod rollout;

pub use collect::{
    collect_dataset, collect_trajectories, derive_seed, CollectConfig, CollectReport,
};
pub use rollout::{rollout, LogRow, RolloutLog};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{all_finite, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Real + Deserialize<'de>")
)]
pub struct PlantConfig<T> {
    /// Translational degrees of freedom; the state has `2 * dof` entries.
    pub dof: usize,
    pub mass: T,
    pub gravity: Vec<T>,
    pub dt: T,
}

impl<T: Real> PlantConfig<T> {
    /// Three-axis quadrotor: unit mass, `g = 9.81` along `-z`, `dt = 0.01`.
    pub fn quadrotor() -> Self {
        Self {
            dof: 3,
            mass: T::one(),
            gravity: vec![T::zero(), T::zero(), T::lit(-9.81)],
            dt: T::lit(0.01),
        }
    }

    pub fn n(&self) -> usize {
        2 * self.dof
    }

    pub fn m(&self) -> usize {
        self.dof
    }

    pub fn validate(&self) -> Result<()> {
        if self.dof == 0 {
            return Err(Error::BadParams("plant needs at least one axis".into()));
        }
        if !(self.dt > T::zero()) || !(self.mass > T::zero()) {
            return Err(Error::BadParams("dt and mass must be positive".into()));
        }
        if self.gravity.len() != self.dof {
            return Err(Error::dims("gravity length differs from dof"));
        }
        Ok(())
    }

    pub fn position<'a>(&self, x: &'a [T]) -> &'a [T] {
        &x[..self.dof]
    }

    pub fn velocity<'a>(&self, x: &'a [T]) -> &'a [T] {
        &x[self.dof..]
    }

    /// `f(x) + g(x) u` restricted to the velocity rows.
    pub fn drift_plus_input(&self, u: &[T]) -> Vec<T> {
        self.gravity.iter().zip(u).map(|(&g, &ui)| g + ui).collect()
    }

    pub fn dynamics(&self, x: &[T], u: &[T], d: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n() || u.len() != self.m() || d.len() != self.dof {
            return Err(Error::dims(format!(
                "dynamics got x {}, u {}, d {} for dof {}",
                x.len(),
                u.len(),
                d.len(),
                self.dof
            )));
        }
        let mut dx = Vec::with_capacity(self.n());
        dx.extend_from_slice(self.velocity(x));
        for i in 0..self.dof {
            dx.push(self.gravity[i] + u[i] + d[i]);
        }
        Ok(dx)
    }

    /// One RK4 step with `u` held and `d_fn(t, x)` evaluated at the stage
    /// times and states.
    pub fn rk4_step<F>(&self, x: &[T], u: &[T], d_fn: F, t: T, dt: T) -> Result<Vec<T>>
    where
        F: Fn(T, &[T]) -> Vec<T>,
    {
        if x.len() != self.n() || u.len() != self.m() {
            return Err(Error::dims("rk4_step input sizes"));
        }
        if !(dt > T::zero()) {
            return Err(Error::BadParams("dt must be positive".into()));
        }
        let next = rk4(x, t, dt, |s, y| {
            let d = d_fn(s, y);
            let mut dx = y[self.dof..].to_vec();
            for i in 0..self.dof {
                dx.push(self.gravity[i] + u[i] + d[i]);
            }
            dx
        });
        if !all_finite(&next) {
            return Err(Error::NonFiniteState {
                t: (t + dt).as_f64(),
            });
        }
        Ok(next)
    }
}

impl<T: Real> Default for PlantConfig<T> {
    fn default() -> Self {
        Self::quadrotor()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState<T> {
    pub t: T,
    pub x: Vec<T>,
}

/// Disturbance-measurement channel: additive Gaussian noise followed by a
/// first-order low-pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub enabled: bool,
    /// Noise standard deviation, m/s^2.
    pub std: f64,
    /// Low-pass time constant, s.
    pub tau: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            std: 0.1,
            tau: 0.02,
        }
    }
}

impl NoiseConfig {
    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.std >= 0.0) || !(self.tau > 0.0) {
            return Err(Error::BadParams(
                "noise std must be >= 0 and tau > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Classical fourth-order Runge-Kutta step of `x' = f(t, x)`.
pub fn rk4<T: Real, F>(x: &[T], t: T, dt: T, f: F) -> Vec<T>
where
    F: Fn(T, &[T]) -> Vec<T>,
{
    let half = dt * T::lit(0.5);
    let stage = |k: &[T], h: T| -> Vec<T> { x.iter().zip(k).map(|(&a, &b)| a + h * b).collect() };
    let k1 = f(t, x);
    let k2 = f(t + half, &stage(&k1, half));
    let k3 = f(t + half, &stage(&k2, half));
    let k4 = f(t + dt, &stage(&k3, dt));
    let sixth = dt / T::lit(6.0);
    (0..x.len())
        .map(|i| x[i] + sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hover_is_fixed_point() {
        let p = PlantConfig::<f64>::quadrotor();
        let x = [1.0, -2.0, 3.0, 0.0, 0.0, 0.0];
        let u = [0.0, 0.0, 9.81];
        assert_eq!(p.dynamics(&x, &u, &[0.0; 3]).unwrap(), vec![0.0; 6]);
        let mut y = x.to_vec();
        for k in 0..1000 {
            y = p
                .rk4_step(&y, &u, |_, _| vec![0.0; 3], k as f64 * 0.01, 0.01)
                .unwrap();
        }
        assert_eq!(y, x.to_vec());
    }

    #[test]
    fn disturbance_adds_to_velocity_rate() {
        let p = PlantConfig::<f64>::quadrotor();
        let x = [0.0, 0.0, 0.0, 0.5, 0.5, 0.5];
        let u = [0.1, 0.2, 0.3];
        let a = p.dynamics(&x, &u, &[0.0; 3]).unwrap();
        let b = p.dynamics(&x, &u, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(b[5] - a[5], 1.0);
        assert_eq!(&a[..5], &b[..5]);
    }

    #[test]
    fn dynamics_affine_in_input() {
        let p = PlantConfig::<f64>::quadrotor();
        let x = [0.3, 0.1, -0.2, 1.0, -1.0, 0.5];
        let (u1, u2) = ([1.0, 2.0, -3.0], [-0.5, 0.25, 4.0]);
        let (al, be) = (0.7, -1.3);
        let mix: Vec<f64> = (0..3).map(|i| al * u1[i] + be * u2[i]).collect();
        let zero = p.dynamics(&x, &[0.0; 3], &[0.0; 3]).unwrap();
        let lhs = p.dynamics(&x, &mix, &[0.0; 3]).unwrap();
        let f1 = p.dynamics(&x, &u1, &[0.0; 3]).unwrap();
        let f2 = p.dynamics(&x, &u2, &[0.0; 3]).unwrap();
        for i in 0..6 {
            let rhs = al * (f1[i] - zero[i]) + be * (f2[i] - zero[i]);
            assert!((lhs[i] - zero[i] - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_errors() {
        let p = PlantConfig::<f64>::quadrotor();
        assert!(matches!(
            p.dynamics(&[0.0; 5], &[0.0; 3], &[0.0; 3]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(p.dynamics(&[0.0; 6], &[0.0; 2], &[0.0; 3]).is_err());
    }

    #[test]
    fn rk4_scalar_exponential() {
        let x = rk4(&[1.0f64], 0.0, 0.1, |_, y| vec![-y[0]]);
        assert!((x[0] - (-0.1f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn rk4_exact_on_double_integrator() {
        let p = PlantConfig {
            dof: 1,
            mass: 1.0f64,
            gravity: vec![0.0],
            dt: 0.1,
        };
        let x = p
            .rk4_step(&[0.5, -1.25], &[3.0], |_, _| vec![0.0], 0.0, 0.1)
            .unwrap();
        assert!((x[0] - (0.5 - 0.125 + 0.015)).abs() < 1e-15);
        assert!((x[1] - (-1.25 + 0.3)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_state_reported() {
        let p = PlantConfig::<f64>::quadrotor();
        let err = p
            .rk4_step(&[0.0; 6], &[0.0; 3], |_, _| vec![f64::NAN; 3], 0.0, 0.01)
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { .. }));
    }
}
