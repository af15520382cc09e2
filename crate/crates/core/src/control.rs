//! Translational tracking controller with disturbance feedforward, and the
//! analytic reference trajectories used for data collection and benchmarks.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Mat};
use crate::plant::PlantConfig;
use crate::scalar::Real;

/// PD gains on position and velocity error.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerGains<T> {
    pub kp: Mat<T>,
    pub kv: Mat<T>,
}

impl<T: Real> ControllerGains<T> {
    pub fn diagonal(dof: usize, kp: T, kv: T) -> Self {
        Self {
            kp: Mat::scaled_identity(dof, kp),
            kv: Mat::scaled_identity(dof, kv),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("kp", &self.kp), ("kv", &self.kv)] {
            if !k.is_symmetric(T::lit(1e-12)) {
                return Err(Error::BadParams(format!("{name} must be symmetric")));
            }
            Cholesky::factor(k)
                .map_err(|_| Error::BadParams(format!("{name} must be positive definite")))?;
        }
        if self.kp.rows() != self.kv.rows() {
            return Err(Error::dims("kp and kv sizes differ"));
        }
        Ok(())
    }
}

/// Desired position, velocity and acceleration at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct RefPoint<T> {
    pub pos: Vec<T>,
    pub vel: Vec<T>,
    pub acc: Vec<T>,
}

impl<T: Real> RefPoint<T> {
    /// `x_d = [p_d, v_d]`
    pub fn state(&self) -> Vec<T> {
        self.pos.iter().chain(&self.vel).copied().collect()
    }

    /// `xdot_d = [v_d, a_d]`
    pub fn state_rate(&self) -> Vec<T> {
        self.vel.iter().chain(&self.acc).copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Reference {
    Hover {
        point: Vec<f64>,
    },
    /// `center + r [cos wt, sin wt, 0]`
    Circle {
        center: Vec<f64>,
        radius: f64,
        period: f64,
    },
    /// Gerono lemniscate `center + r [cos wt, sin wt cos wt, 0]`.
    Lemniscate {
        center: Vec<f64>,
        radius: f64,
        period: f64,
    },
    /// Per-axis polynomial in normalized time `t / duration`, held constant
    /// after `duration`.
    Polynomial {
        coefficients: Vec<Vec<f64>>,
        duration: f64,
    },
}

impl Reference {
    pub fn dof(&self) -> usize {
        match self {
            Reference::Hover { point } => point.len(),
            Reference::Circle { center, .. } | Reference::Lemniscate { center, .. } => center.len(),
            Reference::Polynomial { coefficients, .. } => coefficients.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Reference::Hover { point } if point.is_empty() => {
                Err(Error::BadParams("hover point is empty".into()))
            }
            Reference::Circle {
                center,
                radius,
                period,
            }
            | Reference::Lemniscate {
                center,
                radius,
                period,
            } => {
                if !(*radius > 0.0) || !(*period > 0.0) {
                    Err(Error::BadParams(
                        "radius and period must be positive".into(),
                    ))
                } else if center.len() < 2 {
                    Err(Error::BadParams(
                        "planar references need at least two axes".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            Reference::Polynomial {
                coefficients,
                duration,
            } => {
                if !(*duration > 0.0) || coefficients.is_empty() {
                    Err(Error::BadParams(
                        "polynomial needs axes and a positive duration".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            Reference::Hover { .. } => Ok(()),
        }
    }

    pub fn eval<T: Real>(&self, t: T) -> RefPoint<T> {
        let c = T::lit;
        match self {
            Reference::Hover { point } => RefPoint {
                pos: point.iter().map(|&p| c(p)).collect(),
                vel: vec![T::zero(); point.len()],
                acc: vec![T::zero(); point.len()],
            },
            Reference::Circle {
                center,
                radius,
                period,
            } => {
                let w = c(TAU / period);
                let r = c(*radius);
                let (s, co) = (w * t).sin_cos();
                let mut pos: Vec<T> = center.iter().map(|&p| c(p)).collect();
                let mut vel = vec![T::zero(); center.len()];
                let mut acc = vec![T::zero(); center.len()];
                pos[0] += r * co;
                pos[1] += r * s;
                vel[0] = -r * w * s;
                vel[1] = r * w * co;
                acc[0] = -r * w * w * co;
                acc[1] = -r * w * w * s;
                RefPoint { pos, vel, acc }
            }
            Reference::Lemniscate {
                center,
                radius,
                period,
            } => {
                let w = c(TAU / period);
                let r = c(*radius);
                let (s, co) = (w * t).sin_cos();
                let (s2, c2) = (c(2.0) * w * t).sin_cos();
                let mut pos: Vec<T> = center.iter().map(|&p| c(p)).collect();
                let mut vel = vec![T::zero(); center.len()];
                let mut acc = vec![T::zero(); center.len()];
                pos[0] += r * co;
                // sin cos = sin(2wt)/2
                pos[1] += r * s * co;
                vel[0] = -r * w * s;
                vel[1] = r * w * c2;
                acc[0] = -r * w * w * co;
                acc[1] = -c(2.0) * r * w * w * s2;
                RefPoint { pos, vel, acc }
            }
            Reference::Polynomial {
                coefficients,
                duration,
            } => {
                let dur = c(*duration);
                let held = t >= dur;
                let tau = if held {
                    T::one()
                } else {
                    t.max(T::zero()) / dur
                };
                let mut pos = Vec::with_capacity(coefficients.len());
                let mut vel = Vec::with_capacity(coefficients.len());
                let mut acc = Vec::with_capacity(coefficients.len());
                for coeffs in coefficients {
                    let (mut p, mut dp, mut ddp) = (T::zero(), T::zero(), T::zero());
                    for (i, &ci) in coeffs.iter().enumerate().rev() {
                        let ci = c(ci);
                        p = p * tau + ci;
                        if i >= 1 {
                            dp = dp * tau + T::from_usize_lossy(i) * ci;
                        }
                        if i >= 2 {
                            ddp = ddp * tau + T::from_usize_lossy(i * (i - 1)) * ci;
                        }
                    }
                    pos.push(p);
                    if held {
                        vel.push(T::zero());
                        acc.push(T::zero());
                    } else {
                        vel.push(dp / dur);
                        acc.push(ddp / (dur * dur));
                    }
                }
                RefPoint { pos, vel, acc }
            }
        }
    }

    /// Largest speed on a dense grid over `[0, horizon]`.
    pub fn peak_speed(&self, horizon: f64) -> f64 {
        (0..=2000)
            .map(|i| {
                let p = self.eval::<f64>(horizon * i as f64 / 2000.0);
                p.vel.iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// `(x_d, xdot_d)` for `family` at time `t`.
pub fn make_reference<T: Real>(family: &Reference, t: T) -> Result<(Vec<T>, Vec<T>)> {
    family.validate()?;
    let p = family.eval(t);
    Ok((p.state(), p.state_rate()))
}

/// Random smooth reference for data collection: a circle or a quintic in
/// normalized time, with peak speed at most `max_speed`.
pub fn random_reference<R: Rng + ?Sized>(
    rng: &mut R,
    dof: usize,
    duration: f64,
    max_speed: f64,
) -> Reference {
    let center: Vec<f64> = (0..dof).map(|_| rng.random_range(-2.0..2.0)).collect();
    let speed = max_speed * rng.random_range(0.2..1.0);
    if dof >= 2 && rng.random_bool(0.5) {
        let radius: f64 = rng.random_range(0.5..3.0);
        return Reference::Circle {
            center,
            radius,
            period: TAU * radius / speed,
        };
    }
    let mut coefficients: Vec<Vec<f64>> = center
        .iter()
        .map(|&c0| {
            let mut c = vec![c0];
            c.extend((0..5).map(|_| rng.random_range(-1.0..1.0)));
            c
        })
        .collect();
    let reference = Reference::Polynomial {
        coefficients: coefficients.clone(),
        duration,
    };
    let peak = reference.peak_speed(duration);
    if peak > 0.0 {
        let s = speed / peak;
        for axis in &mut coefficients {
            for ci in axis.iter_mut().skip(1) {
                *ci *= s;
            }
        }
    }
    Reference::Polynomial {
        coefficients,
        duration,
    }
}

/// `u = g^-1 (-f(x) + xdot_d + K (x_d - x) - d_hat)` on the actuated rows:
/// `u = a_d + Kp (p_d - p) + Kv (v_d - v) - gravity - d_hat`.
pub fn feedback_law<T: Real>(
    x: &[T],
    reference: &RefPoint<T>,
    d_hat: &[T],
    gains: &ControllerGains<T>,
    plant: &PlantConfig<T>,
) -> Result<Vec<T>> {
    let dof = plant.dof;
    if x.len() != plant.n() || d_hat.len() != dof || reference.pos.len() != dof {
        return Err(Error::dims("controller inputs do not match plant"));
    }
    let (p, v) = x.split_at(dof);
    let ep: Vec<T> = reference.pos.iter().zip(p).map(|(&a, &b)| a - b).collect();
    let ev: Vec<T> = reference.vel.iter().zip(v).map(|(&a, &b)| a - b).collect();
    let kp = gains.kp.mul_vec(&ep);
    let kv = gains.kv.mul_vec(&ev);
    Ok((0..dof)
        .map(|i| reference.acc[i] + kp[i] + kv[i] - plant.gravity[i] - d_hat[i])
        .collect())
}

/// PD tracking controller; feedforward of the disturbance estimate can be
/// switched off to run estimators open-loop.
#[derive(Clone, Debug)]
pub struct TrackingController<T> {
    pub gains: ControllerGains<T>,
    pub feedforward: bool,
}

impl<T: Real> TrackingController<T> {
    pub fn command(
        &self,
        x: &[T],
        reference: &RefPoint<T>,
        d_hat: Option<&[T]>,
        plant: &PlantConfig<T>,
    ) -> Result<Vec<T>> {
        let zeros = vec![T::zero(); plant.dof];
        let d = match (self.feedforward, d_hat) {
            (true, Some(d)) => d,
            _ => &zeros,
        };
        feedback_law(x, reference, d, &self.gains, plant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plant() -> PlantConfig<f64> {
        PlantConfig::quadrotor()
    }

    #[test]
    fn hover_at_reference() {
        let r = Reference::Hover {
            point: vec![1.0, 2.0, 3.0],
        };
        let rp = r.eval(0.0);
        let x = rp.state();
        let u = feedback_law(
            &x,
            &rp,
            &[0.0; 3],
            &ControllerGains::diagonal(3, 4.0, 4.0),
            &plant(),
        )
        .unwrap();
        assert_eq!(u, vec![0.0, 0.0, 9.81]);
    }

    #[test]
    fn command_is_affine_in_estimate() {
        let r = Reference::Lemniscate {
            center: vec![0.0, 0.0, 1.0],
            radius: 2.0,
            period: 6.0,
        };
        let rp = r.eval(1.3);
        let x = [0.3, -0.2, 1.1, 0.5, 0.1, -0.3];
        let g = ControllerGains::diagonal(3, 4.0, 4.0);
        let d1 = [0.3, -1.2, 2.0];
        let d2 = [-0.7, 0.4, 0.1];
        let u1 = feedback_law(&x, &rp, &d1, &g, &plant()).unwrap();
        let u2 = feedback_law(&x, &rp, &d2, &g, &plant()).unwrap();
        for i in 0..3 {
            assert!((u1[i] - u2[i] + (d1[i] - d2[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_starts_on_x_axis() {
        let r = Reference::Circle {
            center: vec![1.0, -1.0, 2.0],
            radius: 1.5,
            period: 4.0,
        };
        let (xd, _) = make_reference::<f64>(&r, 0.0).unwrap();
        assert!((xd[0] - 2.5).abs() < 1e-15);
        assert!((xd[1] + 1.0).abs() < 1e-15);
        assert_eq!(xd[2], 2.0);
    }

    #[test]
    fn bad_params_rejected() {
        let r = Reference::Circle {
            center: vec![0.0; 3],
            radius: 0.0,
            period: 1.0,
        };
        assert!(matches!(
            make_reference::<f64>(&r, 0.0),
            Err(Error::BadParams(_))
        ));
        let r = Reference::Lemniscate {
            center: vec![0.0; 3],
            radius: 1.0,
            period: -1.0,
        };
        assert!(make_reference::<f64>(&r, 0.0).is_err());
    }

    fn check_derivatives(r: &Reference, horizon: f64) {
        let h = 1e-4;
        let mut t = 0.01;
        while t < horizon {
            let p = r.eval::<f64>(t);
            let a = r.eval::<f64>(t + h);
            let b = r.eval::<f64>(t - h);
            for i in 0..r.dof() {
                let dp = (a.pos[i] - b.pos[i]) / (2.0 * h);
                let dv = (a.vel[i] - b.vel[i]) / (2.0 * h);
                assert!((dp - p.vel[i]).abs() < 1e-6, "vel axis {i} t {t}");
                assert!((dv - p.acc[i]).abs() < 1e-6, "acc axis {i} t {t}");
            }
            t += 0.037;
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        check_derivatives(
            &Reference::Circle {
                center: vec![0.0, 0.0, 1.0],
                radius: 2.0,
                period: 5.0,
            },
            5.0,
        );
        check_derivatives(
            &Reference::Lemniscate {
                center: vec![0.0, 0.0, 1.0],
                radius: 3.0,
                period: 8.0,
            },
            8.0,
        );
        check_derivatives(
            &Reference::Polynomial {
                coefficients: vec![vec![1.0, 0.5, -0.3, 0.2, 0.1, -0.05]; 3],
                duration: 10.0,
            },
            9.9,
        );
    }

    #[test]
    fn lemniscate_stays_in_box() {
        let r = 2.5;
        let l = Reference::Lemniscate {
            center: vec![0.0, 0.0, 0.0],
            radius: r,
            period: 7.0,
        };
        let mut ymax: f64 = 0.0;
        for i in 0..7000 {
            let p = l.eval::<f64>(i as f64 * 1e-3);
            assert!(p.pos[0].abs() <= r + 1e-12);
            assert!(p.pos[1].abs() <= r / 2.0 + 1e-12);
            ymax = ymax.max(p.pos[1].abs());
        }
        assert!((ymax - r / 2.0).abs() < 1e-4);
    }

    #[test]
    fn random_references_respect_speed_limit() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..40 {
            let r = random_reference(&mut rng, 3, 20.0, 3.0);
            r.validate().unwrap();
            assert!(r.peak_speed(20.0) <= 3.0 + 1e-6);
        }
    }
}
