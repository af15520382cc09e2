//! Synthetic disturbances: domain-randomized Fourier series and structural
//! scenarios (linear drag, step forces, sums of those).
//!
//! All disturbances are accelerations (m/s^2) acting on the velocity
//! sub-state; `eval` returns a vector with one entry per actuated axis.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm<T> {
    pub amplitude: T,
    /// rad/s
    pub frequency: T,
    /// rad, in `[0, 2pi)`
    pub phase: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSeries<T> {
    pub offset: T,
    pub terms: Vec<FourierTerm<T>>,
}

impl<T: Real> AxisSeries<T> {
    pub fn eval(&self, t: T) -> T {
        self.terms.iter().fold(self.offset, |s, term| {
            s + term.amplitude * (term.frequency * t + term.phase).sin()
        })
    }

    pub fn magnitude_bound(&self) -> T {
        self.terms
            .iter()
            .fold(self.offset.abs(), |s, term| s + term.amplitude)
    }

    pub fn rate_bound(&self) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |s, term| s + term.amplitude * term.frequency)
    }
}

/// Independent sine series with offset on each axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierProfile<T> {
    pub axes: Vec<AxisSeries<T>>,
}

impl<T: Real> FourierProfile<T> {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn eval(&self, t: T) -> Vec<T> {
        self.axes.iter().map(|a| a.eval(t)).collect()
    }

    pub fn magnitude_bounds(&self) -> Vec<T> {
        self.axes.iter().map(AxisSeries::magnitude_bound).collect()
    }

    pub fn rate_bounds(&self) -> Vec<T> {
        self.axes.iter().map(AxisSeries::rate_bound).collect()
    }
}

/// Sampling ranges for one dataset tier. All bounds inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomizationRanges {
    /// m/s^2
    pub amplitude: [f64; 2],
    /// rad/s
    pub frequency: [f64; 2],
    /// m/s^2
    pub offset: [f64; 2],
    pub terms: [usize; 2],
}

impl RandomizationRanges {
    pub fn meta_learn() -> Self {
        Self {
            amplitude: [0.0, 2.0],
            frequency: [0.0, 2.0],
            offset: [-1.0, 1.0],
            terms: [1, 4],
        }
    }

    /// Twice the amplitude and frequency span of [`Self::meta_learn`].
    pub fn shifted() -> Self {
        Self {
            amplitude: [0.0, 4.0],
            frequency: [0.0, 4.0],
            ..Self::meta_learn()
        }
    }

    pub fn zero() -> Self {
        Self {
            amplitude: [0.0, 0.0],
            frequency: [0.0, 0.0],
            offset: [0.0, 0.0],
            terms: [1, 1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |r: [f64; 2]| r[0] <= r[1] && r[0].is_finite() && r[1].is_finite();
        if !ok(self.amplitude) || !ok(self.frequency) || !ok(self.offset) {
            return Err(Error::BadParams(
                "range with lo > hi or non-finite bound".into(),
            ));
        }
        if self.amplitude[0] < 0.0 || self.frequency[0] < 0.0 {
            return Err(Error::BadParams(
                "amplitude and frequency ranges must be nonnegative".into(),
            ));
        }
        if self.terms[0] > self.terms[1] {
            return Err(Error::BadParams("term count range lo > hi".into()));
        }
        Ok(())
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

pub fn sample_profile<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    ranges: &RandomizationRanges,
    n: usize,
) -> FourierProfile<T> {
    let axes = (0..n)
        .map(|_| {
            let count = rng.random_range(ranges.terms[0]..=ranges.terms[1]);
            let terms = (0..count)
                .map(|_| FourierTerm {
                    amplitude: T::lit(uniform(rng, ranges.amplitude)),
                    frequency: T::lit(uniform(rng, ranges.frequency)),
                    phase: T::lit(rng.random_range(0.0..TAU)),
                })
                .collect();
            AxisSeries {
                offset: T::lit(uniform(rng, ranges.offset)),
                terms,
            }
        })
        .collect();
    FourierProfile { axes }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario<T> {
    Fourier {
        profile: FourierProfile<T>,
    },
    /// `d = -(1/m) D v` with diagonal `D` (N s/m).
    Drag {
        coefficients: Vec<T>,
        mass: T,
    },
    /// `d = vector` for `t >= time`, zero before.
    Step {
        time: T,
        vector: Vec<T>,
    },
    Composite {
        children: Vec<Scenario<T>>,
    },
}

impl<T: Real> Scenario<T> {
    pub fn fourier(profile: FourierProfile<T>) -> Self {
        Scenario::Fourier { profile }
    }

    /// Disturbance dimension, or `None` for an empty composite.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Scenario::Fourier { profile } => Some(profile.dim()),
            Scenario::Drag { coefficients, .. } => Some(coefficients.len()),
            Scenario::Step { vector, .. } => Some(vector.len()),
            Scenario::Composite { children } => children.first().and_then(Scenario::dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::Fourier { profile } => {
                for a in &profile.axes {
                    for term in &a.terms {
                        if term.amplitude < T::zero() || term.frequency < T::zero() {
                            return Err(Error::BadParams(
                                "negative amplitude or frequency in profile".into(),
                            ));
                        }
                    }
                }
            }
            Scenario::Drag { mass, .. } => {
                if !(*mass > T::zero()) {
                    return Err(Error::BadParams("drag mass must be positive".into()));
                }
            }
            Scenario::Step { .. } => {}
            Scenario::Composite { children } => {
                if children.is_empty() {
                    return Err(Error::BadParams(
                        "composite scenario without children".into(),
                    ));
                }
                let d = children[0].dim();
                for c in children {
                    c.validate()?;
                    if c.dim() != d {
                        return Err(Error::dims("composite children disagree on dimension"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Disturbance at time `t` and full state `x = [p, v]`.
    pub fn eval(&self, t: T, x: &[T]) -> Vec<T> {
        match self {
            Scenario::Fourier { profile } => profile.eval(t),
            Scenario::Drag { coefficients, mass } => {
                let v = &x[x.len() - coefficients.len()..];
                coefficients
                    .iter()
                    .zip(v)
                    .map(|(&c, &vi)| -c * vi / *mass)
                    .collect()
            }
            Scenario::Step { time, vector } => {
                if t >= *time {
                    vector.clone()
                } else {
                    vec![T::zero(); vector.len()]
                }
            }
            Scenario::Composite { children } => {
                let mut out = vec![T::zero(); self.dim().unwrap_or(0)];
                for c in children {
                    for (o, v) in out.iter_mut().zip(c.eval(t, x)) {
                        *o += v;
                    }
                }
                out
            }
        }
    }

    pub fn cast<U: Real>(&self) -> Scenario<U> {
        let c = |v: T| U::lit(v.as_f64());
        let cv = |v: &[T]| v.iter().map(|&x| c(x)).collect::<Vec<U>>();
        match self {
            Scenario::Fourier { profile } => Scenario::Fourier {
                profile: FourierProfile {
                    axes: profile
                        .axes
                        .iter()
                        .map(|a| AxisSeries {
                            offset: c(a.offset),
                            terms: a
                                .terms
                                .iter()
                                .map(|t| FourierTerm {
                                    amplitude: c(t.amplitude),
                                    frequency: c(t.frequency),
                                    phase: c(t.phase),
                                })
                                .collect(),
                        })
                        .collect(),
                },
            },
            Scenario::Drag { coefficients, mass } => Scenario::Drag {
                coefficients: cv(coefficients),
                mass: c(*mass),
            },
            Scenario::Step { time, vector } => Scenario::Step {
                time: c(*time),
                vector: cv(vector),
            },
            Scenario::Composite { children } => Scenario::Composite {
                children: children.iter().map(Scenario::cast).collect(),
            },
        }
    }
}

/// Magnitude and rate summary of a sampled disturbance signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceStats {
    /// Largest absolute component value.
    pub max_magnitude: f64,
    /// Largest absolute component finite-difference rate.
    pub max_rate: f64,
    /// Root mean square over all components.
    pub rms: f64,
    pub per_axis_max_magnitude: Vec<f64>,
    pub per_axis_max_rate: Vec<f64>,
}

/// Statistics of a uniformly sampled sequence of disturbance vectors.
pub fn dataset_stats<T: Real, S: AsRef<[T]>>(samples: &[S], dt: T) -> Result<DisturbanceStats> {
    let first = samples.first().ok_or(Error::Empty)?.as_ref();
    let dim = first.len();
    if dim == 0 {
        return Err(Error::Empty);
    }
    let mut mag = vec![0.0f64; dim];
    let mut rate = vec![0.0f64; dim];
    let mut sq = 0.0;
    for (k, s) in samples.iter().enumerate() {
        let s = s.as_ref();
        if s.len() != dim {
            return Err(Error::dims("ragged disturbance samples"));
        }
        for j in 0..dim {
            let v = s[j].as_f64();
            mag[j] = mag[j].max(v.abs());
            sq += v * v;
            if k > 0 {
                let prev = samples[k - 1].as_ref()[j].as_f64();
                rate[j] = rate[j].max(((v - prev) / dt.as_f64()).abs());
            }
        }
    }
    let count = (samples.len() * dim) as f64;
    Ok(DisturbanceStats {
        max_magnitude: mag.iter().copied().fold(0.0, f64::max),
        max_rate: rate.iter().copied().fold(0.0, f64::max),
        rms: (sq / count).sqrt(),
        per_axis_max_magnitude: mag,
        per_axis_max_rate: rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn single(a: f64, w: f64, psi: f64) -> FourierProfile<f64> {
        FourierProfile {
            axes: vec![AxisSeries {
                offset: 0.0,
                terms: vec![FourierTerm {
                    amplitude: a,
                    frequency: w,
                    phase: psi,
                }],
            }],
        }
    }

    #[test]
    fn single_term_quarter_period() {
        let s = Scenario::fourier(single(1.0, 2.0 * PI, 0.0));
        let d = s.eval(0.25, &[0.0, 0.0]);
        assert!((d[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_ranges_give_zero_signal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p: FourierProfile<f64> = sample_profile(&mut rng, &RandomizationRanges::zero(), 3);
        for k in 0..100 {
            assert!(p.eval(k as f64 * 0.37).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn sampled_profiles_respect_ranges() {
        let ranges = RandomizationRanges::meta_learn();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let p: FourierProfile<f64> = sample_profile(&mut rng, &ranges, 3);
            for a in &p.axes {
                assert!((1..=4).contains(&a.terms.len()));
                assert!(a.offset >= -1.0 && a.offset <= 1.0);
                for t in &a.terms {
                    assert!((0.0..=2.0).contains(&t.amplitude));
                    assert!((0.0..=2.0).contains(&t.frequency));
                    assert!((0.0..TAU).contains(&t.phase));
                }
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let r = RandomizationRanges::shifted();
        let a: FourierProfile<f64> = sample_profile(&mut ChaCha8Rng::seed_from_u64(99), &r, 3);
        let b: FourierProfile<f64> = sample_profile(&mut ChaCha8Rng::seed_from_u64(99), &r, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn drag_vanishes_at_rest() {
        let s = Scenario::Drag {
            coefficients: vec![0.4, 0.4, 0.2],
            mass: 1.0,
        };
        let x = [1.0, 2.0, 3.0, 0.0, 0.0, 0.0];
        assert_eq!(s.eval(3.0, &x), vec![0.0, 0.0, 0.0]);
        let x = [0.0, 0.0, 0.0, 1.0, -2.0, 0.5];
        let d = s.eval(0.0, &x);
        assert_eq!(d, vec![-0.4, 0.8, -0.1]);
    }

    #[test]
    fn step_switches_on() {
        let s = Scenario::Step {
            time: 1.0,
            vector: vec![0.0, 0.0, -1.0],
        };
        assert_eq!(s.eval(0.99, &[0.0; 6]), vec![0.0; 3]);
        assert_eq!(s.eval(1.0, &[0.0; 6]), vec![0.0, 0.0, -1.0]);
    }

    #[test]
    fn composite_is_elementwise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let r = RandomizationRanges::meta_learn();
        let a = Scenario::fourier(sample_profile::<f64, _>(&mut rng, &r, 3));
        let b = Scenario::fourier(sample_profile::<f64, _>(&mut rng, &r, 3));
        let c = Scenario::Composite {
            children: vec![a.clone(), b.clone()],
        };
        c.validate().unwrap();
        for _ in 0..200 {
            let t = rng.random_range(0.0..50.0);
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let sum: Vec<f64> = a
                .eval(t, &x)
                .iter()
                .zip(b.eval(t, &x))
                .map(|(p, q)| p + q)
                .collect();
            assert_eq!(c.eval(t, &x), sum);
        }
    }

    #[test]
    fn empty_composite_is_invalid() {
        let c: Scenario<f64> = Scenario::Composite { children: vec![] };
        assert!(c.validate().is_err());
    }

    #[test]
    fn grid_rates_stay_below_closed_form_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let r = RandomizationRanges::shifted();
        let dt = 1e-3;
        for _ in 0..100 {
            let p: FourierProfile<f64> = sample_profile(&mut rng, &r, 3);
            let samples: Vec<Vec<f64>> = (0..20_000).map(|k| p.eval(k as f64 * dt)).collect();
            let stats = dataset_stats(&samples, dt).unwrap();
            for j in 0..3 {
                assert!(stats.per_axis_max_rate[j] <= p.rate_bounds()[j] + 1e-12);
                assert!(stats.per_axis_max_magnitude[j] <= p.magnitude_bounds()[j] + 1e-12);
            }
        }
    }

    #[test]
    fn stats_of_constant_and_sine() {
        let constant = vec![vec![1.5, -2.0]; 100];
        let s = dataset_stats(&constant, 0.01).unwrap();
        assert_eq!(s.max_rate, 0.0);
        assert_eq!(s.max_magnitude, 2.0);

        let p = single(2.0, 3.0, 0.0);
        let dt = 1e-4;
        let samples: Vec<Vec<f64>> = (0..62_832).map(|k| p.eval(k as f64 * dt)).collect();
        let s = dataset_stats(&samples, dt).unwrap();
        assert!((s.max_magnitude - 2.0).abs() < 1e-6);
        assert!((s.max_rate - 6.0).abs() < 1e-3);
        assert!((s.rms - 2.0 / 2f64.sqrt()).abs() < 1e-2);

        assert!(matches!(
            dataset_stats::<f64, Vec<f64>>(&[], 0.1),
            Err(Error::Empty)
        ));
    }
}
