//! Disturbance estimators: the feedback-calibrated observer, the
//! concurrent-learning adaptive law, and the comparison bank built on them.

mod adaptive;
mod l1;
mod measurement;
mod observer;

pub use adaptive::{AdaptiveState, BufferRecord, ConcurrentBuffer, LawForm};
pub use l1::L1Adaptive;
pub use measurement::{disturbance_measurement, low_pass_step, DisturbanceSensor};
pub use observer::FcObserverState;

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::metalearn::SharedRidge;
use crate::representation::{block_diag, embed, FeatureMatrix, RepresentationParams};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EstimatorKind {
    FirstOrder,
    /// Observer around a known linear drag model `-(1/m) D v`.
    VanillaNN {
        drag: Vec<f64>,
        mass: f64,
    },
    L1Adapt {
        /// Low-pass bandwidth, rad/s.
        cutoff: f64,
        predictor_gain: f64,
    },
    MetaAdapt,
    MetaAdaptFC,
    /// Ridge refit over the last `window` samples every step.
    MetaLSFC {
        window: usize,
        lambda: f64,
    },
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::FirstOrder => "FirstOrder",
            EstimatorKind::VanillaNN { .. } => "VanillaNN",
            EstimatorKind::L1Adapt { .. } => "L1Adapt",
            EstimatorKind::MetaAdapt => "MetaAdapt",
            EstimatorKind::MetaAdaptFC => "MetaAdaptFC",
            EstimatorKind::MetaLSFC { .. } => "MetaLSFC",
        }
    }

    pub fn needs_representation(&self) -> bool {
        matches!(
            self,
            EstimatorKind::MetaAdapt | EstimatorKind::MetaAdaptFC | EstimatorKind::MetaLSFC { .. }
        )
    }

    pub fn validate(&self, dof: usize) -> Result<()> {
        match self {
            EstimatorKind::VanillaNN { drag, mass } => {
                if drag.len() != dof {
                    return Err(Error::dims("drag coefficients must match dof"));
                }
                if !(*mass > 0.0) || drag.iter().any(|d| !(*d >= 0.0)) {
                    return Err(Error::BadParams(
                        "drag model needs mass > 0 and D >= 0".into(),
                    ));
                }
            }
            EstimatorKind::L1Adapt {
                cutoff,
                predictor_gain,
            } => {
                if !(*cutoff > 0.0) || !(*predictor_gain > 0.0) {
                    return Err(Error::BadParams("L1 gains must be positive".into()));
                }
            }
            EstimatorKind::MetaLSFC { window, lambda } => {
                if *window == 0 || !(*lambda > 0.0) {
                    return Err(Error::BadParams(
                        "LS window must be >= 1 and lambda > 0".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Gains shared by the estimator bank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorGains {
    /// Observer gain `L = l I`.
    pub observer: f64,
    /// Adaptation gain `P = p I`.
    pub adaptation: f64,
    /// Tracking-error gain; zero disables the term.
    pub gamma: f64,
    /// Position weight in the composite tracking error `s`.
    pub lambda_track: f64,
    pub buffer_size: usize,
    /// Buffer records older than this (s) are dropped.
    pub buffer_max_age: Option<f64>,
    pub theta_max: f64,
    pub law: LawForm,
}

impl Default for EstimatorGains {
    fn default() -> Self {
        Self {
            observer: 8.0,
            adaptation: 20.0,
            gamma: 0.0,
            lambda_track: 1.0,
            buffer_size: 30,
            buffer_max_age: Some(0.3),
            theta_max: 50.0,
            law: LawForm::Standard,
        }
    }
}

impl EstimatorGains {
    pub fn validate(&self) -> Result<()> {
        if !(self.observer > 0.0) || !(self.adaptation > 0.0) || !(self.theta_max > 0.0) {
            return Err(Error::BadParams(
                "observer, adaptation and theta_max must be positive".into(),
            ));
        }
        if !(self.gamma >= 0.0) || !(self.lambda_track >= 0.0) {
            return Err(Error::BadParams(
                "gamma and lambda_track must be nonnegative".into(),
            ));
        }
        if self.buffer_max_age.is_some_and(|a| !(a > 0.0)) {
            return Err(Error::BadParams("buffer_max_age must be positive".into()));
        }
        Ok(())
    }
}

/// Signals available to every estimator at one sample.
#[derive(Clone, Copy, Debug)]
pub struct EstimatorInput<'a, T> {
    /// Full state `[p, v]`.
    pub x: &'a [T],
    /// Reference state `[p_d, v_d]`.
    pub x_d: &'a [T],
    /// Drift plus input on the velocity rows over the last interval.
    pub f_plus_gu: &'a [T],
    /// Measured disturbance for the last interval, absent at the first sample.
    pub d_meas: Option<&'a [T]>,
    pub dt: T,
}

#[derive(Clone, Debug)]
enum Core<T> {
    Observer {
        fc: FcObserverState<T>,
        drag: Option<(Vec<T>, T)>,
    },
    L1(L1Adaptive<T>),
    Adaptive {
        adaptive: AdaptiveState<T>,
        fc: Option<FcObserverState<T>>,
    },
    LeastSquares {
        window: usize,
        lambda: T,
        samples: VecDeque<(Vec<T>, Vec<T>)>,
        theta: Vec<T>,
        fc: FcObserverState<T>,
    },
}

/// One estimator instance with its own mutable state.
#[derive(Clone, Debug)]
pub struct Estimator<T> {
    kind: EstimatorKind,
    dof: usize,
    lambda_track: T,
    representation: Option<Arc<RepresentationParams<T>>>,
    history: VecDeque<Vec<T>>,
    core: Core<T>,
    last_features: Option<FeatureMatrix<T>>,
}

impl<T: Real> Estimator<T> {
    pub fn new(
        kind: EstimatorKind,
        gains: &EstimatorGains,
        representation: Option<Arc<RepresentationParams<T>>>,
        dof: usize,
    ) -> Result<Self> {
        kind.validate(dof)?;
        gains.validate()?;
        let c = T::lit;
        let observer = || FcObserverState::diagonal(dof, c(gains.observer));
        let rep = if kind.needs_representation() {
            let r = representation.ok_or_else(|| {
                Error::BadParams(format!("{} needs a representation", kind.name()))
            })?;
            if r.state_dim != 2 * dof {
                return Err(Error::dims(
                    "representation state dimension does not match plant",
                ));
            }
            Some(r)
        } else {
            None
        };
        let nk = dof * rep.as_ref().map_or(0, |r| r.features());
        let core = match &kind {
            EstimatorKind::FirstOrder => Core::Observer {
                fc: observer()?,
                drag: None,
            },
            EstimatorKind::VanillaNN { drag, mass } => Core::Observer {
                fc: observer()?,
                drag: Some((drag.iter().map(|&d| c(d)).collect(), c(*mass))),
            },
            EstimatorKind::L1Adapt {
                cutoff,
                predictor_gain,
            } => Core::L1(L1Adaptive::new(dof, c(*cutoff), c(*predictor_gain))?),
            EstimatorKind::MetaAdapt | EstimatorKind::MetaAdaptFC => {
                let mut adaptive = AdaptiveState::new(
                    vec![T::zero(); nk],
                    Mat::scaled_identity(nk, c(gains.adaptation)),
                    c(gains.gamma),
                    ConcurrentBuffer::new(gains.buffer_size, gains.buffer_max_age.map(c)),
                    c(gains.theta_max),
                )?;
                adaptive.form = gains.law;
                let fc = match kind {
                    EstimatorKind::MetaAdaptFC => Some(observer()?),
                    _ => None,
                };
                Core::Adaptive { adaptive, fc }
            }
            EstimatorKind::MetaLSFC { window, lambda } => Core::LeastSquares {
                window: *window,
                lambda: c(*lambda),
                samples: VecDeque::with_capacity(*window),
                theta: vec![T::zero(); nk],
                fc: observer()?,
            },
        };
        Ok(Self {
            kind,
            dof,
            lambda_track: c(gains.lambda_track),
            representation: rep,
            history: VecDeque::new(),
            core,
            last_features: None,
        })
    }

    pub fn kind(&self) -> &EstimatorKind {
        &self.kind
    }

    pub fn saturated(&self) -> bool {
        matches!(&self.core, Core::Adaptive { adaptive, .. } if adaptive.saturated)
    }

    /// Current parameter estimate of the adaptive or least-squares kinds.
    pub fn theta(&self) -> Option<&[T]> {
        match &self.core {
            Core::Adaptive { adaptive, .. } => Some(&adaptive.theta),
            Core::LeastSquares { theta, .. } => Some(theta),
            _ => None,
        }
    }

    /// Features of the most recent full window.
    pub fn last_features(&self) -> Option<&FeatureMatrix<T>> {
        self.last_features.as_ref()
    }

    fn features(&mut self, x: &[T]) -> Result<Option<FeatureMatrix<T>>> {
        let Some(rep) = &self.representation else {
            return Ok(None);
        };
        self.history.push_back(x.to_vec());
        while self.history.len() > rep.depth + 1 {
            self.history.pop_front();
        }
        if self.history.len() < rep.depth + 1 {
            return Ok(None);
        }
        let hist: Vec<&[T]> = self.history.iter().map(|v| v.as_slice()).collect();
        let z = embed(&hist, rep.depth, rep.state_dim)?;
        let phi = rep.featurize(&z)?;
        Ok(Some(block_diag(&phi, self.dof)))
    }

    /// Advances the estimator to the sample in `input` and returns `d_hat`
    /// on the velocity rows. Meta kinds use a zero model until `M + 1`
    /// states have been seen.
    pub fn step(&mut self, input: &EstimatorInput<'_, T>) -> Result<Vec<T>> {
        let dof = self.dof;
        if input.x.len() != 2 * dof || input.x_d.len() != 2 * dof || input.f_plus_gu.len() != dof {
            return Err(Error::dims("estimator input sizes"));
        }
        if input.d_meas.is_some_and(|d| d.len() != dof) {
            return Err(Error::dims("measured disturbance size"));
        }
        let v = &input.x[dof..];
        let phi_t = self.features(input.x)?;
        let zeros = vec![T::zero(); dof];
        let d_hat = match &mut self.core {
            Core::Observer { fc, drag } => {
                let d_model = match drag {
                    Some((d, m)) => d.iter().zip(v).map(|(&di, &vi)| -di * vi / *m).collect(),
                    None => zeros,
                };
                fc.fc_step(&d_model, v, input.f_plus_gu, input.dt)?
            }
            Core::L1(l1) => l1.step(v, input.f_plus_gu, input.dt)?,
            Core::Adaptive { adaptive, fc } => {
                let d_model = match &phi_t {
                    Some(pt) => {
                        let s: Vec<T> = (0..dof)
                            .map(|i| {
                                (v[i] - input.x_d[dof + i])
                                    + self.lambda_track * (input.x[i] - input.x_d[i])
                            })
                            .collect();
                        adaptive.adapt_step(pt, input.d_meas, &s, input.dt)?;
                        pt.mul_vec(&adaptive.theta)?
                    }
                    None => zeros,
                };
                match fc {
                    Some(fc) => fc.fc_step(&d_model, v, input.f_plus_gu, input.dt)?,
                    None => d_model,
                }
            }
            Core::LeastSquares {
                window,
                lambda,
                samples,
                theta,
                fc,
            } => {
                let d_model = match &phi_t {
                    Some(pt) => {
                        if let Some(d) = input.d_meas {
                            samples.push_back((pt.phi().to_vec(), d.to_vec()));
                            while samples.len() > *window {
                                samples.pop_front();
                            }
                        }
                        if !samples.is_empty() {
                            let (phis, ds): (Vec<&[T]>, Vec<&[T]>) = samples
                                .iter()
                                .map(|(p, d)| (p.as_slice(), d.as_slice()))
                                .unzip();
                            *theta = SharedRidge::fit(&phis, &ds, *lambda)?.theta();
                        }
                        pt.mul_vec(theta)?
                    }
                    None => zeros,
                };
                fc.fc_step(&d_model, v, input.f_plus_gu, input.dt)?
            }
        };
        self.last_features = phi_t;
        Ok(d_hat)
    }

    /// Human-readable state summary for debugging.
    pub fn dump(&self) -> String {
        let f = |xs: &[T]| xs.iter().map(|v| v.as_f64()).collect::<Vec<f64>>();
        let body = match &self.core {
            Core::Observer { fc, .. } => serde_json::json!({ "aux": f(&fc.aux) }),
            Core::L1(l1) => serde_json::json!({ "estimate": f(l1.estimate()) }),
            Core::Adaptive { adaptive, fc } => serde_json::json!({
                "theta": f(&adaptive.theta),
                "buffer": adaptive.buffer.len(),
                "min_singular_value": adaptive.buffer.min_singular_value().as_f64(),
                "saturated": adaptive.saturated,
                "aux": fc.as_ref().map(|o| f(&o.aux)),
            }),
            Core::LeastSquares {
                samples, theta, fc, ..
            } => serde_json::json!({
                "theta": f(theta),
                "window": samples.len(),
                "aux": f(&fc.aux),
            }),
        };
        serde_json::json!({ "kind": self.kind.name(), "state": body }).to_string()
    }
}
