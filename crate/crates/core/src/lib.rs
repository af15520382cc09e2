//! Meta-learned disturbance representations with feedback-calibrated online
//! estimation for a control-affine point-mass flight model.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar for the common case.

// Parameter checks are written `!(x > 0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod disturbances;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod metalearn;
pub mod plant;
pub mod representation;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Representation = representation::RepresentationParams<f64>;
pub type Representation32 = representation::RepresentationParams<f32>;
pub type Plant = plant::PlantConfig<f64>;
pub type Plant32 = plant::PlantConfig<f32>;
pub type DisturbanceScenario = disturbances::Scenario<f64>;
pub type Segment = metalearn::TrajectorySegment<f64>;
pub type Observer = estimators::FcObserverState<f64>;
pub type Adaptive = estimators::AdaptiveState<f64>;
pub type Estimator = estimators::Estimator<f64>;
pub type Estimator32 = estimators::Estimator<f32>;
