//! Bi-level meta-learning of the representation: closed-form ridge inner
//! loop on a support window, gradient outer loop on the following query
//! window.

mod adam;
mod dataset;
mod objective;
mod ridge;
mod train;

pub use adam::OptimizerState;
pub use dataset::{
    read_dataset_dir, slice_dataset, slice_segments, SegmentPairs, Trajectory, TrajectorySegment,
    DATASET_FORMAT,
};
pub use objective::{meta_gradient, outer_loss, pair_gradient, pair_loss, LossParts};
pub use ridge::{ridge_solve, stack_features, SharedRidge};
pub use train::{train, EpochRecord, TrainingReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaConfig {
    /// Support length `N`.
    pub support_len: usize,
    /// Query length `H`.
    pub query_len: usize,
    /// Embedding depth `M`: windows hold `M + 1` states.
    pub depth: usize,
    /// Weight of the query-feature L1 penalty.
    pub lambda1: f64,
    /// Ridge weight of the inner problem.
    pub lambda2: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub val_fraction: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    /// Feature count `k`.
    pub features: usize,
    /// Feature magnitude bound.
    pub bound: f64,
    /// Offset between segment starts; `None` means back-to-back segments.
    pub stride: Option<usize>,
    /// Minimum input standardization scale.
    pub norm_floor: f64,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            support_len: 10,
            query_len: 10,
            depth: 3,
            lambda1: 1e-4,
            lambda2: 1e-2,
            learning_rate: 1e-3,
            batch_size: 16,
            epochs: 500,
            patience: 25,
            val_fraction: 0.1,
            seed: 0,
            hidden: vec![32, 32],
            features: 8,
            bound: 5.0,
            stride: None,
            norm_floor: 1e-3,
        }
    }
}

impl MetaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadParams(m.into()));
        if self.support_len == 0 || self.query_len == 0 {
            return bad("support and query lengths must be positive");
        }
        if !(self.lambda2 > 0.0) || !(self.lambda1 >= 0.0) {
            return bad("need lambda2 > 0 and lambda1 >= 0");
        }
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.epochs == 0 {
            return bad("learning rate, batch size and epochs must be positive");
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad("val_fraction must lie in [0, 1)");
        }
        if self.features == 0 || !(self.bound > 0.0) || !(self.norm_floor > 0.0) {
            return bad("features, bound and norm_floor must be positive");
        }
        if self.stride == Some(0) {
            return bad("stride must be positive");
        }
        Ok(())
    }
}
