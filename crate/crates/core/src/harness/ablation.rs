use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{AdaptiveState, ConcurrentBuffer};
use crate::linalg::Mat;
use crate::metalearn::{pair_loss, slice_dataset, train, MetaConfig, Trajectory};
use crate::representation::{block_diag, embed, RepresentationParams};

use super::config::{ExperimentConfig, Tier};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptMode {
    /// Closed-form ridge fit on the support window, scored on the query.
    Offline,
    /// Adaptive law over a sliding window of the last `N` samples.
    Online,
}

impl AdaptMode {
    pub fn name(self) -> &'static str {
        match self {
            AdaptMode::Offline => "offline",
            AdaptMode::Online => "online",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub depth: usize,
    pub support_len: usize,
    pub tier: Tier,
    pub mode: AdaptMode,
    /// Mean squared prediction error per disturbance component.
    pub loss: f64,
}

/// Mean squared query error after a ridge fit on each support window.
pub fn offline_loss(
    params: &RepresentationParams<f64>,
    trajectories: &[Trajectory],
    meta: &MetaConfig,
) -> Result<f64> {
    let mut pairs = Vec::new();
    for t in trajectories {
        for s in slice_dataset::<f64>(t, meta)? {
            pairs.push(s.pairs()?);
        }
    }
    if pairs.is_empty() {
        return Err(Error::Empty);
    }
    let dof = pairs[0].query[0].1.len() as f64;
    let losses = pairs
        .par_iter()
        .map(|p| pair_loss(params, p, 0.0, meta.lambda2).map(|l| 2.0 * l.prediction / dof))
        .collect::<Result<Vec<_>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Mean squared one-step-ahead error of the adaptive law (no tracking
/// term) whose buffer slides over the last `support_len` samples.
///
/// At every sample the model predicts before the true disturbance enters
/// the buffer.
pub fn online_loss(
    params: &RepresentationParams<f64>,
    trajectories: &[Trajectory],
    support_len: usize,
    gain: f64,
    theta_max: f64,
) -> Result<f64> {
    let per_traj = trajectories
        .par_iter()
        .map(|t| online_one(params, t, support_len, gain, theta_max))
        .collect::<Result<Vec<_>>>()?;
    let (sum, count) = per_traj
        .iter()
        .fold((0.0, 0usize), |(s, c), (ts, tc)| (s + ts, c + tc));
    if count == 0 {
        return Err(Error::Empty);
    }
    Ok(sum / count as f64)
}

fn online_one(
    params: &RepresentationParams<f64>,
    traj: &Trajectory,
    support_len: usize,
    gain: f64,
    theta_max: f64,
) -> Result<(f64, usize)> {
    let targets = traj.acting_disturbances();
    let depth = params.depth;
    let dof = targets.first().map_or(0, Vec::len);
    let nk = dof * params.features();
    // Capacity N + 1 with this age limit leaves exactly the N newest samples
    // in the buffer while the law integrates.
    let buffer = ConcurrentBuffer::new(support_len + 1, Some((support_len as f64 + 0.5) * traj.dt));
    let mut law = AdaptiveState::new(
        vec![0.0; nk],
        Mat::scaled_identity(nk, gain),
        0.0,
        buffer,
        theta_max,
    )?;
    let zeros = vec![0.0; dof];
    let (mut sum, mut count) = (0.0, 0);
    for k in depth..traj.len() {
        let z = embed(&traj.states[k - depth..=k], depth, params.state_dim)?;
        let phi_t = block_diag(&params.featurize(&z)?, dof);
        let pred = phi_t.mul_vec(&law.theta)?;
        sum += pred
            .iter()
            .zip(&targets[k])
            .map(|(p, d)| (p - d).powi(2))
            .sum::<f64>();
        count += dof;
        law.adapt_step(&phi_t, Some(&targets[k]), &zeros, traj.dt)?;
    }
    Ok((sum, count))
}

/// For each tier, trains one representation per `(M, N)` grid cell on the
/// leading trajectories of that tier and scores it on the held-out
/// remainder in both adaptation modes. Every cell gets the same budget.
pub fn run_ablation(
    cfg: &ExperimentConfig,
    meta_learn: &[Trajectory],
    shifted: &[Trajectory],
) -> Result<Vec<AblationRow>> {
    cfg.validate()?;
    let a = &cfg.ablation;
    let mut rows = Vec::new();
    for tier in Tier::ALL {
        let data = match tier {
            Tier::MetaLearn => meta_learn,
            Tier::Shifted => shifted,
        };
        if data.len() < 2 {
            return Err(Error::TooShort {
                needed: 2,
                available: data.len(),
            });
        }
        let held =
            ((a.holdout_fraction * data.len() as f64).round() as usize).clamp(1, data.len() - 1);
        let (train_set, holdout) = data.split_at(data.len() - held);
        for &depth in &a.depths {
            for &support_len in &a.support_lens {
                let meta = MetaConfig {
                    depth,
                    support_len,
                    epochs: a.epochs,
                    ..cfg.meta.clone()
                };
                let mut segments = Vec::new();
                for t in train_set {
                    segments.extend(slice_dataset::<f64>(t, &meta)?);
                }
                let (params, _) = train(&segments, &meta)?;
                let off = offline_loss(&params, holdout, &meta)?;
                let on = online_loss(
                    &params,
                    holdout,
                    support_len,
                    a.online_gain,
                    cfg.estimator.gains.theta_max,
                )?;
                for (mode, loss) in [(AdaptMode::Offline, off), (AdaptMode::Online, on)] {
                    rows.push(AblationRow {
                        depth,
                        support_len,
                        tier,
                        mode,
                        loss,
                    });
                }
            }
        }
    }
    Ok(rows)
}
