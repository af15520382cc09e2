use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::representation::{
    difference_coordinates, NetworkGrad, Normalization, RepresentationParams,
};
use crate::scalar::Real;

use super::adam::OptimizerState;
use super::dataset::{SegmentPairs, TrajectorySegment};
use super::objective::{pair_gradient, pair_loss};
use super::MetaConfig;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingReport {
    pub curve: Vec<EpochRecord>,
    pub updates: usize,
    /// Epoch whose parameters were kept (0 = initialization).
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub train_segments: usize,
    pub val_segments: usize,
}

impl TrainingReport {
    /// `epoch,train_loss,val_loss` CSV.
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss\n");
        for r in &self.curve {
            s.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.val_loss));
        }
        s
    }
}

fn mean_loss<T: Real>(
    params: &RepresentationParams<T>,
    pairs: &[SegmentPairs<T>],
    l1: T,
    l2: T,
) -> Result<f64> {
    let losses = pairs
        .par_iter()
        .map(|p| pair_loss(params, p, l1, l2).map(|l| l.total(l1).as_f64()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

/// Meta-trains the representation with Adam on shuffled mini-batches of
/// segments, holding out a validation split and keeping the parameters with
/// the lowest validation loss.
///
/// Input standardization is fit on the training windows and then frozen.
pub fn train<T: Real>(
    segments: &[TrajectorySegment<T>],
    cfg: &MetaConfig,
) -> Result<(RepresentationParams<T>, TrainingReport)> {
    cfg.validate()?;
    if segments.is_empty() {
        return Err(Error::TooShort {
            needed: 1,
            available: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.shuffle(&mut rng);
    let n_val = if segments.len() >= 2 {
        ((cfg.val_fraction * segments.len() as f64).round() as usize).min(segments.len() - 1)
    } else {
        0
    };
    let (val_idx, train_idx) = order.split_at(n_val);
    let all_pairs = segments
        .iter()
        .map(|s| s.pairs())
        .collect::<Result<Vec<_>>>()?;
    let train_pairs: Vec<SegmentPairs<T>> =
        train_idx.iter().map(|&i| all_pairs[i].clone()).collect();
    let val_pairs: Vec<SegmentPairs<T>> = if val_idx.is_empty() {
        train_pairs.clone()
    } else {
        val_idx.iter().map(|&i| all_pairs[i].clone()).collect()
    };
    drop(all_pairs);

    let state_dim = segments[0].states[0].len();
    let mut params = RepresentationParams::init(
        state_dim,
        cfg.depth,
        &cfg.hidden,
        cfg.features,
        T::lit(cfg.bound),
        &mut rng,
    )?;
    let windows = train_pairs
        .iter()
        .flat_map(|p| p.support.iter().chain(&p.query))
        .map(|(z, _)| difference_coordinates(z.values(), state_dim))
        .collect::<Vec<_>>();
    params.normalization = Normalization::fit(
        params.input_dim(),
        windows.iter().map(Vec::as_slice),
        T::lit(cfg.norm_floor),
    )?;

    let (l1, l2) = (T::lit(cfg.lambda1), T::lit(cfg.lambda2));
    let initial = mean_loss(&params, &val_pairs, l1, l2)?;
    let mut report = TrainingReport {
        best_val_loss: initial,
        train_segments: train_pairs.len(),
        val_segments: val_idx.len(),
        ..Default::default()
    };
    let mut best = params.clone();
    let mut flat = params.flatten();
    let mut opt = OptimizerState::adam(flat.len(), T::lit(cfg.learning_rate));
    let mut batch_order: Vec<usize> = (0..train_pairs.len()).collect();

    for epoch in 1..=cfg.epochs {
        batch_order.shuffle(&mut rng);
        let mut train_sum = 0.0;
        for batch in batch_order.chunks(cfg.batch_size) {
            let results = batch
                .par_iter()
                .map(|&i| pair_gradient(&params, &train_pairs[i], l1, l2))
                .collect::<Result<Vec<_>>>()?;
            let mut total = NetworkGrad::zeros_for(&params);
            for (loss, g) in &results {
                train_sum += loss.as_f64();
                total.add_assign(g);
            }
            total.scale(T::one() / T::from_usize_lossy(batch.len()));
            opt.update(&mut flat, &total.flatten())?;
            params.set_flat(&flat)?;
            report.updates += 1;
        }
        let train_loss = train_sum / train_pairs.len() as f64;
        let val_loss = mean_loss(&params, &val_pairs, l1, l2)?;
        report.curve.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if !val_loss.is_finite() || val_loss > 10.0 * initial {
            return Err(Error::DivergenceDetected {
                epoch,
                val_loss,
                initial,
            });
        }
        if val_loss < report.best_val_loss {
            report.best_val_loss = val_loss;
            report.best_epoch = epoch;
            best = params.clone();
        } else if epoch - report.best_epoch >= cfg.patience {
            report.stopped_early = true;
            break;
        }
    }
    Ok((best, report))
}
