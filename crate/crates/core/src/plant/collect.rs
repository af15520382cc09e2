use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{random_reference, ControllerGains, TrackingController};
use crate::disturbances::{sample_profile, RandomizationRanges, Scenario};
use crate::error::{Error, Result};
use crate::estimators::DisturbanceSensor;
use crate::metalearn::Trajectory;

use super::{rollout, NoiseConfig, PlantConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectConfig {
    pub trajectories: usize,
    /// Seconds per trajectory.
    pub duration: f64,
    pub max_speed: f64,
    pub kp: f64,
    pub kv: f64,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self {
            trajectories: 200,
            duration: 20.0,
            max_speed: 3.0,
            kp: 4.0,
            kv: 4.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CollectReport {
    pub files: Vec<PathBuf>,
    /// Indices of rollouts that diverged and were not written.
    pub skipped: Vec<usize>,
}

/// Independent sub-seed for stream `stream` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn collect_one(
    index: usize,
    ranges: &RandomizationRanges,
    plant: &PlantConfig<f64>,
    cfg: &CollectConfig,
    seed: u64,
) -> Result<Option<Trajectory>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, index as u64));
    let profile = sample_profile(&mut rng, ranges, plant.dof);
    let scenario = Scenario::fourier(profile);
    let reference = random_reference(&mut rng, plant.dof, cfg.duration, cfg.max_speed);
    let controller = TrackingController {
        gains: ControllerGains::diagonal(plant.dof, cfg.kp, cfg.kv),
        feedforward: false,
    };
    let mut sensor = DisturbanceSensor::new(&NoiseConfig::disabled(), plant.dof, 0);
    let log = rollout(
        &controller,
        None,
        &scenario,
        &reference,
        cfg.duration,
        plant,
        &mut sensor,
    )?;
    if log.diverged {
        return Ok(None);
    }
    let pad = plant.n() - plant.dof;
    Ok(Some(Trajectory {
        dt: plant.dt,
        n: plant.n(),
        m: plant.m(),
        times: log.rows.iter().map(|r| r.t).collect(),
        states: log.rows.iter().map(|r| r.x.clone()).collect(),
        inputs: log.rows.iter().map(|r| r.u.clone()).collect(),
        disturbances: log
            .rows
            .iter()
            .map(|r| {
                let mut d = vec![0.0; pad];
                d.extend_from_slice(&r.d);
                d
            })
            .collect(),
        scenario: Some(serde_json::to_string(&scenario).expect("scenario serializes")),
    }))
}

/// Runs the randomized collection rollouts in memory. Diverged rollouts are
/// dropped and their indices returned.
pub fn collect_trajectories(
    ranges: &RandomizationRanges,
    plant: &PlantConfig<f64>,
    cfg: &CollectConfig,
    seed: u64,
) -> Result<(Vec<Trajectory>, Vec<usize>)> {
    if cfg.trajectories == 0 {
        return Err(Error::BadParams(
            "num_trajectories must be at least 1".into(),
        ));
    }
    ranges.validate()?;
    plant.validate()?;
    let results: Vec<Result<Option<Trajectory>>> = (0..cfg.trajectories)
        .into_par_iter()
        .map(|i| collect_one(i, ranges, plant, cfg, seed))
        .collect();
    let mut trajectories = Vec::new();
    let mut skipped = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r? {
            Some(t) => trajectories.push(t),
            None => skipped.push(i),
        }
    }
    Ok((trajectories, skipped))
}

/// Collects trajectories and writes `traj_NNNN.csv` files into `dir`.
pub fn collect_dataset(
    ranges: &RandomizationRanges,
    plant: &PlantConfig<f64>,
    cfg: &CollectConfig,
    seed: u64,
    dir: &Path,
) -> Result<CollectReport> {
    let (trajectories, skipped) = collect_trajectories(ranges, plant, cfg, seed)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::with_capacity(trajectories.len());
    for (i, t) in trajectories.iter().enumerate() {
        let path = dir.join(format!("traj_{i:04}.csv"));
        t.write(&path)?;
        files.push(path);
    }
    Ok(CollectReport { files, skipped })
}
