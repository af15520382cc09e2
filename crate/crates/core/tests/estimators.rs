use std::sync::Arc;

use fcmeta::estimators::{
    Estimator, EstimatorGains, EstimatorInput, EstimatorKind, FcObserverState,
};
use fcmeta::linalg::Mat;
use fcmeta::metalearn::ridge_solve;
use fcmeta::representation::{
    block_diag, predict, FeatureMatrix, FeatureVector, RepresentationParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DT: f64 = 0.01;

struct Sample {
    x: Vec<f64>,
    x_d: Vec<f64>,
    f_plus_gu: Vec<f64>,
    d: Vec<f64>,
}

fn samples(seed: u64, count: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let t = k as f64 * DT;
            let x: Vec<f64> = (0..6)
                .map(|i| (t * (1.0 + i as f64)).sin() + rng.random_range(-0.01..0.01))
                .collect();
            Sample {
                x_d: x.iter().map(|v| 0.9 * v).collect(),
                f_plus_gu: (0..3).map(|i| (0.3 * t + i as f64).cos()).collect(),
                d: (0..3).map(|i| (2.0 * t + i as f64).sin()).collect(),
                x,
            }
        })
        .collect()
}

fn run(est: &mut Estimator<f64>, data: &[Sample]) -> Vec<Vec<f64>> {
    data.iter()
        .enumerate()
        .map(|(k, s)| {
            est.step(&EstimatorInput {
                x: &s.x,
                x_d: &s.x_d,
                f_plus_gu: &s.f_plus_gu,
                d_meas: (k > 0).then_some(&s.d[..]),
                dt: DT,
            })
            .unwrap()
        })
        .collect()
}

fn representation(seed: u64) -> RepresentationParams<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RepresentationParams::init(6, 2, &[10], 4, 3.0, &mut rng).unwrap()
}

#[test]
fn predict_examples() {
    let zero_theta = block_diag(&FeatureVector(vec![1.0, 2.0]), 1);
    assert_eq!(predict(&zero_theta, &[0.0, 0.0]).unwrap(), vec![0.0]);
    assert_eq!(predict(&zero_theta, &[3.0, 4.0]).unwrap(), vec![11.0]);
}

#[test]
fn first_order_is_the_bare_observer() {
    let gains = EstimatorGains::default();
    let data = samples(1, 300);
    let mut est = Estimator::new(EstimatorKind::FirstOrder, &gains, None, 3).unwrap();
    let mut obs = FcObserverState::diagonal(3, gains.observer).unwrap();
    let got = run(&mut est, &data);
    for (s, g) in data.iter().zip(&got) {
        let want = obs.fc_step(&[0.0; 3], &s.x[3..], &s.f_plus_gu, DT).unwrap();
        assert_eq!(g, &want);
    }
}

#[test]
fn zero_representation_reduces_fc_adaptation_to_first_order() {
    let gains = EstimatorGains::default();
    let data = samples(2, 300);
    let zero = Arc::new(representation(3).zeros_like());
    let mut fc = Estimator::new(EstimatorKind::MetaAdaptFC, &gains, Some(zero), 3).unwrap();
    let mut first = Estimator::new(EstimatorKind::FirstOrder, &gains, None, 3).unwrap();
    assert_eq!(run(&mut fc, &data), run(&mut first, &data));
    assert!(fc.theta().unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn least_squares_parameters_match_ridge_over_window() {
    let gains = EstimatorGains::default();
    let (window, lambda) = (7, 0.05);
    let data = samples(4, 40);
    let rep = Arc::new(representation(5));
    let mut est = Estimator::new(
        EstimatorKind::MetaLSFC { window, lambda },
        &gains,
        Some(rep),
        3,
    )
    .unwrap();
    let mut history: Vec<(FeatureMatrix<f64>, Vec<f64>)> = Vec::new();
    for (k, s) in data.iter().enumerate() {
        est.step(&EstimatorInput {
            x: &s.x,
            x_d: &s.x_d,
            f_plus_gu: &s.f_plus_gu,
            d_meas: Some(&s.d),
            dt: DT,
        })
        .unwrap();
        let Some(phi_t) = est.last_features() else {
            continue;
        };
        history.push((phi_t.clone(), s.d.clone()));
        let recent = &history[history.len().saturating_sub(window)..];
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for (p, d) in recent {
            let dense = p.to_dense();
            for i in 0..3 {
                rows.push(dense.row(i).to_vec());
                targets.push(d[i]);
            }
        }
        let want = ridge_solve(&Mat::from_rows(&rows).unwrap(), &targets, lambda).unwrap();
        let got = est.theta().unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!(
                (a - b).abs() <= 1e-10 * b.abs().max(1.0),
                "step {k}: {a} vs {b}"
            );
        }
    }
    assert!(history.len() > window);
}
