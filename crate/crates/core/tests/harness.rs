use std::path::Path;
use std::sync::Arc;

use fcmeta::disturbances::dataset_stats;
use fcmeta::harness::{
    ablation_csv, metrics_csv, parse_ablation_csv, parse_metrics_csv, run_ablation, run_benchmark,
    ExperimentConfig, Tier, NO_ESTIMATOR,
};
use fcmeta::plant::{collect_trajectories, CollectConfig};
use fcmeta::representation::RepresentationParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.benchmark.scenarios = 1;
    cfg.benchmark.duration = 2.0;
    cfg
}

fn random_representation(cfg: &ExperimentConfig) -> Arc<RepresentationParams<f64>> {
    let m = &cfg.meta;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    Arc::new(
        RepresentationParams::init(6, m.depth, &m.hidden, m.features, m.bound, &mut rng).unwrap(),
    )
}

#[test]
fn hash_tracks_every_perturbed_field() {
    let base = ExperimentConfig::default();
    let h = base.hash();
    assert_eq!(h, base.clone().hash());
    assert_eq!(
        h,
        ExperimentConfig::from_toml(&base.to_toml()).unwrap().hash()
    );
    let edits: Vec<fn(&mut ExperimentConfig)> = vec![
        |c| c.seed += 1,
        |c| c.plant.dt = 0.005,
        |c| c.noise.enabled = true,
        |c| c.collect.trajectories += 1,
        |c| c.meta.lambda2 *= 2.0,
        |c| c.controller.kp += 0.5,
        |c| c.estimator.gains.observer += 1.0,
        |c| c.benchmark.fourier_scale = 0.5,
        |c| c.benchmark.drag[2] = 0.0,
        |c| c.ablation.epochs += 1,
    ];
    for (i, edit) in edits.iter().enumerate() {
        let mut c = base.clone();
        edit(&mut c);
        assert_ne!(c.hash(), h, "edit {i} left the hash unchanged");
    }
}

#[test]
fn report_lists_six_estimators_and_the_baseline() {
    let cfg = small_config();
    let out = run_benchmark(&cfg, Some(random_representation(&cfg))).unwrap();
    let names: Vec<&str> = out
        .report
        .methods
        .iter()
        .map(|m| m.method.as_str())
        .collect();
    for want in [
        "FirstOrder",
        "L1Adapt",
        "VanillaNN",
        "MetaAdapt",
        "MetaAdaptFC",
        "MetaLSFC",
        NO_ESTIMATOR,
    ] {
        assert!(names.contains(&want), "{want} missing from {names:?}");
    }
    assert_eq!(names.len(), 7);
    assert_eq!(out.report.config_hash, cfg.hash());
    let text = metrics_csv(&out.report);
    assert_eq!(text.lines().count(), 1 + 2 * 7);
    assert_eq!(
        parse_metrics_csv(&text, Path::new("m")).unwrap(),
        out.report.methods
    );
}

#[test]
fn meta_methods_need_weights() {
    let err = run_benchmark(&small_config(), None).unwrap_err();
    assert_eq!(err.kind(), "MissingWeights");
}

#[test]
fn shifted_tier_is_harsher() {
    let cfg = ExperimentConfig::default();
    let cc = CollectConfig {
        trajectories: 20,
        duration: 5.0,
        ..cfg.collect.clone()
    };
    let stats = |tier: Tier| {
        let (ts, _) = collect_trajectories(cfg.disturbances.get(tier), &cfg.plant, &cc, 3).unwrap();
        let d: Vec<Vec<f64>> = ts.iter().flat_map(|t| t.acting_disturbances()).collect();
        dataset_stats(&d, cfg.plant.dt).unwrap()
    };
    let (ml, sh) = (stats(Tier::MetaLearn), stats(Tier::Shifted));
    assert!(
        sh.max_rate > ml.max_rate,
        "{} vs {}",
        sh.max_rate,
        ml.max_rate
    );
    assert!(sh.rms > ml.rms, "{} vs {}", sh.rms, ml.rms);
}

#[test]
fn ablation_covers_the_grid() {
    let mut cfg = ExperimentConfig::default();
    cfg.ablation.epochs = 1;
    cfg.meta.hidden = vec![8];
    let cc = CollectConfig {
        trajectories: 5,
        duration: 2.0,
        ..cfg.collect.clone()
    };
    let (ml, _) = collect_trajectories(&cfg.disturbances.meta_learn, &cfg.plant, &cc, 1).unwrap();
    let (sh, _) = collect_trajectories(&cfg.disturbances.shifted, &cfg.plant, &cc, 2).unwrap();
    let rows = run_ablation(&cfg, &ml, &sh).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3 * 2);
    assert!(rows.iter().all(|r| r.loss.is_finite() && r.loss >= 0.0));
    assert_eq!(
        parse_ablation_csv(&ablation_csv(&rows), Path::new("a")).unwrap(),
        rows
    );
    assert!(run_ablation(&cfg, &ml[..1], &sh).is_err());
}
