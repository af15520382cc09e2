use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TINY: &str = r#"
seed = 3

[collect]
trajectories = 4
duration = 3.0

[meta]
epochs = 2
hidden = [8]

[benchmark]
scenarios = 1
duration = 2.0
"#;

fn fcmeta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcmeta"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = fcmeta(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn collect_train_eval_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TINY);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        ok(&["collect", "--config", &cfg, "--out", out.to_str().unwrap()]);
    }
    let data_a = tree(&a);
    assert!(data_a.len() >= 8, "expected files for both tiers");
    assert_eq!(data_a, tree(&b));

    let out = a.to_str().unwrap();
    ok(&["train", "--config", &cfg, "--out", out]);
    assert!(a.join("weights.json").exists());
    ok(&["eval", "--config", &cfg, "--out", out]);
    let first: Vec<Vec<u8>> = ["metrics.csv", "summary.json", "rollouts.csv"]
        .iter()
        .map(|f| fs::read(a.join(f)).unwrap())
        .collect();
    ok(&["eval", "--config", &cfg, "--out", out]);
    for (f, bytes) in ["metrics.csv", "summary.json", "rollouts.csv"]
        .iter()
        .zip(&first)
    {
        assert_eq!(
            &fs::read(a.join(f)).unwrap(),
            bytes,
            "{f} changed between runs"
        );
    }
    let metrics = String::from_utf8(first[0].clone()).unwrap();
    assert!(metrics.starts_with("method,metric,value,diverged,saturated\n"));
}

#[test]
fn eval_without_weights_reports_missing_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fcmeta(&["eval", "--out", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(r#""kind":"MissingWeights""#), "{err}");
}

#[test]
fn unknown_config_field_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[meta]\nepochz = 3\n");
    let out = fcmeta(&[
        "collect",
        "--config",
        &cfg,
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(r#""kind":"Config""#), "{err}");
}
