use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use fcmeta::harness::{
    ablation_csv, metrics_csv, rollouts_csv, run_ablation, run_benchmark, summary_json, write_text,
    ExperimentConfig, Tier,
};
use fcmeta::metalearn::{read_dataset_dir, slice_dataset, train};
use fcmeta::plant::{collect_dataset, derive_seed};
use fcmeta::representation::weights;
use fcmeta::Result;

#[derive(Parser)]
#[command(
    name = "fcmeta",
    version,
    about = "Meta-learned disturbance estimation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out randomized disturbance scenarios and write datasets per tier.
    Collect(Common),
    /// Meta-train the representation on the meta-learn tier.
    Train(Common),
    /// Run the estimator benchmark and export metrics.
    Eval(Common),
    /// Sweep embedding depth and support length.
    Ablate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
            cfg.meta.seed = s;
        }
        Ok(cfg)
    }
}

fn tier_dir(cfg: &ExperimentConfig, out: &Path, tier: Tier) -> PathBuf {
    cfg.data_dir(out).join(tier.name())
}

fn collect(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    for (i, tier) in Tier::ALL.into_iter().enumerate() {
        let dir = tier_dir(cfg, out, tier);
        let report = collect_dataset(
            cfg.disturbances.get(tier),
            &cfg.plant,
            &cfg.collect,
            derive_seed(cfg.seed, i as u64),
            &dir,
        )?;
        eprintln!(
            "{}: wrote {} trajectories to {} ({} diverged)",
            tier.name(),
            report.files.len(),
            dir.display(),
            report.skipped.len()
        );
    }
    Ok(())
}

fn train_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let trajectories = read_dataset_dir(&tier_dir(cfg, out, Tier::MetaLearn))?;
    let mut segments = Vec::new();
    for t in &trajectories {
        segments.extend(slice_dataset::<f64>(t, &cfg.meta)?);
    }
    let (params, report) = train(&segments, &cfg.meta)?;
    let path = cfg.weights_path(out);
    write_text(&path, &weights::to_string(&params))?;
    write_text(&out.join("training_curve.csv"), &report.curve_csv())?;
    eprintln!(
        "trained on {} segments; best validation loss {:.6e} at epoch {}; weights in {}",
        report.train_segments,
        report.best_val_loss,
        report.best_epoch,
        path.display()
    );
    Ok(())
}

fn eval(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let params = weights::load::<f64>(&cfg.weights_path(out))?;
    let result = run_benchmark(cfg, Some(Arc::new(params)))?;
    write_text(&out.join("metrics.csv"), &metrics_csv(&result.report))?;
    write_text(&out.join("summary.json"), &summary_json(&result.report))?;
    write_text(&out.join("rollouts.csv"), &rollouts_csv(&result.traces))?;
    for m in &result.report.methods {
        eprintln!(
            "{:<12} estimation {:.4} m/s^2  tracking {:.4} m{}",
            m.method,
            m.estimation_rmse,
            m.tracking_rmse,
            if m.diverged { "  (diverged)" } else { "" }
        );
    }
    Ok(())
}

fn ablate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let ml = read_dataset_dir(&tier_dir(cfg, out, Tier::MetaLearn))?;
    let sh = read_dataset_dir(&tier_dir(cfg, out, Tier::Shifted))?;
    let rows = run_ablation(cfg, &ml, &sh)?;
    write_text(&out.join("ablation.csv"), &ablation_csv(&rows))
}

fn run(cli: Cli) -> Result<()> {
    let (common, f): (&Common, fn(&ExperimentConfig, &Path) -> Result<()>) = match &cli.command {
        Command::Collect(c) => (c, collect),
        Command::Train(c) => (c, train_cmd),
        Command::Eval(c) => (c, eval),
        Command::Ablate(c) => (c, ablate),
    };
    let cfg = common.load()?;
    f(&cfg, &common.out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "kind": e.kind(), "message": e.to_string() });
            eprintln!("error: {line}");
            ExitCode::FAILURE
        }
    }
}
