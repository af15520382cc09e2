//! Artifact writers and parsers.
//!
//! `metrics.csv` (schema 1): `method,metric,value,diverged,saturated`, two
//! rows per method with `metric` in `estimation_rmse`, `tracking_rmse`.
//! `summary.json` carries the same numbers plus `schema_version`,
//! `config_hash` and `seed`. `ablation.csv`: `M,N,tier,mode,loss`.
//! `rollouts.csv`: one row per logged sample, see [`rollouts_csv`].
//! Floats are written in shortest round-trip form.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::ablation::{AblationRow, AdaptMode};
use super::benchmark::{MethodResult, MetricsReport, RolloutTrace};
use super::config::Tier;

pub const METRICS_HEADER: &str = "method,metric,value,diverged,saturated";
pub const ABLATION_HEADER: &str = "M,N,tier,mode,loss";

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn metrics_csv(report: &MetricsReport) -> String {
    let mut s = format!("{METRICS_HEADER}\n");
    for m in &report.methods {
        for (metric, v) in [
            ("estimation_rmse", m.estimation_rmse),
            ("tracking_rmse", m.tracking_rmse),
        ] {
            s.push_str(&format!(
                "{},{metric},{v},{},{}\n",
                m.method, m.diverged, m.saturated
            ));
        }
    }
    s
}

fn bad(origin: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: origin.to_path_buf(),
        reason: reason.into(),
    }
}

fn rows<'a>(text: &'a str, header: &str, cols: usize, origin: &Path) -> Result<Vec<Vec<&'a str>>> {
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(bad(origin, format!("expected header `{header}`")));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() == cols {
                Ok(f)
            } else {
                Err(bad(origin, format!("expected {cols} columns in `{l}`")))
            }
        })
        .collect()
}

fn num<T: std::str::FromStr>(s: &str, origin: &Path) -> Result<T> {
    s.parse()
        .map_err(|_| bad(origin, format!("cannot parse `{s}`")))
}

/// Per-method results from `metrics.csv`.
pub fn parse_metrics_csv(text: &str, origin: &Path) -> Result<Vec<MethodResult>> {
    let mut out: Vec<MethodResult> = Vec::new();
    for f in rows(text, METRICS_HEADER, 5, origin)? {
        let idx = match out.iter().position(|m| m.method == f[0]) {
            Some(i) => i,
            None => {
                out.push(MethodResult {
                    method: f[0].to_string(),
                    estimation_rmse: f64::NAN,
                    tracking_rmse: f64::NAN,
                    diverged: num(f[3], origin)?,
                    saturated: num(f[4], origin)?,
                });
                out.len() - 1
            }
        };
        let v: f64 = num(f[2], origin)?;
        match f[1] {
            "estimation_rmse" => out[idx].estimation_rmse = v,
            "tracking_rmse" => out[idx].tracking_rmse = v,
            other => return Err(bad(origin, format!("unknown metric `{other}`"))),
        }
    }
    if out
        .iter()
        .any(|m| m.estimation_rmse.is_nan() || m.tracking_rmse.is_nan())
    {
        return Err(bad(origin, "method without both metrics"));
    }
    Ok(out)
}

pub fn summary_json(report: &MetricsReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn parse_summary_json(text: &str, origin: &Path) -> Result<MetricsReport> {
    serde_json::from_str(text).map_err(|e| bad(origin, e.to_string()))
}

/// `method,task,scenario,t,diverged` followed by `p_i`, `p_d_i`, `d_i`,
/// `d_hat_i` and `u_i` for every axis.
pub fn rollouts_csv(traces: &[RolloutTrace]) -> String {
    let dof = traces
        .iter()
        .find_map(|t| t.log.rows.first())
        .map_or(0, |r| r.d.len());
    let mut s = String::from("method,task,scenario,t,diverged");
    for name in ["p", "p_d", "d", "d_hat", "u"] {
        for i in 0..dof {
            s.push_str(&format!(",{name}_{i}"));
        }
    }
    s.push('\n');
    for tr in traces {
        for r in &tr.log.rows {
            s.push_str(&format!(
                "{},{},{},{},{}",
                tr.method,
                tr.task.name(),
                tr.scenario,
                r.t,
                tr.log.diverged
            ));
            let cols = [&r.x[..dof], &r.x_d[..dof], &r.d[..], &r.d_hat[..], &r.u[..]];
            for c in cols {
                for v in c {
                    s.push_str(&format!(",{v}"));
                }
            }
            s.push('\n');
        }
    }
    s
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = format!("{ABLATION_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.depth,
            r.support_len,
            r.tier.name(),
            r.mode.name(),
            r.loss
        ));
    }
    s
}

pub fn parse_ablation_csv(text: &str, origin: &Path) -> Result<Vec<AblationRow>> {
    rows(text, ABLATION_HEADER, 5, origin)?
        .into_iter()
        .map(|f| {
            let tier = Tier::ALL
                .into_iter()
                .find(|t| t.name() == f[2])
                .ok_or_else(|| bad(origin, format!("unknown tier `{}`", f[2])))?;
            let mode = [AdaptMode::Offline, AdaptMode::Online]
                .into_iter()
                .find(|m| m.name() == f[3])
                .ok_or_else(|| bad(origin, format!("unknown mode `{}`", f[3])))?;
            Ok(AblationRow {
                depth: num(f[0], origin)?,
                support_len: num(f[1], origin)?,
                tier,
                mode,
                loss: num(f[4], origin)?,
            })
        })
        .collect()
}
