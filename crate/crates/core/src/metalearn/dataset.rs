//! Trajectory files and their slicing into support/query segments.
//!
//! File layout (UTF-8 text):
//!
//! ```text
//! # format=fcmeta-dataset/1 n=6 m=3 dt=0.01
//! # scenario={...}            (optional, JSON on one line)
//! t,x0,...,x5,u0,u1,u2,d0,...,d5
//! 0,...
//! ```
//!
//! `d` holds the ground-truth disturbance padded to the state dimension.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::representation::{embed, EmbeddingWindow};
use crate::scalar::Real;

use super::MetaConfig;

pub const DATASET_FORMAT: &str = "fcmeta-dataset/1";

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub n: usize,
    pub m: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    /// Ground-truth disturbance, `n` columns.
    pub disturbances: Vec<Vec<f64>>,
    /// Scenario that generated the data, as JSON.
    pub scenario: Option<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Disturbance rows restricted to the last `m` (actuated) columns.
    pub fn acting_disturbances(&self) -> Vec<Vec<f64>> {
        self.disturbances
            .iter()
            .map(|d| d[self.n - self.m..].to_vec())
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "# format={DATASET_FORMAT} n={} m={} dt={}",
            self.n, self.m, self.dt
        )
        .unwrap();
        if let Some(sc) = &self.scenario {
            writeln!(s, "# scenario={sc}").unwrap();
        }
        let mut header = vec!["t".to_string()];
        header.extend((0..self.n).map(|i| format!("x{i}")));
        header.extend((0..self.m).map(|i| format!("u{i}")));
        header.extend((0..self.n).map(|i| format!("d{i}")));
        s.push_str(&header.join(","));
        s.push('\n');
        for k in 0..self.len() {
            let mut first = true;
            let cells = std::iter::once(&self.times[k])
                .chain(&self.states[k])
                .chain(&self.inputs[k])
                .chain(&self.disturbances[k]);
            for v in cells {
                if !first {
                    s.push(',');
                }
                first = false;
                // shortest representation that round-trips
                write!(s, "{v}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            path: origin.to_path_buf(),
            reason,
        };
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let head = head
            .strip_prefix("# ")
            .ok_or_else(|| bad("missing metadata line".into()))?;
        let (mut n, mut m, mut dt, mut fmt) = (None, None, None, None);
        for kv in head.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| bad(format!("bad metadata {kv:?}")))?;
            match k {
                "format" => fmt = Some(v.to_string()),
                "n" => n = v.parse::<usize>().ok(),
                "m" => m = v.parse::<usize>().ok(),
                "dt" => dt = v.parse::<f64>().ok(),
                _ => {}
            }
        }
        if fmt.as_deref() != Some(DATASET_FORMAT) {
            return Err(bad(format!("unsupported format {fmt:?}")));
        }
        let (n, m, dt) = match (n, m, dt) {
            (Some(n), Some(m), Some(dt)) if m <= n && dt > 0.0 => (n, m, dt),
            _ => return Err(bad("metadata needs n, m <= n and dt > 0".into())),
        };
        let mut scenario = None;
        let mut header = None;
        for line in lines.by_ref() {
            if let Some(sc) = line.strip_prefix("# scenario=") {
                scenario = Some(sc.to_string());
            } else if line.starts_with('#') {
                continue;
            } else {
                header = Some(line);
                break;
            }
        }
        let width = 1 + 2 * n + m;
        let header = header.ok_or_else(|| bad("missing column header".into()))?;
        if header.split(',').count() != width {
            return Err(bad(format!("expected {width} columns in header")));
        }
        let mut t = Trajectory {
            dt,
            n,
            m,
            times: Vec::new(),
            states: Vec::new(),
            inputs: Vec::new(),
            disturbances: Vec::new(),
            scenario,
        };
        for (row, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let vals = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| bad(format!("row {row}: {e}")))?;
            if vals.len() != width {
                return Err(bad(format!(
                    "row {row} has {} columns, expected {width}",
                    vals.len()
                )));
            }
            t.times.push(vals[0]);
            t.states.push(vals[1..1 + n].to_vec());
            t.inputs.push(vals[1 + n..1 + n + m].to_vec());
            t.disturbances.push(vals[1 + n + m..].to_vec());
        }
        Ok(t)
    }
}

/// Reads every `*.csv` trajectory in `dir`, in file-name order.
pub fn read_dataset_dir(dir: &Path) -> Result<Vec<Trajectory>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Format {
            path: dir.to_path_buf(),
            reason: "no trajectory files".into(),
        });
    }
    paths.iter().map(|p| Trajectory::read(p)).collect()
}

/// `M + N + H` consecutive samples of states and disturbance targets.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySegment<T> {
    pub states: Vec<Vec<T>>,
    pub targets: Vec<Vec<T>>,
    pub depth: usize,
    pub support_len: usize,
    pub query_len: usize,
}

/// Embedded windows with their targets, split into support and query.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentPairs<T> {
    pub support: Vec<(EmbeddingWindow<T>, Vec<T>)>,
    pub query: Vec<(EmbeddingWindow<T>, Vec<T>)>,
}

impl<T: Real> TrajectorySegment<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    fn pair(&self, idx: usize) -> Result<(EmbeddingWindow<T>, Vec<T>)> {
        let hist = &self.states[idx - self.depth..=idx];
        let z = embed(hist, self.depth, self.states[0].len())?;
        Ok((z, self.targets[idx].clone()))
    }

    /// Support uses samples `M .. M+N`, query `M+N .. M+N+H`, each paired
    /// with the window ending at that sample.
    pub fn pairs(&self) -> Result<SegmentPairs<T>> {
        let (m, n, h) = (self.depth, self.support_len, self.query_len);
        if self.len() < m + n + h || self.targets.len() != self.len() {
            return Err(Error::TooShort {
                needed: m + n + h,
                available: self.len(),
            });
        }
        Ok(SegmentPairs {
            support: (m..m + n).map(|i| self.pair(i)).collect::<Result<_>>()?,
            query: (m + n..m + n + h)
                .map(|i| self.pair(i))
                .collect::<Result<_>>()?,
        })
    }
}

/// Cuts `(states, targets)` into segments of length `M + N + H` at the
/// configured stride (non-overlapping by default).
pub fn slice_segments<T: Real>(
    states: &[Vec<T>],
    targets: &[Vec<T>],
    cfg: &MetaConfig,
) -> Result<Vec<TrajectorySegment<T>>> {
    if states.len() != targets.len() {
        return Err(Error::dims("states and targets differ in length"));
    }
    let len = cfg.depth + cfg.support_len + cfg.query_len;
    if states.len() < len {
        return Err(Error::TooShort {
            needed: len,
            available: states.len(),
        });
    }
    let stride = cfg.stride.unwrap_or(len).max(1);
    Ok((0..=states.len() - len)
        .step_by(stride)
        .map(|s| TrajectorySegment {
            states: states[s..s + len].to_vec(),
            targets: targets[s..s + len].to_vec(),
            depth: cfg.depth,
            support_len: cfg.support_len,
            query_len: cfg.query_len,
        })
        .collect())
}

/// Segments of one trajectory, targets being the actuated disturbance rows.
pub fn slice_dataset<T: Real>(
    traj: &Trajectory,
    cfg: &MetaConfig,
) -> Result<Vec<TrajectorySegment<T>>> {
    let conv = |rows: &[Vec<f64>]| -> Vec<Vec<T>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| T::lit(v)).collect())
            .collect()
    };
    slice_segments(&conv(&traj.states), &conv(&traj.acting_disturbances()), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(len: usize) -> Trajectory {
        Trajectory {
            dt: 0.01,
            n: 2,
            m: 1,
            times: (0..len).map(|k| k as f64 * 0.01).collect(),
            states: (0..len).map(|k| vec![k as f64, 0.1 * k as f64]).collect(),
            inputs: (0..len).map(|k| vec![-(k as f64) / 3.0]).collect(),
            disturbances: (0..len).map(|k| vec![0.0, (k as f64).sin()]).collect(),
            scenario: Some("{\"kind\":\"fourier\"}".into()),
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let t = traj(37);
        let back = Trajectory::from_text(&t.to_text(), Path::new("mem")).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn malformed_files_rejected() {
        let text = traj(3).to_text().replace("fcmeta-dataset/1", "other/1");
        assert!(matches!(
            Trajectory::from_text(&text, Path::new("mem")),
            Err(Error::Format { .. })
        ));
        let mut text = traj(3).to_text();
        text.push_str("1,2\n");
        assert!(Trajectory::from_text(&text, Path::new("mem")).is_err());
    }

    #[test]
    fn segment_counts() {
        let cfg = MetaConfig::default();
        let l = cfg.depth + cfg.support_len + cfg.query_len;
        assert_eq!(
            slice_dataset::<f64>(&traj(2001), &cfg).unwrap().len(),
            2001 / l
        );
        let exact = slice_dataset::<f64>(&traj(l), &cfg).unwrap();
        assert_eq!(exact.len(), 1);
        assert!(matches!(
            slice_dataset::<f64>(&traj(l - 1), &cfg),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn pairs_align_windows_and_targets() {
        let cfg = MetaConfig {
            depth: 2,
            support_len: 3,
            query_len: 2,
            ..MetaConfig::default()
        };
        let seg = &slice_dataset::<f64>(&traj(7), &cfg).unwrap()[0];
        let p = seg.pairs().unwrap();
        assert_eq!(p.support.len(), 3);
        assert_eq!(p.query.len(), 2);
        let (z, d) = &p.support[0];
        assert_eq!(z.state(0), &[2.0, 0.2]);
        assert_eq!(z.state(2), &[0.0, 0.0]);
        assert_eq!(d, &vec![2f64.sin()]);
        assert_eq!(p.query[1].1, vec![6f64.sin()]);
    }
}
