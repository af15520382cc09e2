//! Versioned text format for trained representations.
//!
//! JSON document:
//!
//! ```text
//! {
//!   "format": "fcmeta-weights/1",
//!   "state_dim": 6, "depth": 3, "features": 8, "bound": 5.0,
//!   "activation": "tanh",
//!   "normalization": { "mean": [...], "scale": [...] },
//!   "layers": [ { "rows": 32, "cols": 24, "weights": [row-major], "bias": [...] }, ... ]
//! }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Real;

use super::network::{Dense, Normalization, RepresentationParams};

pub const WEIGHTS_FORMAT: &str = "fcmeta-weights/1";

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct NormDoc {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightsDoc {
    format: String,
    state_dim: usize,
    depth: usize,
    features: usize,
    bound: f64,
    activation: String,
    normalization: NormDoc,
    layers: Vec<LayerDoc>,
}

pub fn to_string<T: Real>(params: &RepresentationParams<T>) -> String {
    let f = |xs: &[T]| xs.iter().map(|v| v.as_f64()).collect::<Vec<f64>>();
    let doc = WeightsDoc {
        format: WEIGHTS_FORMAT.to_string(),
        state_dim: params.state_dim,
        depth: params.depth,
        features: params.features(),
        bound: params.bound.as_f64(),
        activation: "tanh".into(),
        normalization: NormDoc {
            mean: f(&params.normalization.mean),
            scale: f(&params.normalization.scale),
        },
        layers: params
            .layers
            .iter()
            .map(|l| LayerDoc {
                rows: l.weights.rows(),
                cols: l.weights.cols(),
                weights: f(l.weights.as_slice()),
                bias: f(&l.bias),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("weights serialize")
}

pub fn from_str<T: Real>(text: &str, origin: &Path) -> Result<RepresentationParams<T>> {
    let bad = |reason: String| Error::Format {
        path: origin.to_path_buf(),
        reason,
    };
    let doc: WeightsDoc = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    if doc.format != WEIGHTS_FORMAT {
        return Err(bad(format!("unsupported format tag {:?}", doc.format)));
    }
    if doc.activation != "tanh" {
        return Err(bad(format!("unsupported activation {:?}", doc.activation)));
    }
    let c = |xs: Vec<f64>| xs.into_iter().map(T::lit).collect::<Vec<T>>();
    let layers = doc
        .layers
        .into_iter()
        .map(|l| {
            Ok(Dense {
                weights: Mat::from_row_major(l.rows, l.cols, c(l.weights))?,
                bias: c(l.bias),
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| bad(e.to_string()))?;
    let params = RepresentationParams {
        state_dim: doc.state_dim,
        depth: doc.depth,
        bound: T::lit(doc.bound),
        normalization: Normalization {
            mean: c(doc.normalization.mean),
            scale: c(doc.normalization.scale),
        },
        layers,
    };
    params.validate().map_err(|e| bad(e.to_string()))?;
    if params.features() != doc.features {
        return Err(bad(
            "declared feature count disagrees with output layer".into()
        ));
    }
    Ok(params)
}

pub fn save<T: Real>(params: &RepresentationParams<T>, path: &Path) -> Result<()> {
    fs::write(path, to_string(params)).map_err(|e| Error::io(path, e))
}

pub fn load<T: Real>(path: &Path) -> Result<RepresentationParams<T>> {
    if !path.exists() {
        return Err(Error::MissingWeights(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weights_round_trip_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut p = RepresentationParams::<f64>::init(6, 3, &[32, 32], 8, 5.0, &mut rng).unwrap();
        p.normalization.mean[3] = 0.125;
        p.normalization.scale[5] = 3.5;
        let text = to_string(&p);
        let q: RepresentationParams<f64> = from_str(&text, Path::new("mem")).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn rejects_unknown_format_and_missing_file() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = RepresentationParams::<f64>::init(1, 0, &[2], 1, 1.0, &mut rng).unwrap();
        let text = to_string(&p).replace(WEIGHTS_FORMAT, "fcmeta-weights/0");
        assert!(matches!(
            from_str::<f64>(&text, Path::new("mem")),
            Err(Error::Format { .. })
        ));
        assert!(matches!(
            load::<f64>(Path::new("/nonexistent/weights.json")),
            Err(Error::MissingWeights(_))
        ));
    }
}
