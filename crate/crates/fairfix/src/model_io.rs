//! Model file format: a JSON document with the input width and one record
//! per dense layer, weights flattened row-major.
//!
//! ```json
//! {
//!   "input_dim": 2,
//!   "layers": [
//!     {"in": 2, "out": 2, "activation": "tanh", "weights": [...], "biases": [...]},
//!     {"in": 2, "out": 2, "activation": "softmax", "weights": [...], "biases": [...]}
//!   ]
//! }
//! ```
//!
//! Floats are written in their shortest round-trippable decimal form, so a
//! load -> save -> load cycle preserves every bit.

use std::path::Path;

use fairfix_core::net::{Activation, DenseLayer, Matrix, Model};
use serde::{Deserialize, Serialize};

use crate::{IoError, IoResult};

#[derive(Serialize, Deserialize)]
struct ModelFile {
    input_dim: usize,
    layers: Vec<LayerRecord>,
}

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    #[serde(rename = "in")]
    in_dim: usize,
    #[serde(rename = "out")]
    out_dim: usize,
    activation: String,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

fn file_error(path: &Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

fn format_error(path: &Path, detail: impl Into<String>) -> IoError {
    IoError::Format {
        path: path.display().to_string(),
        detail: detail.into(),
    }
}

pub fn load_model(path: &Path) -> IoResult<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| file_error(path, e))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| format_error(path, e.to_string()))?;
    let mut layers = Vec::with_capacity(file.layers.len());
    for (index, record) in file.layers.into_iter().enumerate() {
        let activation = Activation::parse(&record.activation).ok_or_else(|| {
            format_error(
                path,
                format!("layer {index}: unknown activation '{}'", record.activation),
            )
        })?;
        let weights = Matrix::from_flat(record.in_dim, record.out_dim, record.weights)
            .map_err(|e| format_error(path, format!("layer {index}: {e}")))?;
        let layer = DenseLayer::new(weights, record.biases, activation)
            .map_err(|e| format_error(path, format!("layer {index}: {e}")))?;
        layers.push(layer);
    }
    Model::new(file.input_dim, layers).map_err(|e| format_error(path, e.to_string()))
}

pub fn save_model(model: &Model, path: &Path) -> IoResult<()> {
    let file = ModelFile {
        input_dim: model.input_dim(),
        layers: model
            .layers()
            .iter()
            .map(|layer| LayerRecord {
                in_dim: layer.in_dim(),
                out_dim: layer.out_dim(),
                activation: layer.activation().name().to_string(),
                weights: layer.weights().as_slice().to_vec(),
                biases: layer.biases().to_vec(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&file).expect("model serialization cannot fail");
    std::fs::write(path, json).map_err(|e| file_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fairfix_core::net::{Activation, DenseLayer, Matrix, Model};

    fn awkward_model() -> Model {
        // values chosen to exercise shortest-representation serialization
        let hidden = DenseLayer::new(
            Matrix::from_rows(&[&[0.1 + 0.2, -1.0 / 3.0], &[f64::MIN_POSITIVE, 1e300]]),
            vec![0.1, -0.30000000000000004],
            Activation::Relu,
        )
        .unwrap();
        let head = DenseLayer::new(
            Matrix::from_rows(&[&[2.0_f64.sqrt(), -0.0], &[1.0, 3.0e-45]]),
            vec![0.0, 7.2],
            Activation::Softmax,
        )
        .unwrap();
        Model::new(2, vec![hidden, head]).unwrap()
    }

    #[test]
    fn round_trip_preserves_every_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = awkward_model();
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        for (a, b) in model.layers().iter().zip(loaded.layers()) {
            let wa = a.weights().as_slice();
            let wb = b.weights().as_slice();
            for (x, y) in wa.iter().zip(wb) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            for (x, y) in a.biases().iter().zip(b.biases()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        // and a second cycle produces identical bytes
        let path2 = dir.path().join("model2.json");
        save_model(&loaded, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn invalid_files_are_rejected_with_context() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"input_dim": 2, "layers": []}"#).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(err.to_string().contains("bad.json"));

        std::fs::write(
            &path,
            r#"{"input_dim": 1, "layers": [{"in": 1, "out": 2, "activation": "softplus", "weights": [1, 2], "biases": [0, 0]}]}"#,
        )
        .unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(err.to_string().contains("softplus"));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_model(Path::new("/nonexistent/model.json")).unwrap_err();
        assert!(matches!(err, IoError::File { .. }));
    }
}
