//! Shared fixtures for unit tests.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{LabeledDataset, LabeledSample};
use crate::net::{Activation, DenseLayer, Matrix, Model};

/// Rows of (y, s, correct?) mirroring the worked same-attribute example
/// table: 10 samples, gender as both label and sensitive attribute.
pub const TABLE_SAME: [(u8, u8, bool); 10] = [
    (1, 1, true),
    (1, 1, true),
    (1, 1, true),
    (0, 0, false),
    (0, 0, false),
    (1, 1, false),
    (0, 0, true),
    (0, 0, false),
    (1, 1, true),
    (0, 0, true),
];

/// Rows of (y, s, correct?) mirroring the worked different-attribute example
/// table; s is 0 for black, 1 for white.
pub const TABLE_DIFF: [(u8, u8, bool); 10] = [
    (1, 1, true),
    (0, 1, false),
    (0, 0, true),
    (1, 1, false),
    (0, 0, false),
    (1, 1, false),
    (0, 1, true),
    (1, 0, true),
    (1, 1, true),
    (0, 0, true),
];

/// Builds an annotated dataset from (y, s, correct?) rows. The single
/// feature stores the desired prediction so [`reader_model`] reproduces the
/// annotations.
pub fn dataset_from_rows(rows: &[(u8, u8, bool)]) -> LabeledDataset {
    let samples = rows
        .iter()
        .map(|&(y, s, correct)| {
            let y_hat = if correct { y } else { 1 - y };
            LabeledSample {
                x: vec![y_hat as f64],
                y,
                s,
                y_hat: Some(y_hat),
            }
        })
        .collect();
    LabeledDataset::from_rows(samples, 1).unwrap()
}

/// Model that predicts whatever class index is stored in the single feature
/// (0.0 predicts class 0 via the tie-break, 1.0 predicts class 1).
pub fn reader_model() -> Model {
    let l = DenseLayer::new(
        Matrix::from_rows(&[&[-4.0, 4.0]]),
        vec![0.0, 0.0],
        Activation::Softmax,
    )
    .unwrap();
    Model::new(1, vec![l]).unwrap()
}

/// Pseudo-random (y, s, correct?) rows from a fixed multiplicative hash.
pub fn hashed_rows(n: u32) -> Vec<(u8, u8, bool)> {
    (0..n)
        .map(|i| {
            let h = i.wrapping_mul(2654435761) >> 7;
            (
                ((h >> 1) % 2) as u8,
                ((h >> 3) % 2) as u8,
                (h >> 5) % 3 != 0,
            )
        })
        .collect()
}
