//! Synthetic fixtures: a planted-bias classifier with matching data, and
//! the small worked-example tables used by the golden tests.

use fairfix_core::dataset::{LabeledDataset, LabeledSample};
use fairfix_core::localize::WeightCoord;
use fairfix_core::net::{Activation, DenseLayer, Matrix, Model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Coordinate of the planted bias-inducing weight in [`planted_model`].
pub const PLANTED_COORD: WeightCoord = WeightCoord {
    layer: 1,
    row: 1,
    col: 0,
};

/// Two-layer tanh/softmax net that classifies on feature 0; `leak` is the
/// final-layer weight that couples the group-coded feature 1 into class 0,
/// suppressing positive predictions for group 1 while leaving group 0
/// nearly untouched.
pub fn planted_model(leak: f64) -> Model {
    let hidden = DenseLayer::new(
        Matrix::from_rows(&[&[1.5, 0.0], &[0.0, 1.5]]),
        vec![0.0, 0.0],
        Activation::Tanh,
    )
    .expect("static layer");
    let head = DenseLayer::new(
        Matrix::from_rows(&[&[-1.2, 1.2], &[leak, 0.0]]),
        vec![0.0, 0.0],
        Activation::Softmax,
    )
    .expect("static layer");
    Model::new(2, vec![hidden, head]).expect("static model")
}

/// Samples with feature 0 carrying the label (sign of a standard normal)
/// and feature 1 encoding the sensitive group at 0 or 1 plus noise.
pub fn planted_dataset(n: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.15).expect("static sigma");
    let signal = Normal::new(0.0, 1.0).expect("static sigma");
    let samples = (0..n)
        .map(|_| {
            let s = rng.gen_range(0..2u8);
            let x0: f64 = signal.sample(&mut rng);
            let x1 = s as f64 + noise.sample(&mut rng);
            let y = (x0 > 0.0) as u8;
            LabeledSample::new(vec![x0, x1], y, s)
        })
        .collect();
    LabeledDataset::from_rows(samples, 2).expect("generated samples are valid")
}

/// Rows of (y, s, correct?) for the same-attribute worked example: gender is
/// both the label and the sensitive attribute.
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

/// Rows of (y, s, correct?) for the different-attribute worked example;
/// s = 0 is black, s = 1 is white.
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

/// [`TABLE_DIFF`] with the last row flipped to a misclassification. The
/// published per-class cost chain (costs 1.25 and 0.83) corresponds to this
/// variant's counts: five correct predictions, two of them in class 0.
pub const TABLE_DIFF_CLASS_COST_VARIANT: [(u8, u8, bool); 10] = [
    (1, 1, true),
    (0, 1, false),
    (0, 0, true),
    (1, 1, false),
    (0, 0, false),
    (1, 1, false),
    (0, 1, true),
    (1, 0, true),
    (1, 1, true),
    (0, 0, false),
];

/// Builds a dataset whose single feature stores the prediction
/// [`reader_model`] will make, so arbitrary (label, group, correct?)
/// patterns can be realized with a real model.
pub fn table_dataset(
    rows: &[(u8, u8, bool)],
    label_name: &str,
    sensitive_name: &str,
) -> LabeledDataset {
    let samples = rows
        .iter()
        .map(|&(y, s, correct)| {
            let y_hat = if correct { y } else { 1 - y };
            LabeledSample::new(vec![y_hat as f64], y, s)
        })
        .collect();
    LabeledDataset::new(
        samples,
        1,
        vec!["signal".to_string()],
        label_name.to_string(),
        sensitive_name.to_string(),
        ["0".to_string(), "1".to_string()],
        ["0".to_string(), "1".to_string()],
    )
    .expect("table rows are valid")
}

/// Model that predicts whatever class index is stored in the single
/// feature: 0.0 gives equal logits (class 0 via the tie-break), 1.0
/// predicts class 1.
pub fn reader_model() -> Model {
    let head = DenseLayer::new(
        Matrix::from_rows(&[&[-4.0, 4.0]]),
        vec![0.0, 0.0],
        Activation::Softmax,
    )
    .expect("static layer");
    Model::new(1, vec![head]).expect("static model")
}
