//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

use crate::fairness::MetricKind;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input vector length does not match the expected dimension.
    DimensionMismatch { expected: usize, actual: usize },
    /// A forward pass produced a non-finite value in the given layer.
    NonFinite { layer: usize },
    /// Layer index outside the model.
    InvalidLayer { layer: usize, num_layers: usize },
    /// Class index outside `0..num_classes`.
    InvalidClass { class: usize, num_classes: usize },
    /// Model structure violates an invariant (dimension chain, activation
    /// placement, non-finite parameters).
    InvalidModel(String),
    /// A sample carries a label or sensitive value outside {0, 1}.
    InvalidSample { index: usize, detail: String },
    /// An operation that needs at least one sample got none.
    EmptySampleSet,
    /// Predictions have not been annotated onto the dataset.
    Unannotated,
    /// A sample violates the label == sensitive requirement of the
    /// same-attribute setting.
    SettingMismatch { index: usize },
    /// Partition passed to an operation expecting the other setting.
    WrongSetting,
    /// A sensitive group has no samples.
    EmptyGroup { group: u8 },
    /// A class label has no samples.
    EmptyClass { class: u8 },
    /// The metric's conditioning class is empty, so its value is undefined.
    UndefinedMetric { metric: MetricKind },
    /// Expected-vs-observed cost ratio is unresolvable (both cells have
    /// expected mass but zero observed mass).
    DegenerateBias { detail: String },
    /// No misclassified samples: there is nothing to localize.
    NothingToLocalize,
    /// Empty localization front: there is nothing to repair.
    NothingToRepair,
    /// Weight coordinate outside the model.
    CoordOutOfRange {
        layer: usize,
        row: usize,
        col: usize,
    },
    /// A particle position contains a non-finite entry.
    NonFinitePosition { slot: usize },
    /// A configuration field violates its documented bounds.
    InvalidConfig(String),
    /// Matrix shape mismatch between per-subset score inputs.
    ShapeMismatch,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, actual } => {
                write!(f, "dimension mismatch: expected {expected}, got {actual}")
            }
            Error::NonFinite { layer } => {
                write!(f, "non-finite value produced in layer {layer}")
            }
            Error::InvalidLayer { layer, num_layers } => {
                write!(f, "layer index {layer} out of range (model has {num_layers} layers)")
            }
            Error::InvalidClass { class, num_classes } => {
                write!(f, "class index {class} out of range (model has {num_classes} classes)")
            }
            Error::InvalidModel(detail) => write!(f, "invalid model: {detail}"),
            Error::InvalidSample { index, detail } => {
                write!(f, "invalid sample at index {index}: {detail}")
            }
            Error::EmptySampleSet => write!(f, "operation requires at least one sample"),
            Error::Unannotated => {
                write!(f, "dataset has no model predictions; annotate it first")
            }
            Error::SettingMismatch { index } => write!(
                f,
                "sample {index} has label != sensitive value, not valid for the same-attribute setting"
            ),
            Error::WrongSetting => write!(f, "partition built for the other setting"),
            Error::EmptyGroup { group } => write!(f, "sensitive group {group} has no samples"),
            Error::EmptyClass { class } => write!(f, "class {class} has no samples"),
            Error::UndefinedMetric { metric } => {
                write!(f, "{} is undefined on this data (empty conditioning class)", metric.name())
            }
            Error::DegenerateBias { detail } => write!(f, "degenerate bias estimate: {detail}"),
            Error::NothingToLocalize => {
                write!(f, "no misclassified samples: nothing to localize")
            }
            Error::NothingToRepair => write!(f, "localization front is empty: nothing to repair"),
            Error::CoordOutOfRange { layer, row, col } => {
                write!(f, "weight coordinate ({layer}, {row}, {col}) out of range")
            }
            Error::NonFinitePosition { slot } => {
                write!(f, "particle position slot {slot} is not finite")
            }
            Error::InvalidConfig(detail) => write!(f, "invalid configuration: {detail}"),
            Error::ShapeMismatch => write!(f, "score matrices have mismatched shapes"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
