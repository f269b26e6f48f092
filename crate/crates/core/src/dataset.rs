//! In-memory labeled datasets and the dual subgroup categorization of the
//! repair set.
//!
//! Two settings are supported, depending on how the sensitive attribute
//! relates to the predicted label:
//!
//! - same-attribute: the label *is* the sensitive attribute; the
//!   repair set splits into correctly/incorrectly classified samples per
//!   group, covering the whole set.
//! - different-attribute: label and sensitive attribute differ;
//!   the four cells are class x group over the correctly classified subset
//!   only.
//!
//! Datasets are immutable after construction; every operation returns a new
//! value.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::net::Model;

/// One row: features, binary true label, binary sensitive value, and the
/// model's prediction once annotated.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: u8,
    pub s: u8,
    pub y_hat: Option<u8>,
}

impl LabeledSample {
    pub fn new(x: Vec<f64>, y: u8, s: u8) -> Self {
        LabeledSample {
            x,
            y,
            s,
            y_hat: None,
        }
    }

    /// Correctly classified, i.e. the prediction matches the true label.
    pub fn is_positive(&self) -> Option<bool> {
        self.y_hat.map(|p| p == self.y)
    }
}

/// A dataset of labeled samples sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub samples: Vec<LabeledSample>,
    pub feature_dim: usize,
    pub feature_names: Vec<String>,
    pub label_name: String,
    pub sensitive_name: String,
    /// Raw values mapped to label 0 and 1, in that order.
    pub label_values: [String; 2],
    /// Raw values mapped to sensitive value 0 and 1, in that order.
    pub sensitive_values: [String; 2],
}

impl LabeledDataset {
    pub fn new(
        samples: Vec<LabeledSample>,
        feature_dim: usize,
        feature_names: Vec<String>,
        label_name: String,
        sensitive_name: String,
        label_values: [String; 2],
        sensitive_values: [String; 2],
    ) -> Result<Self> {
        for (i, sample) in samples.iter().enumerate() {
            if sample.x.len() != feature_dim {
                return Err(Error::InvalidSample {
                    index: i,
                    detail: format!(
                        "feature vector has length {}, expected {feature_dim}",
                        sample.x.len()
                    ),
                });
            }
            if sample.y > 1 || sample.s > 1 || sample.y_hat.is_some_and(|p| p > 1) {
                return Err(Error::InvalidSample {
                    index: i,
                    detail: String::from("label, sensitive value and prediction must be 0 or 1"),
                });
            }
        }
        Ok(LabeledDataset {
            samples,
            feature_dim,
            feature_names,
            label_name,
            sensitive_name,
            label_values,
            sensitive_values,
        })
    }

    /// Convenience constructor for synthetic data with generated column names.
    pub fn from_rows(rows: Vec<LabeledSample>, feature_dim: usize) -> Result<Self> {
        let feature_names = (0..feature_dim).map(|i| format!("x{i}")).collect();
        Self::new(
            rows,
            feature_dim,
            feature_names,
            String::from("label"),
            String::from("sensitive"),
            [String::from("0"), String::from("1")],
            [String::from("0"), String::from("1")],
        )
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_annotated(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.y_hat.is_some())
    }

    pub fn require_annotated(&self) -> Result<()> {
        if self.is_annotated() {
            Ok(())
        } else {
            Err(Error::Unannotated)
        }
    }

    /// New dataset with every sample's prediction filled in by the model.
    pub fn annotate_predictions(&self, model: &Model) -> Result<LabeledDataset> {
        if self.feature_dim != model.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: model.input_dim(),
                actual: self.feature_dim,
            });
        }
        let mut out = self.clone();
        for sample in out.samples.iter_mut() {
            sample.y_hat = Some(model.predict(&sample.x)? as u8);
        }
        Ok(out)
    }
}

/// Which relationship between label and sensitive attribute is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Setting {
    SameAttribute,
    DifferentAttribute,
}

/// The four sample-index cells of the active setting.
///
/// In the same-attribute setting the bucket axis is negative (0) / positive (1) and the
/// cells partition the whole repair set. In the different-attribute setting the bucket axis is
/// the class label and the cells partition the correctly classified subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgroupPartition {
    setting: Setting,
    /// `cells[bucket][group]`, each a sorted list of sample indices.
    cells: [[Vec<usize>; 2]; 2],
}

impl SubgroupPartition {
    pub fn setting(&self) -> Setting {
        self.setting
    }

    pub fn cell(&self, bucket: u8, group: u8) -> &[usize] {
        &self.cells[bucket as usize][group as usize]
    }

    /// Misclassified samples of one group (same-attribute setting only).
    pub fn neg(&self, group: u8) -> Result<&[usize]> {
        match self.setting {
            Setting::SameAttribute => Ok(self.cell(0, group)),
            Setting::DifferentAttribute => Err(Error::WrongSetting),
        }
    }

    /// Correctly classified samples of one group (same-attribute setting
    /// only).
    pub fn pos(&self, group: u8) -> Result<&[usize]> {
        match self.setting {
            Setting::SameAttribute => Ok(self.cell(1, group)),
            Setting::DifferentAttribute => Err(Error::WrongSetting),
        }
    }

    /// Correctly classified samples with the given class label and group
    /// (different-attribute setting only).
    pub fn class(&self, label: u8, group: u8) -> Result<&[usize]> {
        match self.setting {
            Setting::DifferentAttribute => Ok(self.cell(label, group)),
            Setting::SameAttribute => Err(Error::WrongSetting),
        }
    }

    /// Total number of indexed samples across the four cells.
    pub fn total(&self) -> usize {
        self.cells.iter().flatten().map(Vec::len).sum()
    }

    pub fn counts(&self) -> [[usize; 2]; 2] {
        [
            [self.cells[0][0].len(), self.cells[0][1].len()],
            [self.cells[1][0].len(), self.cells[1][1].len()],
        ]
    }
}

/// Splits the annotated repair set into (neg/pos) x group cells.
///
/// Valid only when the label is the sensitive attribute, which is validated
/// sample by sample.
pub fn partition_same_attribute(dataset: &LabeledDataset) -> Result<SubgroupPartition> {
    dataset.require_annotated()?;
    let mut cells: [[Vec<usize>; 2]; 2] = Default::default();
    for (i, sample) in dataset.samples.iter().enumerate() {
        if sample.y != sample.s {
            return Err(Error::SettingMismatch { index: i });
        }
        let positive = sample.is_positive().ok_or(Error::Unannotated)?;
        cells[positive as usize][sample.s as usize].push(i);
    }
    Ok(SubgroupPartition {
        setting: Setting::SameAttribute,
        cells,
    })
}

/// Splits the correctly classified subset of the annotated repair set into
/// class x group cells. Misclassified samples are not indexed.
pub fn partition_different_attribute(dataset: &LabeledDataset) -> Result<SubgroupPartition> {
    dataset.require_annotated()?;
    let mut cells: [[Vec<usize>; 2]; 2] = Default::default();
    for (i, sample) in dataset.samples.iter().enumerate() {
        let positive = sample.is_positive().ok_or(Error::Unannotated)?;
        if positive {
            cells[sample.y as usize][sample.s as usize].push(i);
        }
    }
    Ok(SubgroupPartition {
        setting: Setting::DifferentAttribute,
        cells,
    })
}

/// Uniform random subset of the positive indices with size
/// `min(|pos|, neg_len)`, deterministic for a given seed. The result is
/// sorted.
pub fn balance_positive_sample(pos: &[usize], neg_len: usize, seed: u64) -> Result<Vec<usize>> {
    if neg_len == 0 {
        return Err(Error::NothingToLocalize);
    }
    if pos.len() <= neg_len {
        return Ok(pos.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, pos.len(), neg_len);
    let mut out: Vec<usize> = picked.iter().map(|i| pos[i]).collect();
    out.sort_unstable();
    Ok(out)
}
