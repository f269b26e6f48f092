//! Bias-strength estimation from expected vs. observed subgroup
//! probabilities.
//!
//! The building block is the *cost* of a subgroup cell: the probability mass
//! the cell would carry if group membership were independent of the outcome,
//! divided by the mass actually observed. A cost below 1 means the cell is
//! over-represented (e.g. a group misclassified more often than chance would
//! predict). Ratios of costs between the deprived and favored group give the
//! scalar bias weights that steer the localization scoring.
//!
//! All probabilities are taken over the full repair set; the positive-sample
//! balancing used for gradient analysis does not enter these estimates.

use alloc::format;

use crate::dataset::{LabeledDataset, Setting, SubgroupPartition};
use crate::error::{Error, Result};

/// Cap applied to a bias weight whose cost ratio involves an infinite cost
/// (observed mass zero where expectation is positive). The reciprocal case
/// saturates at `1 / DEFAULT_W_CAP`, keeping group-swap antisymmetry.
pub const DEFAULT_W_CAP: f64 = 1e6;

/// Expected probability of a (group, outcome) cell under independence:
/// `(group_size / total) * (outcome_size / total)`.
pub fn p_exp(total: u64, group_size: u64, outcome_size: u64) -> Result<f64> {
    if total == 0 {
        return Err(Error::EmptySampleSet);
    }
    let t = total as f64;
    Ok((group_size as f64 / t) * (outcome_size as f64 / t))
}

/// Observed probability of a cell: `subset_size / total`.
pub fn p_obs(subset_size: u64, total: u64) -> Result<f64> {
    if total == 0 {
        return Err(Error::EmptySampleSet);
    }
    Ok(subset_size as f64 / total as f64)
}

/// Cost of a cell: `p_exp / p_obs`.
///
/// An empty cell with zero expectation carries no signal and costs 1; an
/// empty cell with positive expectation costs infinity (resolved by
/// saturation when the cost enters a weight ratio).
pub fn cost(p_exp: f64, p_obs: f64) -> f64 {
    if p_obs > 0.0 {
        p_exp / p_obs
    } else if p_exp == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Ratio of two costs with infinite operands saturated to a finite cap.
/// Both operands infinite is unresolvable and reported as degenerate.
fn saturated_ratio(num: f64, den: f64, cap: f64, num_cell: &str, den_cell: &str) -> Result<f64> {
    match (num.is_infinite(), den.is_infinite()) {
        (true, true) => Err(Error::DegenerateBias {
            detail: format!(
                "both {num_cell} and {den_cell} have expected mass but zero observed mass"
            ),
        }),
        (true, false) => Ok(cap),
        (false, true) => Ok(1.0 / cap),
        (false, false) => {
            if den == 0.0 {
                if num == 0.0 {
                    Ok(1.0)
                } else {
                    Ok(cap)
                }
            } else if num == 0.0 {
                Ok(1.0 / cap)
            } else {
                Ok(num / den)
            }
        }
    }
}

/// Class-label classification costs for the different-attribute setting.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassCosts {
    pub cost_class0: f64,
    pub cost_class1: f64,
    /// Class with the higher cost, i.e. classified correctly less often
    /// than expected; ties go to class 0.
    pub prioritized: u8,
}

/// Scalar bias weights guiding the localization scoring.
///
/// `w_primary` weighs the leading score term: the misclassified bucket in the
/// same-attribute setting, the prioritized class in the different-attribute
/// setting. `w_secondary` weighs the subtracted term. Both are oriented by
/// the deprived group passed at construction, never by a fixed convention.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BiasWeights {
    pub setting: Setting,
    pub deprived_group: u8,
    pub w_primary: f64,
    pub w_secondary: f64,
    pub class_costs: Option<ClassCosts>,
}

impl BiasWeights {
    pub fn prioritized_class(&self) -> Option<u8> {
        self.class_costs.map(|c| c.prioritized)
    }
}

/// Bias weights for the same-attribute setting: the misclassified-bucket
/// weight is `cost(neg, favored) / cost(neg, deprived)` and the
/// correctly-classified-bucket weight is `cost(pos, deprived) / cost(pos,
/// favored)`.
pub fn bias_weights_same_attribute(
    partition: &SubgroupPartition,
    deprived: u8,
) -> Result<BiasWeights> {
    bias_weights_same_attribute_with_cap(partition, deprived, DEFAULT_W_CAP)
}

pub fn bias_weights_same_attribute_with_cap(
    partition: &SubgroupPartition,
    deprived: u8,
    cap: f64,
) -> Result<BiasWeights> {
    if partition.setting() != Setting::SameAttribute {
        return Err(Error::WrongSetting);
    }
    let favored = 1 - deprived;
    let neg = [
        partition.neg(0)?.len() as u64,
        partition.neg(1)?.len() as u64,
    ];
    let pos = [
        partition.pos(0)?.len() as u64,
        partition.pos(1)?.len() as u64,
    ];
    let group = [neg[0] + pos[0], neg[1] + pos[1]];
    let n = group[0] + group[1];
    let n_neg = neg[0] + neg[1];
    let n_pos = pos[0] + pos[1];

    let cost_of = |bucket: &[u64; 2], bucket_total: u64, g: u8| -> Result<f64> {
        let p_exp = p_exp(n, group[g as usize], bucket_total)?;
        let p_obs = p_obs(bucket[g as usize], n)?;
        Ok(cost(p_exp, p_obs))
    };

    let w_neg = saturated_ratio(
        cost_of(&neg, n_neg, favored)?,
        cost_of(&neg, n_neg, deprived)?,
        cap,
        "cost(neg, favored)",
        "cost(neg, deprived)",
    )?;
    let w_pos = saturated_ratio(
        cost_of(&pos, n_pos, deprived)?,
        cost_of(&pos, n_pos, favored)?,
        cap,
        "cost(pos, deprived)",
        "cost(pos, favored)",
    )?;
    Ok(BiasWeights {
        setting: Setting::SameAttribute,
        deprived_group: deprived,
        w_primary: w_neg,
        w_secondary: w_pos,
        class_costs: None,
    })
}

/// Per-class classification costs from raw counts: for class `y`,
/// `[(|Y=y|/n) * (|pos|/n)] / (|pos, Y=y|/n)`.
pub fn class_costs_from_counts(
    n: u64,
    n_class: [u64; 2],
    n_pos: u64,
    n_pos_class: [u64; 2],
) -> Result<ClassCosts> {
    if n == 0 {
        return Err(Error::EmptySampleSet);
    }
    for class in 0..2u8 {
        if n_class[class as usize] == 0 {
            return Err(Error::EmptyClass { class });
        }
    }
    let mut costs = [0.0; 2];
    for y in 0..2 {
        let p_exp = (n_class[y] as f64 / n as f64) * (n_pos as f64 / n as f64);
        let p_obs = p_obs(n_pos_class[y], n)?;
        costs[y] = cost(p_exp, p_obs);
    }
    // The class with the higher cost is correctly classified less often
    // than expected and gets priority; ties go to class 0.
    let prioritized = if costs[1] > costs[0] { 1 } else { 0 };
    Ok(ClassCosts {
        cost_class0: costs[0],
        cost_class1: costs[1],
        prioritized,
    })
}

/// Per-class classification costs of an annotated dataset.
pub fn class_costs_different_attribute(dataset: &LabeledDataset) -> Result<ClassCosts> {
    dataset.require_annotated()?;
    let mut n_class = [0u64; 2];
    let mut n_pos_class = [0u64; 2];
    for sample in &dataset.samples {
        n_class[sample.y as usize] += 1;
        if sample.is_positive() == Some(true) {
            n_pos_class[sample.y as usize] += 1;
        }
    }
    let n_pos = n_pos_class[0] + n_pos_class[1];
    class_costs_from_counts(dataset.len() as u64, n_class, n_pos, n_pos_class)
}

/// Bias weights for the different-attribute setting.
///
/// Expected probabilities use the marginal group share times the marginal
/// class share over the full repair set; observed probabilities use the
/// class x group cells of the correctly classified subset. The weight for
/// class `y` is `cost(y, deprived) / cost(y, favored)`.
pub fn bias_weights_different_attribute(
    partition: &SubgroupPartition,
    dataset: &LabeledDataset,
    deprived: u8,
) -> Result<BiasWeights> {
    bias_weights_different_attribute_with_cap(partition, dataset, deprived, DEFAULT_W_CAP)
}

pub fn bias_weights_different_attribute_with_cap(
    partition: &SubgroupPartition,
    dataset: &LabeledDataset,
    deprived: u8,
    cap: f64,
) -> Result<BiasWeights> {
    if partition.setting() != Setting::DifferentAttribute {
        return Err(Error::WrongSetting);
    }
    dataset.require_annotated()?;
    let favored = 1 - deprived;
    let n = dataset.len() as u64;
    let mut n_group = [0u64; 2];
    let mut n_class = [0u64; 2];
    for sample in &dataset.samples {
        n_group[sample.s as usize] += 1;
        n_class[sample.y as usize] += 1;
    }

    let cost_of = |y: u8, g: u8| -> Result<f64> {
        let p_exp = p_exp(n, n_group[g as usize], n_class[y as usize])?;
        let p_obs = p_obs(partition.class(y, g)?.len() as u64, n)?;
        Ok(cost(p_exp, p_obs))
    };

    let w0 = saturated_ratio(
        cost_of(0, deprived)?,
        cost_of(0, favored)?,
        cap,
        "cost(class 0, deprived)",
        "cost(class 0, favored)",
    )?;
    let w1 = saturated_ratio(
        cost_of(1, deprived)?,
        cost_of(1, favored)?,
        cap,
        "cost(class 1, deprived)",
        "cost(class 1, favored)",
    )?;
    let class_costs = class_costs_different_attribute(dataset)?;
    let (w_primary, w_secondary) = if class_costs.prioritized == 0 {
        (w0, w1)
    } else {
        (w1, w0)
    };
    Ok(BiasWeights {
        setting: Setting::DifferentAttribute,
        deprived_group: deprived,
        w_primary,
        w_secondary,
        class_costs: Some(class_costs),
    })
}
