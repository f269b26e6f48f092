//! Group-fairness metrics, accuracy, and dynamic identification of the
//! deprived community.
//!
//! All gap metrics are reported as magnitudes (absolute differences, and the
//! min/max orientation for the rate ratio), so they are invariant under
//! swapping the two group labels. Which group is deprived is a separate,
//! dynamically computed fact, never an assumption baked into a metric.
//!
//! Metrics whose conditioning class is empty are *undefined* and reported as
//! such, never as 0 or 1; the repair fitness treats undefined as worst.

use crate::bias;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::net::Model;

/// The four supported group-fairness objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MetricKind {
    /// Statistical parity difference: positive-rate gap.
    Spd,
    /// Disparate impact: positive-rate ratio, scored as `|1 - min/max|`.
    Di,
    /// Equalized-odds difference: true-positive-rate gap.
    Eod,
    /// False-positive-rate gap.
    Fpr,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Spd => "spd",
            MetricKind::Di => "di",
            MetricKind::Eod => "eod",
            MetricKind::Fpr => "fpr",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "spd" => MetricKind::Spd,
            "di" => MetricKind::Di,
            "eod" => MetricKind::Eod,
            "fpr" => MetricKind::Fpr,
            _ => return None,
        })
    }
}

/// Confusion tallies of one sensitive group, relative to a chosen positive
/// class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupConfusion {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl GroupConfusion {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn correct(&self) -> u64 {
        self.true_pos + self.true_neg
    }

    pub fn misclassified(&self) -> u64 {
        self.false_pos + self.false_neg
    }

    pub fn predicted_positive(&self) -> u64 {
        self.true_pos + self.false_pos
    }
}

/// Per-group confusion tallies of an annotated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupCounts {
    pub groups: [GroupConfusion; 2],
    pub positive_class: u8,
}

impl GroupCounts {
    pub fn total(&self) -> u64 {
        self.groups[0].total() + self.groups[1].total()
    }

    pub fn group(&self, g: u8) -> &GroupConfusion {
        &self.groups[g as usize]
    }
}

/// Exact confusion tallies per group, with class 1 as the positive outcome.
pub fn group_counts(dataset: &LabeledDataset) -> Result<GroupCounts> {
    group_counts_with_positive(dataset, 1)
}

/// Exact confusion tallies per group for an arbitrary positive class.
pub fn group_counts_with_positive(dataset: &LabeledDataset, positive: u8) -> Result<GroupCounts> {
    dataset.require_annotated()?;
    let mut counts = GroupCounts {
        groups: [GroupConfusion::default(); 2],
        positive_class: positive,
    };
    for sample in &dataset.samples {
        let y_hat = sample.y_hat.ok_or(Error::Unannotated)?;
        tally(&mut counts, sample.s, sample.y, y_hat);
    }
    Ok(counts)
}

/// Tallies predictions computed on the fly, without materializing an
/// annotated copy of the dataset. Used by the repair fitness, which
/// evaluates thousands of candidate models.
pub fn group_counts_with_model(
    model: &Model,
    dataset: &LabeledDataset,
    positive: u8,
) -> Result<GroupCounts> {
    if dataset.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut counts = GroupCounts {
        groups: [GroupConfusion::default(); 2],
        positive_class: positive,
    };
    for sample in &dataset.samples {
        let y_hat = model.predict(&sample.x)? as u8;
        tally(&mut counts, sample.s, sample.y, y_hat);
    }
    Ok(counts)
}

fn tally(counts: &mut GroupCounts, s: u8, y: u8, y_hat: u8) {
    let cell = &mut counts.groups[s as usize];
    let actual_pos = y == counts.positive_class;
    let predicted_pos = y_hat == counts.positive_class;
    match (actual_pos, predicted_pos) {
        (true, true) => cell.true_pos += 1,
        (false, true) => cell.false_pos += 1,
        (false, false) => cell.true_neg += 1,
        (true, false) => cell.false_neg += 1,
    }
}

fn positive_rate(cell: &GroupConfusion) -> Result<f64> {
    let n = cell.total();
    if n == 0 {
        return Err(Error::UndefinedMetric {
            metric: MetricKind::Spd,
        });
    }
    Ok(cell.predicted_positive() as f64 / n as f64)
}

/// Statistical parity difference: `|P(pos | g=0) - P(pos | g=1)|`.
pub fn spd(counts: &GroupCounts) -> Result<f64> {
    let r0 = positive_rate(&counts.groups[0])?;
    let r1 = positive_rate(&counts.groups[1])?;
    Ok((r0 - r1).abs())
}

/// Disparate impact as `(raw, score)`: the raw ratio is oriented
/// `min-rate / max-rate` so it lies in [0, 1], and the score is
/// `|1 - raw|`. Undefined when both rates are zero.
pub fn di(counts: &GroupCounts) -> Result<(f64, f64)> {
    let r0 = positive_rate(&counts.groups[0]).map_err(|_| Error::UndefinedMetric {
        metric: MetricKind::Di,
    })?;
    let r1 = positive_rate(&counts.groups[1]).map_err(|_| Error::UndefinedMetric {
        metric: MetricKind::Di,
    })?;
    let (lo, hi) = if r0 <= r1 { (r0, r1) } else { (r1, r0) };
    if hi == 0.0 {
        return Err(Error::UndefinedMetric {
            metric: MetricKind::Di,
        });
    }
    let raw = lo / hi;
    Ok((raw, (1.0 - raw).abs()))
}

/// True-positive-rate gap. Undefined when either group has no samples of the
/// positive class.
pub fn eod(counts: &GroupCounts) -> Result<f64> {
    let mut rates = [0.0; 2];
    for (g, cell) in counts.groups.iter().enumerate() {
        let n = cell.true_pos + cell.false_neg;
        if n == 0 {
            return Err(Error::UndefinedMetric {
                metric: MetricKind::Eod,
            });
        }
        rates[g] = cell.true_pos as f64 / n as f64;
    }
    Ok((rates[0] - rates[1]).abs())
}

/// False-positive-rate gap. Undefined when either group has no samples of
/// the negative class.
pub fn fpr_gap(counts: &GroupCounts) -> Result<f64> {
    let mut rates = [0.0; 2];
    for (g, cell) in counts.groups.iter().enumerate() {
        let n = cell.false_pos + cell.true_neg;
        if n == 0 {
            return Err(Error::UndefinedMetric {
                metric: MetricKind::Fpr,
            });
        }
        rates[g] = cell.false_pos as f64 / n as f64;
    }
    Ok((rates[0] - rates[1]).abs())
}

/// Fraction of correct predictions across both groups.
pub fn accuracy(counts: &GroupCounts) -> f64 {
    let n = counts.total();
    if n == 0 {
        return 0.0;
    }
    (counts.groups[0].correct() + counts.groups[1].correct()) as f64 / n as f64
}

/// Fraction of correct predictions within one group, if it has samples.
pub fn group_accuracy(counts: &GroupCounts, group: u8) -> Option<f64> {
    let cell = counts.group(group);
    let n = cell.total();
    if n == 0 {
        None
    } else {
        Some(cell.correct() as f64 / n as f64)
    }
}

/// The chosen metric's magnitude, or `None` when it is undefined on this
/// data. Disparate impact contributes its score form.
pub fn metric_value(counts: &GroupCounts, metric: MetricKind) -> Option<f64> {
    match metric {
        MetricKind::Spd => spd(counts).ok(),
        MetricKind::Di => di(counts).ok().map(|(_, score)| score),
        MetricKind::Eod => eod(counts).ok(),
        MetricKind::Fpr => fpr_gap(counts).ok(),
    }
}

/// Outcome of the deprived-community identification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeprivedCall {
    /// The sensitive value treated worse by the model.
    pub group: u8,
    /// Set when the data carries no bias signal (no misclassifications, or
    /// exactly proportional error rates); `group` is then 0 by convention.
    pub no_bias_signal: bool,
}

/// Identifies the deprived community: the group whose observed
/// misclassification mass exceeds its bias-free expectation by the larger
/// factor, i.e. the group with the smaller expected/observed cost ratio.
/// Ties go to group 0 with the no-bias flag set.
pub fn identify_deprived(dataset: &LabeledDataset) -> Result<DeprivedCall> {
    let counts = group_counts(dataset)?;
    identify_deprived_from_counts(&counts)
}

/// Same as [`identify_deprived`], starting from precomputed tallies.
pub fn identify_deprived_from_counts(counts: &GroupCounts) -> Result<DeprivedCall> {
    let n = counts.total();
    for g in 0..2u8 {
        if counts.group(g).total() == 0 {
            return Err(Error::EmptyGroup { group: g });
        }
    }
    let n_neg = counts.groups[0].misclassified() + counts.groups[1].misclassified();
    if n_neg == 0 {
        return Ok(DeprivedCall {
            group: 0,
            no_bias_signal: true,
        });
    }
    let mut cost = [0.0; 2];
    for g in 0..2 {
        let cell = &counts.groups[g];
        let p_exp = bias::p_exp(n, cell.total(), n_neg)?;
        let p_obs = bias::p_obs(cell.misclassified(), n)?;
        cost[g] = bias::cost(p_exp, p_obs);
    }
    if cost[1] < cost[0] {
        Ok(DeprivedCall {
            group: 1,
            no_bias_signal: false,
        })
    } else {
        Ok(DeprivedCall {
            group: 0,
            no_bias_signal: cost[0] == cost[1],
        })
    }
}

/// All metrics of one annotated dataset in one record. Metrics whose
/// preconditions fail are recorded as `None` rather than aborting.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FairnessReport {
    pub positive_class: u8,
    pub spd: Option<f64>,
    pub di_raw: Option<f64>,
    pub di_score: Option<f64>,
    pub eod: Option<f64>,
    pub fpr_gap: Option<f64>,
    pub accuracy_overall: f64,
    pub accuracy_per_group: [Option<f64>; 2],
    pub deprived_group: u8,
    pub no_bias_signal: bool,
}

/// Computes every metric on an annotated dataset, with class 1 as the
/// positive outcome.
pub fn report(dataset: &LabeledDataset) -> Result<FairnessReport> {
    report_with_positive(dataset, 1)
}

pub fn report_with_positive(dataset: &LabeledDataset, positive: u8) -> Result<FairnessReport> {
    let counts = group_counts_with_positive(dataset, positive)?;
    report_from_counts(&counts)
}

pub fn report_from_counts(counts: &GroupCounts) -> Result<FairnessReport> {
    let deprived = identify_deprived_from_counts(counts)?;
    let di_pair = di(counts).ok();
    Ok(FairnessReport {
        positive_class: counts.positive_class,
        spd: spd(counts).ok(),
        di_raw: di_pair.map(|(raw, _)| raw),
        di_score: di_pair.map(|(_, score)| score),
        eod: eod(counts).ok(),
        fpr_gap: fpr_gap(counts).ok(),
        accuracy_overall: accuracy(counts),
        accuracy_per_group: [group_accuracy(counts, 0), group_accuracy(counts, 1)],
        deprived_group: deprived.group,
        no_bias_signal: deprived.no_bias_signal,
    })
}
