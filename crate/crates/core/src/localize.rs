//! Fault localization: per-weight gradient-loss and forward-impact scores
//! for each subgroup, fairness-weighted aggregation, and Pareto-front
//! extraction of the suspicious weights.
//!
//! A weight's two scores share one shape:
//!
//! ```text
//! score = W_primary * m(primary, deprived) / (1 + m(primary, favored))
//!       - W_secondary * m(secondary, deprived) / (1 + m(secondary, favored))
//! ```
//!
//! where `m` is the per-weight gradient-loss or forward-impact magnitude on
//! one subgroup. The primary bucket is the misclassified set in the
//! same-attribute setting and the prioritized class in the
//! different-attribute setting, so weights that hurt the deprived community
//! score high while weights that carry its correct classifications score
//! low.

use alloc::vec::Vec;

use crate::bias::{self, BiasWeights};
use crate::dataset::{
    balance_positive_sample, partition_different_attribute, partition_same_attribute,
    LabeledDataset, Setting,
};
use crate::error::{Error, Result};
use crate::fairness::{self, DeprivedCall};
use crate::math;
use crate::net::{Matrix, Model};
use crate::pareto::non_dominated_indices;

/// Identity of one weight: target layer, input unit, output unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightCoord {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
}

/// A weight's aggregated gradient-loss and forward-impact scores.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightScore {
    pub coord: WeightCoord,
    pub grad_score: f64,
    pub fwd_score: f64,
}

/// Per-subgroup score matrices, one per cell of the scoring formula.
#[derive(Debug, Clone)]
pub struct SubsetMatrices {
    pub primary_deprived: Matrix,
    pub primary_favored: Matrix,
    pub secondary_deprived: Matrix,
    pub secondary_favored: Matrix,
}

impl SubsetMatrices {
    fn shape(&self) -> Result<(usize, usize)> {
        let shape = (self.primary_deprived.rows(), self.primary_deprived.cols());
        for m in [
            &self.primary_favored,
            &self.secondary_deprived,
            &self.secondary_favored,
        ] {
            if (m.rows(), m.cols()) != shape {
                return Err(Error::ShapeMismatch);
            }
        }
        Ok(shape)
    }
}

/// Sample counts of the four subsets that fed the score matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubsetCounts {
    pub primary_deprived: usize,
    pub primary_favored: usize,
    pub secondary_deprived: usize,
    pub secondary_favored: usize,
}

/// Everything the localization run produced.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalizationResult {
    pub setting: Setting,
    pub target_layer: usize,
    pub seed: u64,
    pub deprived: DeprivedCall,
    pub bias_weights: Option<BiasWeights>,
    pub subset_counts: SubsetCounts,
    /// Scores of every weight in the target layer, row-major.
    pub scored: Vec<WeightScore>,
    /// Pareto-selected coordinates, sorted.
    pub pareto: Vec<WeightCoord>,
    /// Set when the model misclassifies nothing, so there was no signal to
    /// localize from; `pareto` is then empty.
    pub nothing_to_localize: bool,
    /// Size of the balanced positive sample (`min(|pos|, |neg|)`).
    pub balanced_positive_len: usize,
}

/// Element-wise magnitude of the mean loss gradient of the target layer's
/// weights over the subset.
pub fn grad_loss_subset(
    model: &Model,
    samples: &[(&[f64], usize)],
    layer: usize,
) -> Result<Matrix> {
    let mut grad = model.grad_target_layer(samples, layer)?;
    grad_abs(&mut grad);
    Ok(grad)
}

fn grad_abs(m: &mut Matrix) {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = math::abs(m.get(i, j));
            m.set(i, j, v);
        }
    }
}

/// Per-weight normalized contribution to its output unit's pre-activation.
///
/// Contribution of weight (i, j) is `w_ij * mean_input_i + b_j / fan_in`, so
/// a unit's contributions sum to its mean pre-activation exactly; each is
/// normalized by the sum of absolute contributions into unit j. Units with
/// no contribution at all get all-zero shares.
pub(crate) fn contribution_shares(weights: &Matrix, biases: &[f64], mean_input: &[f64]) -> Matrix {
    let fan_in = weights.rows() as f64;
    let mut contrib = Matrix::zeros(weights.rows(), weights.cols());
    for j in 0..weights.cols() {
        let bias_share = biases[j] / fan_in;
        let mut denom = 0.0;
        for i in 0..weights.rows() {
            let c = weights.get(i, j) * mean_input[i] + bias_share;
            contrib.set(i, j, c);
            denom += math::abs(c);
        }
        if denom > 0.0 {
            for i in 0..weights.rows() {
                contrib.set(i, j, contrib.get(i, j) / denom);
            }
        } else {
            for i in 0..weights.rows() {
                contrib.set(i, j, 0.0);
            }
        }
    }
    contrib
}

/// Forward-impact magnitudes of the target layer's weights over the subset:
/// the weight's normalized contribution share times the mean sensitivity of
/// the true-class output probability to its output unit's pre-activation.
pub fn fwd_impact_subset(
    model: &Model,
    samples: &[(&[f64], usize)],
    layer: usize,
) -> Result<Matrix> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let target = model.layer(layer)?;
    let xs: Vec<&[f64]> = samples.iter().map(|&(x, _)| x).collect();
    let mean_input = model.mean_activation(&xs, layer)?;

    let mut mean_output_grad = alloc::vec![0.0; target.out_dim()];
    for &(x, y) in samples {
        let trace = model.forward(x)?;
        let grad = model.output_grad_wrt_preactivation(&trace, layer, y)?;
        for (acc, g) in mean_output_grad.iter_mut().zip(&grad) {
            *acc += g;
        }
    }
    let inv = 1.0 / samples.len() as f64;
    for g in mean_output_grad.iter_mut() {
        *g *= inv;
    }

    let mut impact = contribution_shares(target.weights(), target.biases(), &mean_input);
    for i in 0..impact.rows() {
        for j in 0..impact.cols() {
            let v = math::abs(impact.get(i, j) * mean_output_grad[j]);
            impact.set(i, j, v);
        }
    }
    Ok(impact)
}

/// Aggregates the per-subset gradient and forward-impact matrices into one
/// score pair per weight.
pub fn score_weights(
    grad: &SubsetMatrices,
    fwd: &SubsetMatrices,
    bias: &BiasWeights,
    layer: usize,
) -> Result<Vec<WeightScore>> {
    let shape = grad.shape()?;
    if fwd.shape()? != shape {
        return Err(Error::ShapeMismatch);
    }
    let combine = |m: &SubsetMatrices, i: usize, j: usize| -> f64 {
        bias.w_primary * m.primary_deprived.get(i, j) / (1.0 + m.primary_favored.get(i, j))
            - bias.w_secondary * m.secondary_deprived.get(i, j)
                / (1.0 + m.secondary_favored.get(i, j))
    };
    let mut scores = Vec::with_capacity(shape.0 * shape.1);
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            scores.push(WeightScore {
                coord: WeightCoord {
                    layer,
                    row: i,
                    col: j,
                },
                grad_score: combine(grad, i, j),
                fwd_score: combine(fwd, i, j),
            });
        }
    }
    Ok(scores)
}

/// Maximal non-dominated set of the scores, both objectives maximized.
/// When `top_k` is set and the front is larger, the `top_k` entries with the
/// highest score sum are kept (ties broken by coordinate order). The result
/// is sorted by coordinate.
pub fn pareto_front(scores: &[WeightScore], top_k: Option<usize>) -> Result<Vec<WeightCoord>> {
    if scores.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let points: Vec<(f64, f64)> = scores.iter().map(|s| (s.grad_score, s.fwd_score)).collect();
    let mut front = non_dominated_indices(&points);
    if let Some(k) = top_k {
        if front.len() > k {
            front.sort_by(|&a, &b| {
                let sum_a = scores[a].grad_score + scores[a].fwd_score;
                let sum_b = scores[b].grad_score + scores[b].fwd_score;
                sum_b
                    .partial_cmp(&sum_a)
                    .unwrap()
                    .then(scores[a].coord.cmp(&scores[b].coord))
            });
            front.truncate(k);
        }
    }
    let mut coords: Vec<WeightCoord> = front.into_iter().map(|i| scores[i].coord).collect();
    coords.sort_unstable();
    Ok(coords)
}

/// Runs the whole localization pipeline: annotate, partition, balance the
/// positive sample, identify the deprived community, estimate bias weights,
/// compute per-subset gradient and forward-impact matrices, score, and
/// extract the Pareto front. Deterministic for a given seed.
pub fn localize_layer(
    model: &Model,
    dataset: &LabeledDataset,
    setting: Setting,
    layer: usize,
    top_k: Option<usize>,
    seed: u64,
) -> Result<LocalizationResult> {
    let target = model.layer(layer)?;
    let shape = (target.in_dim(), target.out_dim());
    let annotated = dataset.annotate_predictions(model)?;
    let n_neg = annotated
        .samples
        .iter()
        .filter(|s| s.is_positive() == Some(false))
        .count();
    if n_neg == 0 {
        return Ok(LocalizationResult {
            setting,
            target_layer: layer,
            seed,
            deprived: DeprivedCall {
                group: 0,
                no_bias_signal: true,
            },
            bias_weights: None,
            subset_counts: SubsetCounts {
                primary_deprived: 0,
                primary_favored: 0,
                secondary_deprived: 0,
                secondary_favored: 0,
            },
            scored: Vec::new(),
            pareto: Vec::new(),
            nothing_to_localize: true,
            balanced_positive_len: 0,
        });
    }

    // Index lists for the four scoring subsets, in formula order. The
    // bias weights always come from the full partition; the balanced
    // positive sample feeds only the gradient and forward-impact subsets.
    let (deprived, bias_weights, subsets) = match setting {
        Setting::SameAttribute => {
            let partition = partition_same_attribute(&annotated)?;
            let mut pos_all: Vec<usize> = Vec::new();
            pos_all.extend_from_slice(partition.pos(0)?);
            pos_all.extend_from_slice(partition.pos(1)?);
            pos_all.sort_unstable();
            let balanced = balance_positive_sample(&pos_all, n_neg, seed)?;
            let deprived = fairness::identify_deprived(&annotated)?;
            let (dep, fav) = (deprived.group, 1 - deprived.group);
            let bias_weights = bias::bias_weights_same_attribute(&partition, dep)?;
            let subsets = [
                partition.neg(dep)?.to_vec(),
                partition.neg(fav)?.to_vec(),
                intersect_sorted(partition.pos(dep)?, &balanced),
                intersect_sorted(partition.pos(fav)?, &balanced),
            ];
            (deprived, bias_weights, subsets)
        }
        Setting::DifferentAttribute => {
            let partition = partition_different_attribute(&annotated)?;
            let mut pos_all: Vec<usize> = Vec::new();
            for y in 0..2 {
                for g in 0..2 {
                    pos_all.extend_from_slice(partition.class(y, g)?);
                }
            }
            pos_all.sort_unstable();
            let balanced = balance_positive_sample(&pos_all, n_neg, seed)?;
            let deprived = fairness::identify_deprived(&annotated)?;
            let (dep, fav) = (deprived.group, 1 - deprived.group);
            let bias_weights = bias::bias_weights_different_attribute(&partition, &annotated, dep)?;
            let primary = bias_weights
                .prioritized_class()
                .expect("different-attribute weights carry class costs");
            let secondary = 1 - primary;
            let subsets = [
                intersect_sorted(partition.class(primary, dep)?, &balanced),
                intersect_sorted(partition.class(primary, fav)?, &balanced),
                intersect_sorted(partition.class(secondary, dep)?, &balanced),
                intersect_sorted(partition.class(secondary, fav)?, &balanced),
            ];
            (deprived, bias_weights, subsets)
        }
    };

    let balanced_positive_len = match setting {
        Setting::SameAttribute => subsets[2].len() + subsets[3].len(),
        Setting::DifferentAttribute => subsets.iter().map(Vec::len).sum(),
    };
    let subset_counts = SubsetCounts {
        primary_deprived: subsets[0].len(),
        primary_favored: subsets[1].len(),
        secondary_deprived: subsets[2].len(),
        secondary_favored: subsets[3].len(),
    };

    let mut grad_ms: Vec<Matrix> = Vec::with_capacity(4);
    let mut fwd_ms: Vec<Matrix> = Vec::with_capacity(4);
    for indices in &subsets {
        if indices.is_empty() {
            grad_ms.push(Matrix::zeros(shape.0, shape.1));
            fwd_ms.push(Matrix::zeros(shape.0, shape.1));
        } else {
            let samples: Vec<(&[f64], usize)> = indices
                .iter()
                .map(|&i| {
                    let s = &annotated.samples[i];
                    (s.x.as_slice(), s.y as usize)
                })
                .collect();
            grad_ms.push(grad_loss_subset(model, &samples, layer)?);
            fwd_ms.push(fwd_impact_subset(model, &samples, layer)?);
        }
    }
    let [g_pd, g_pf, g_sd, g_sf] = take_four(grad_ms);
    let [f_pd, f_pf, f_sd, f_sf] = take_four(fwd_ms);
    let grad = SubsetMatrices {
        primary_deprived: g_pd,
        primary_favored: g_pf,
        secondary_deprived: g_sd,
        secondary_favored: g_sf,
    };
    let fwd = SubsetMatrices {
        primary_deprived: f_pd,
        primary_favored: f_pf,
        secondary_deprived: f_sd,
        secondary_favored: f_sf,
    };

    let scored = score_weights(&grad, &fwd, &bias_weights, layer)?;
    let pareto = pareto_front(&scored, top_k)?;
    Ok(LocalizationResult {
        setting,
        target_layer: layer,
        seed,
        deprived,
        bias_weights: Some(bias_weights),
        subset_counts,
        scored,
        pareto,
        nothing_to_localize: false,
        balanced_positive_len,
    })
}

fn intersect_sorted(cell: &[usize], keep: &[usize]) -> Vec<usize> {
    cell.iter()
        .copied()
        .filter(|i| keep.binary_search(i).is_ok())
        .collect()
}

fn take_four(mut v: Vec<Matrix>) -> [Matrix; 4] {
    let d = v.pop().unwrap();
    let c = v.pop().unwrap();
    let b = v.pop().unwrap();
    let a = v.pop().unwrap();
    [a, b, c, d]
}
