//! Run report schema: everything a command produced, serialized as one JSON
//! document with a stable field order.
//!
//! Reports are deterministic for a fixed config except for the trailing
//! `timings` object; regression tooling compares reports with that single
//! key stripped. Values that can be infinite (fitness of an undefined
//! metric) are stored as `null` via `Option`, so every number in the file
//! re-parses to the identical value.

use fairfix_core::bias::BiasWeights;
use fairfix_core::dataset::Setting;
use fairfix_core::fairness::FairnessReport;
use fairfix_core::localize::{LocalizationResult, SubsetCounts, WeightCoord, WeightScore};
use fairfix_core::repair::{PatchEntry, RepairResult};
use serde::{Deserialize, Serialize};

use crate::csv_io::{DatasetMeta, FeatureEncoding, ValueMap};

pub const SCHEMA_VERSION: u32 = 1;

/// Fully resolved configuration echoed into every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub command: String,
    pub model: String,
    pub data: String,
    pub test: Option<String>,
    pub label_col: String,
    pub sensitive_col: String,
    pub feature_cols: Option<Vec<String>>,
    pub setting: Setting,
    pub metric: String,
    pub target_layer: usize,
    pub top_k: Option<usize>,
    pub particles: usize,
    pub generations: u32,
    pub stagnation: u32,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub velocity_clamp: Option<f64>,
    pub positive_class: u8,
    pub seed: u64,
    pub runs: u32,
    pub out: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinaryColumnSummary {
    #[serde(flatten)]
    pub map: ValueMap,
    /// Sample count per encoded value.
    pub counts: [usize; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub path: String,
    pub rows: usize,
    pub feature_dim: usize,
    pub label: BinaryColumnSummary,
    pub sensitive: BinaryColumnSummary,
    pub features: Vec<FeatureEncoding>,
}

impl DatasetSummary {
    pub fn new(
        path: &str,
        dataset: &fairfix_core::dataset::LabeledDataset,
        meta: &DatasetMeta,
    ) -> Self {
        let mut label_counts = [0usize; 2];
        let mut sensitive_counts = [0usize; 2];
        for sample in &dataset.samples {
            label_counts[sample.y as usize] += 1;
            sensitive_counts[sample.s as usize] += 1;
        }
        DatasetSummary {
            path: path.to_string(),
            rows: dataset.len(),
            feature_dim: dataset.feature_dim,
            label: BinaryColumnSummary {
                map: meta.label.clone(),
                counts: label_counts,
            },
            sensitive: BinaryColumnSummary {
                map: meta.sensitive.clone(),
                counts: sensitive_counts,
            },
            features: meta.features.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSection {
    pub repair: DatasetSummary,
    pub test: Option<DatasetSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FairnessSection {
    pub repair: FairnessReport,
    pub test: Option<FairnessReport>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Class costs with infinite sentinels mapped to `null`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassCostsDto {
    pub cost_class0: Option<f64>,
    pub cost_class1: Option<f64>,
    pub prioritized: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasWeightsDto {
    pub setting: Setting,
    pub deprived_group: u8,
    pub w_primary: f64,
    pub w_secondary: f64,
    pub class_costs: Option<ClassCostsDto>,
}

impl From<&BiasWeights> for BiasWeightsDto {
    fn from(w: &BiasWeights) -> Self {
        BiasWeightsDto {
            setting: w.setting,
            deprived_group: w.deprived_group,
            w_primary: w.w_primary,
            w_secondary: w.w_secondary,
            class_costs: w.class_costs.map(|c| ClassCostsDto {
                cost_class0: finite(c.cost_class0),
                cost_class1: finite(c.cost_class1),
                prioritized: c.prioritized,
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub setting: Setting,
    pub target_layer: usize,
    pub seed: u64,
    pub deprived_group: u8,
    pub no_bias_signal: bool,
    pub prioritized_class: Option<u8>,
    pub bias_weights: Option<BiasWeightsDto>,
    pub subset_counts: SubsetCounts,
    pub balanced_positive_len: usize,
    pub nothing_to_localize: bool,
    pub pareto: Vec<WeightCoord>,
    /// Full score table; populated only on request.
    pub scored: Option<Vec<WeightScore>>,
}

impl LocalizationReport {
    pub fn new(result: &LocalizationResult, full_scores: bool) -> Self {
        LocalizationReport {
            setting: result.setting,
            target_layer: result.target_layer,
            seed: result.seed,
            deprived_group: result.deprived.group,
            no_bias_signal: result.deprived.no_bias_signal,
            prioritized_class: result
                .bias_weights
                .as_ref()
                .and_then(|w| w.prioritized_class()),
            bias_weights: result.bias_weights.as_ref().map(BiasWeightsDto::from),
            subset_counts: result.subset_counts,
            balanced_positive_len: result.balanced_positive_len,
            nothing_to_localize: result.nothing_to_localize,
            pareto: result.pareto.clone(),
            scored: full_scores.then(|| result.scored.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepairReport {
    pub metric: String,
    /// Global-best fitness after initialization and per generation; `null`
    /// marks an undefined (infinite) metric value.
    pub fitness_history: Vec<Option<f64>>,
    pub original_fitness: Option<f64>,
    pub best_fitness: Option<f64>,
    pub identity_fallback: bool,
    pub generations_run: u32,
    pub stopped_early: bool,
    pub patch: Vec<PatchEntry>,
    pub before_repair: FairnessReport,
    pub after_repair: FairnessReport,
    pub before_test: Option<FairnessReport>,
    pub after_test: Option<FairnessReport>,
    pub patched_model_path: String,
}

impl RepairReport {
    pub fn new(result: &RepairResult, metric: &str, patched_model_path: &str) -> Self {
        RepairReport {
            metric: metric.to_string(),
            fitness_history: result.fitness_history.iter().map(|&v| finite(v)).collect(),
            original_fitness: finite(result.original_fitness),
            best_fitness: finite(result.best_fitness),
            identity_fallback: result.identity_fallback,
            generations_run: result.generations_run,
            stopped_early: result.stopped_early,
            patch: result.patch.clone(),
            before_repair: result.before_repair.clone(),
            after_repair: result.after_repair.clone(),
            before_test: result.before_test.clone(),
            after_test: result.after_test.clone(),
            patched_model_path: patched_model_path.to_string(),
        }
    }
}

/// Wall-clock phase timings in milliseconds. Excluded from determinism
/// comparisons.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub load_ms: u64,
    pub evaluate_ms: u64,
    pub localize_ms: u64,
    pub repair_ms: u64,
    pub total_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub config: ResolvedConfig,
    pub datasets: DatasetSection,
    pub fairness: FairnessSection,
    pub localization: Option<LocalizationReport>,
    pub repair: Option<RepairReport>,
    pub warnings: Vec<String>,
    pub timings: Timings,
}

/// One row of the batch summary: the metric before and after repair per
/// seed, ready for box-plotting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchRun {
    pub seed: u64,
    pub report_path: String,
    pub metric_before: Option<f64>,
    pub metric_after: Option<f64>,
    pub accuracy_before: f64,
    pub accuracy_after: f64,
    pub identity_fallback: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchSummary {
    pub schema_version: u32,
    pub metric: String,
    pub runs: Vec<BatchRun>,
}

/// Serializes a report, parses it back, and re-serializes, confirming the
/// byte-stable float representation. Used by tests.
pub fn reserialize(json: &str) -> serde_json::Result<String> {
    let value: serde_json::Value = serde_json::from_str(json)?;
    serde_json::to_string_pretty(&value)
}
