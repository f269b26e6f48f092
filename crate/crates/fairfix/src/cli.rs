//! Command-line surface: `evaluate`, `localize`, and `repair` subcommands
//! over a model file and CSV datasets, producing JSON reports.
//!
//! Flags can also be supplied through a JSON config file (`--config`); a
//! flag given on the command line always wins. All randomness flows from
//! the single `--seed`; `--runs N` repeats the repair with seeds
//! `seed..seed+N`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use fairfix_core::dataset::{LabeledDataset, Setting};
use fairfix_core::fairness::{self, MetricKind};
use fairfix_core::localize::{localize_layer, LocalizationResult};
use fairfix_core::net::Model;
use fairfix_core::repair::{repair, RepairConfig};
use serde::Deserialize;

use crate::csv_io::{load_csv, DatasetMeta};
use crate::model_io::{load_model, save_model};
use crate::report::{
    BatchRun, BatchSummary, DatasetSection, DatasetSummary, FairnessSection, LocalizationReport,
    RepairReport, ResolvedConfig, RunReport, Timings, SCHEMA_VERSION,
};

#[derive(Parser)]
#[command(
    name = "fairfix",
    about = "Localize and repair dense-network weights that drive group-unfair predictions",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report fairness metrics and accuracy of a model on the given data.
    Evaluate(CommonOpts),
    /// Score the target layer's weights and report the suspicious set.
    Localize(CommonOpts),
    /// Localize, then search replacement weights minimizing the chosen
    /// metric, and write the patched model.
    Repair(CommonOpts),
}

#[derive(Args, Default)]
struct CommonOpts {
    /// Model JSON file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Repair dataset CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Held-out test dataset CSV.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Label column name.
    #[arg(long)]
    label: Option<String>,
    /// Sensitive attribute column name.
    #[arg(long)]
    sensitive: Option<String>,
    /// Explicit feature columns (comma separated); default is every column
    /// except the label and sensitive columns.
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    /// same | different | auto (same when label == sensitive column).
    #[arg(long)]
    setting: Option<String>,
    /// Fairness metric: spd | di | eod | fpr.
    #[arg(long)]
    metric: Option<String>,
    /// Target layer index; default is the last layer.
    #[arg(long)]
    layer: Option<usize>,
    /// Keep at most this many weights from the Pareto front.
    #[arg(long = "top-k")]
    top_k: Option<usize>,
    /// Swarm size.
    #[arg(long)]
    particles: Option<usize>,
    /// Maximum generations.
    #[arg(long)]
    generations: Option<u32>,
    /// Stop after this many consecutive generations without improvement.
    #[arg(long)]
    stagnation: Option<u32>,
    /// Velocity inertia weight.
    #[arg(long)]
    inertia: Option<f64>,
    /// Attraction toward a particle's personal best.
    #[arg(long)]
    cognitive: Option<f64>,
    /// Attraction toward the swarm's global best.
    #[arg(long)]
    social: Option<f64>,
    /// Element-wise velocity bound; default is 3x the target layer's weight
    /// standard deviation.
    #[arg(long = "velocity-clamp")]
    velocity_clamp: Option<f64>,
    /// Class index treated as the positive outcome.
    #[arg(long = "positive-class")]
    positive_class: Option<u8>,
    /// Seed for every random choice in the run.
    #[arg(long)]
    seed: Option<u64>,
    /// Repeat the repair with seeds seed..seed+N.
    #[arg(long)]
    runs: Option<u32>,
    /// Output directory for reports and patched models.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Embed the full weight score table in the report.
    #[arg(long = "full-scores", default_value_t = false)]
    full_scores: bool,
}

/// Config-file counterpart of the command-line flags.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<PathBuf>,
    data: Option<PathBuf>,
    test: Option<PathBuf>,
    label: Option<String>,
    sensitive: Option<String>,
    features: Option<Vec<String>>,
    setting: Option<String>,
    metric: Option<String>,
    layer: Option<usize>,
    top_k: Option<usize>,
    particles: Option<usize>,
    generations: Option<u32>,
    stagnation: Option<u32>,
    inertia: Option<f64>,
    cognitive: Option<f64>,
    social: Option<f64>,
    velocity_clamp: Option<f64>,
    positive_class: Option<u8>,
    seed: Option<u64>,
    runs: Option<u32>,
    out: Option<PathBuf>,
    full_scores: Option<bool>,
}

struct Resolved {
    command: &'static str,
    model_path: PathBuf,
    data_path: PathBuf,
    test_path: Option<PathBuf>,
    label: String,
    sensitive: String,
    features: Option<Vec<String>>,
    setting_request: Option<String>,
    metric: MetricKind,
    layer: Option<usize>,
    top_k: Option<usize>,
    pso: RepairConfig,
    runs: u32,
    out: PathBuf,
    full_scores: bool,
}

fn resolve(command: &'static str, opts: CommonOpts) -> anyhow::Result<Resolved> {
    let file: FileConfig = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config file {}", path.display()))?
        }
        None => FileConfig::default(),
    };
    let metric_name = opts
        .metric
        .or(file.metric)
        .unwrap_or_else(|| "spd".to_string());
    let metric = MetricKind::parse(&metric_name)
        .ok_or_else(|| anyhow!("unknown metric '{metric_name}' (expected spd, di, eod or fpr)"))?;
    let pso = RepairConfig {
        metric,
        particles: opts.particles.or(file.particles).unwrap_or(100),
        max_generations: opts.generations.or(file.generations).unwrap_or(100),
        stagnation_limit: opts.stagnation.or(file.stagnation).unwrap_or(10),
        inertia: opts.inertia.or(file.inertia).unwrap_or(0.729),
        cognitive: opts.cognitive.or(file.cognitive).unwrap_or(1.49445),
        social: opts.social.or(file.social).unwrap_or(1.49445),
        velocity_clamp: opts.velocity_clamp.or(file.velocity_clamp),
        positive_class: opts.positive_class.or(file.positive_class).unwrap_or(1),
        seed: opts.seed.or(file.seed).unwrap_or(0),
    };
    if pso.positive_class > 1 {
        bail!("--positive-class must be 0 or 1");
    }
    Ok(Resolved {
        command,
        model_path: opts
            .model
            .or(file.model)
            .ok_or_else(|| anyhow!("--model is required"))?,
        data_path: opts
            .data
            .or(file.data)
            .ok_or_else(|| anyhow!("--data is required"))?,
        test_path: opts.test.or(file.test),
        label: opts
            .label
            .or(file.label)
            .ok_or_else(|| anyhow!("--label is required"))?,
        sensitive: opts
            .sensitive
            .or(file.sensitive)
            .ok_or_else(|| anyhow!("--sensitive is required"))?,
        features: opts.features.or(file.features),
        setting_request: opts.setting.or(file.setting),
        metric,
        layer: opts.layer.or(file.layer),
        top_k: opts.top_k.or(file.top_k),
        pso,
        runs: opts.runs.or(file.runs).unwrap_or(1),
        out: opts
            .out
            .or(file.out)
            .ok_or_else(|| anyhow!("--out is required"))?,
        full_scores: opts.full_scores || file.full_scores.unwrap_or(false),
    })
}

struct Pipeline {
    resolved: Resolved,
    model: Model,
    rep: LabeledDataset,
    rep_meta: DatasetMeta,
    test: Option<(LabeledDataset, DatasetMeta)>,
    setting: Setting,
    target_layer: usize,
    load_ms: u64,
}

impl Pipeline {
    fn load(resolved: Resolved) -> anyhow::Result<Self> {
        let start = Instant::now();
        let model = load_model(&resolved.model_path)?;
        let (rep, rep_meta) = load_csv(
            &resolved.data_path,
            &resolved.label,
            &resolved.sensitive,
            resolved.features.as_deref(),
        )?;
        let test = match &resolved.test_path {
            Some(path) => Some(load_csv(
                path,
                &resolved.label,
                &resolved.sensitive,
                resolved.features.as_deref(),
            )?),
            None => None,
        };
        let setting = match resolved.setting_request.as_deref() {
            None | Some("auto") => {
                if resolved.label == resolved.sensitive {
                    Setting::SameAttribute
                } else {
                    Setting::DifferentAttribute
                }
            }
            Some("same") => Setting::SameAttribute,
            Some("different") => Setting::DifferentAttribute,
            Some(other) => bail!("unknown setting '{other}' (expected same, different or auto)"),
        };
        let target_layer = resolved.layer.unwrap_or(model.last_layer());
        if target_layer >= model.num_layers() {
            bail!(
                "target layer {target_layer} out of range: model has {} layers",
                model.num_layers()
            );
        }
        Ok(Pipeline {
            resolved,
            model,
            rep,
            rep_meta,
            test,
            setting,
            target_layer,
            load_ms: start.elapsed().as_millis() as u64,
        })
    }

    fn resolved_config(&self, seed: u64) -> ResolvedConfig {
        let r = &self.resolved;
        ResolvedConfig {
            command: r.command.to_string(),
            model: r.model_path.display().to_string(),
            data: r.data_path.display().to_string(),
            test: r.test_path.as_ref().map(|p| p.display().to_string()),
            label_col: r.label.clone(),
            sensitive_col: r.sensitive.clone(),
            feature_cols: r.features.clone(),
            setting: self.setting,
            metric: r.metric.name().to_string(),
            target_layer: self.target_layer,
            top_k: r.top_k,
            particles: r.pso.particles,
            generations: r.pso.max_generations,
            stagnation: r.pso.stagnation_limit,
            inertia: r.pso.inertia,
            cognitive: r.pso.cognitive,
            social: r.pso.social,
            velocity_clamp: r.pso.velocity_clamp,
            positive_class: r.pso.positive_class,
            seed,
            runs: r.runs,
            out: r.out.display().to_string(),
        }
    }

    fn dataset_section(&self) -> DatasetSection {
        DatasetSection {
            repair: DatasetSummary::new(
                &self.resolved.data_path.display().to_string(),
                &self.rep,
                &self.rep_meta,
            ),
            test: self.test.as_ref().map(|(ds, meta)| {
                DatasetSummary::new(
                    &self
                        .resolved
                        .test_path
                        .as_ref()
                        .unwrap()
                        .display()
                        .to_string(),
                    ds,
                    meta,
                )
            }),
        }
    }

    /// Fairness reports of the unmodified model on both datasets.
    fn fairness_section(&self) -> anyhow::Result<FairnessSection> {
        let positive = self.resolved.pso.positive_class;
        let annotated = self.rep.annotate_predictions(&self.model)?;
        let repair_report = fairness::report_with_positive(&annotated, positive)?;
        let test_report = match &self.test {
            Some((ds, _)) => {
                let annotated = ds.annotate_predictions(&self.model)?;
                Some(fairness::report_with_positive(&annotated, positive)?)
            }
            None => None,
        };
        Ok(FairnessSection {
            repair: repair_report,
            test: test_report,
        })
    }

    fn localize(&self, seed: u64) -> anyhow::Result<LocalizationResult> {
        Ok(localize_layer(
            &self.model,
            &self.rep,
            self.setting,
            self.target_layer,
            self.resolved.top_k,
            seed,
        )?)
    }
}

fn write_report(out: &Path, name: &str, report: &RunReport) -> anyhow::Result<PathBuf> {
    let path = out.join(name);
    let json = serde_json::to_string_pretty(report).context("serializing report")?;
    std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn cmd_evaluate(pipeline: &Pipeline) -> anyhow::Result<RunReport> {
    let total = Instant::now();
    let eval_start = Instant::now();
    let fairness = pipeline.fairness_section()?;
    let evaluate_ms = eval_start.elapsed().as_millis() as u64;
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        command: "evaluate".to_string(),
        config: pipeline.resolved_config(pipeline.resolved.pso.seed),
        datasets: pipeline.dataset_section(),
        fairness,
        localization: None,
        repair: None,
        warnings: Vec::new(),
        timings: Timings {
            load_ms: pipeline.load_ms,
            evaluate_ms,
            localize_ms: 0,
            repair_ms: 0,
            total_ms: total.elapsed().as_millis() as u64 + pipeline.load_ms,
        },
    })
}

fn cmd_localize(pipeline: &Pipeline) -> anyhow::Result<RunReport> {
    let total = Instant::now();
    let eval_start = Instant::now();
    let fairness = pipeline.fairness_section()?;
    let evaluate_ms = eval_start.elapsed().as_millis() as u64;

    let localize_start = Instant::now();
    let result = pipeline.localize(pipeline.resolved.pso.seed)?;
    let localize_ms = localize_start.elapsed().as_millis() as u64;

    let mut warnings = Vec::new();
    if result.nothing_to_localize {
        warnings.push(
            "nothing to localize: the model classifies every repair sample correctly".to_string(),
        );
    }
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        command: "localize".to_string(),
        config: pipeline.resolved_config(result.seed),
        datasets: pipeline.dataset_section(),
        fairness,
        localization: Some(LocalizationReport::new(
            &result,
            pipeline.resolved.full_scores,
        )),
        repair: None,
        warnings,
        timings: Timings {
            load_ms: pipeline.load_ms,
            evaluate_ms,
            localize_ms,
            repair_ms: 0,
            total_ms: total.elapsed().as_millis() as u64 + pipeline.load_ms,
        },
    })
}

fn cmd_repair_one(pipeline: &Pipeline, seed: u64, model_name: &str) -> anyhow::Result<RunReport> {
    let total = Instant::now();
    let eval_start = Instant::now();
    let fairness = pipeline.fairness_section()?;
    let evaluate_ms = eval_start.elapsed().as_millis() as u64;

    let localize_start = Instant::now();
    let localization = pipeline.localize(seed)?;
    let localize_ms = localize_start.elapsed().as_millis() as u64;

    let repair_start = Instant::now();
    let config = RepairConfig {
        seed,
        ..pipeline.resolved.pso.clone()
    };
    let result = repair(
        &pipeline.model,
        &pipeline.rep,
        pipeline.test.as_ref().map(|(ds, _)| ds),
        &localization,
        &config,
    )?;
    let repair_ms = repair_start.elapsed().as_millis() as u64;

    let model_path = pipeline.resolved.out.join(model_name);
    save_model(&result.patched_model, &model_path)?;

    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        command: "repair".to_string(),
        config: pipeline.resolved_config(seed),
        datasets: pipeline.dataset_section(),
        fairness,
        localization: Some(LocalizationReport::new(
            &localization,
            pipeline.resolved.full_scores,
        )),
        repair: Some(RepairReport::new(
            &result,
            pipeline.resolved.metric.name(),
            &model_path.display().to_string(),
        )),
        warnings: Vec::new(),
        timings: Timings {
            load_ms: pipeline.load_ms,
            evaluate_ms,
            localize_ms,
            repair_ms,
            total_ms: total.elapsed().as_millis() as u64 + pipeline.load_ms,
        },
    })
}

/// Parses the command line and runs the requested command. Reports are
/// written only after the command completes, never partially.
pub fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let (command, opts): (&'static str, CommonOpts) = match cli.command {
        Command::Evaluate(o) => ("evaluate", o),
        Command::Localize(o) => ("localize", o),
        Command::Repair(o) => ("repair", o),
    };
    let resolved = resolve(command, opts)?;
    std::fs::create_dir_all(&resolved.out)
        .with_context(|| format!("creating output directory {}", resolved.out.display()))?;
    let pipeline = Pipeline::load(resolved)?;

    match command {
        "evaluate" => {
            let report = cmd_evaluate(&pipeline)?;
            let path = write_report(&pipeline.resolved.out, "report.json", &report)?;
            println!("report written to {}", path.display());
        }
        "localize" => {
            let report = cmd_localize(&pipeline)?;
            for warning in &report.warnings {
                eprintln!("warning: {warning}");
            }
            let path = write_report(&pipeline.resolved.out, "report.json", &report)?;
            println!("report written to {}", path.display());
        }
        "repair" => {
            let base_seed = pipeline.resolved.pso.seed;
            let runs = pipeline.resolved.runs.max(1);
            if runs == 1 {
                let report = cmd_repair_one(&pipeline, base_seed, "patched_model.json")?;
                let path = write_report(&pipeline.resolved.out, "report.json", &report)?;
                println!("report written to {}", path.display());
            } else {
                let metric = pipeline.resolved.metric;
                let mut batch = Vec::with_capacity(runs as usize);
                for offset in 0..runs as u64 {
                    let seed = base_seed + offset;
                    let report =
                        cmd_repair_one(&pipeline, seed, &format!("patched_model_seed{seed}.json"))?;
                    let path = write_report(
                        &pipeline.resolved.out,
                        &format!("report_seed{seed}.json"),
                        &report,
                    )?;
                    let repair = report.repair.as_ref().expect("repair report present");
                    batch.push(BatchRun {
                        seed,
                        report_path: path.display().to_string(),
                        metric_before: metric_of(&report.fairness.repair, metric),
                        metric_after: metric_of(&repair.after_repair, metric),
                        accuracy_before: report.fairness.repair.accuracy_overall,
                        accuracy_after: repair.after_repair.accuracy_overall,
                        identity_fallback: repair.identity_fallback,
                    });
                    println!("seed {seed}: report written to {}", path.display());
                }
                let summary = BatchSummary {
                    schema_version: SCHEMA_VERSION,
                    metric: metric.name().to_string(),
                    runs: batch,
                };
                let path = pipeline.resolved.out.join("summary.json");
                std::fs::write(&path, serde_json::to_string_pretty(&summary)?)
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("summary written to {}", path.display());
            }
        }
        _ => unreachable!(),
    }
    Ok(())
}

/// Reads the chosen metric's magnitude out of a fairness report.
pub fn metric_of(
    report: &fairfix_core::fairness::FairnessReport,
    metric: MetricKind,
) -> Option<f64> {
    match metric {
        MetricKind::Spd => report.spd,
        MetricKind::Di => report.di_score,
        MetricKind::Eod => report.eod,
        MetricKind::Fpr => report.fpr_gap,
    }
}
