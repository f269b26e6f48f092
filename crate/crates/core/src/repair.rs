//! Particle-swarm search over the localized weights, minimizing a
//! group-fairness metric on the repair set.
//!
//! Each particle is a candidate assignment to the localized weight slots.
//! Particles are initialized from a per-layer Gaussian fitted to the
//! existing weights, with one particle pinned to the original values so the
//! identity patch is always in the searched space. Personal and global
//! bests accept equal-or-better fitness; the stagnation counter that drives
//! early stopping resets only on strict improvement.
//!
//! The returned patch never degrades the optimized metric on the repair
//! set: when the search finds nothing strictly better than the original
//! weights, the identity patch is returned.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::fairness::{self, FairnessReport, MetricKind};
use crate::localize::{LocalizationResult, WeightCoord};
use crate::net::Model;

/// Floor for the per-layer standard deviation used by the Gaussian
/// initialization, so degenerate layers still produce distinct particles.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// Search hyperparameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RepairConfig {
    pub metric: MetricKind,
    pub particles: usize,
    pub max_generations: u32,
    pub stagnation_limit: u32,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Element-wise velocity bound; when unset, each slot uses three times
    /// the standard deviation of its layer's weights.
    pub velocity_clamp: Option<f64>,
    /// Class treated as the positive outcome by the fitness metric.
    pub positive_class: u8,
    pub seed: u64,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            metric: MetricKind::Spd,
            particles: 100,
            max_generations: 100,
            stagnation_limit: 10,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            velocity_clamp: None,
            positive_class: 1,
            seed: 0,
        }
    }
}

impl RepairConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::InvalidConfig(String::from(
                "particles must be at least 2",
            )));
        }
        if self.max_generations < 1 || self.stagnation_limit < 1 {
            return Err(Error::InvalidConfig(String::from(
                "generation and stagnation limits must be at least 1",
            )));
        }
        if !(0.0..1.0).contains(&self.inertia) {
            return Err(Error::InvalidConfig(String::from(
                "inertia must lie in [0, 1)",
            )));
        }
        if self.cognitive <= 0.0 || self.social <= 0.0 {
            return Err(Error::InvalidConfig(String::from(
                "cognitive and social factors must be positive",
            )));
        }
        if let Some(clamp) = self.velocity_clamp {
            if clamp <= 0.0 || clamp.is_nan() {
                return Err(Error::InvalidConfig(String::from(
                    "velocity clamp must be positive",
                )));
            }
        }
        Ok(())
    }
}

/// One candidate weight assignment with its personal best.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub pbest_position: Vec<f64>,
    pub pbest_fitness: f64,
}

/// The whole particle population plus the global best found so far.
#[derive(Debug, Clone)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub gbest_position: Vec<f64>,
    pub gbest_fitness: f64,
    pub generation: u32,
    pub stagnation: u32,
    clamp: Vec<f64>,
    rng: ChaCha8Rng,
    evaluated: bool,
}

impl Swarm {
    /// Builds a swarm from explicit initial positions with zero velocities.
    /// Fitness values are assigned by the first [`pso_step`] (or by
    /// [`Swarm::evaluate_initial`]).
    pub fn from_positions(positions: Vec<Vec<f64>>, clamp: Vec<f64>, seed: u64) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidConfig(String::from(
                "a swarm needs at least 2 particles",
            )));
        }
        let dims = positions[0].len();
        if dims == 0 {
            return Err(Error::NothingToRepair);
        }
        if clamp.len() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: clamp.len(),
            });
        }
        let mut particles = Vec::with_capacity(positions.len());
        for position in positions {
            if position.len() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual: position.len(),
                });
            }
            if let Some(slot) = position.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinitePosition { slot });
            }
            particles.push(Particle {
                pbest_position: position.clone(),
                velocity: vec![0.0; dims],
                position,
                pbest_fitness: f64::INFINITY,
            });
        }
        let gbest_position = particles[0].position.clone();
        Ok(Swarm {
            particles,
            gbest_position,
            gbest_fitness: f64::INFINITY,
            generation: 0,
            stagnation: 0,
            clamp,
            rng: ChaCha8Rng::seed_from_u64(seed),
            evaluated: false,
        })
    }

    pub fn dims(&self) -> usize {
        self.gbest_position.len()
    }

    /// Scores the initial positions and seeds the personal and global
    /// bests. No-op when already evaluated.
    pub fn evaluate_initial<F: FnMut(&[f64]) -> f64>(&mut self, mut eval: F) {
        if self.evaluated {
            return;
        }
        for particle in self.particles.iter_mut() {
            particle.pbest_fitness = eval(&particle.position);
            particle.pbest_position = particle.position.clone();
        }
        for particle in &self.particles {
            if particle.pbest_fitness <= self.gbest_fitness {
                self.gbest_fitness = particle.pbest_fitness;
                self.gbest_position = particle.pbest_position.clone();
            }
        }
        self.evaluated = true;
    }
}

/// Gaussian-initialized swarm over the given weight coordinates: slot
/// values are drawn from `Normal(mean_l, sigma_l)` of the coordinate's
/// layer, particle 0 is pinned to the original weights, and velocities
/// start at zero.
pub fn init_swarm(model: &Model, coords: &[WeightCoord], config: &RepairConfig) -> Result<Swarm> {
    config.validate()?;
    if coords.is_empty() {
        return Err(Error::NothingToRepair);
    }
    let mut originals = Vec::with_capacity(coords.len());
    let mut stats = Vec::with_capacity(coords.len());
    let mut clamp = Vec::with_capacity(coords.len());
    for coord in coords {
        let layer = model.layer(coord.layer)?;
        if coord.row >= layer.in_dim() || coord.col >= layer.out_dim() {
            return Err(Error::CoordOutOfRange {
                layer: coord.layer,
                row: coord.row,
                col: coord.col,
            });
        }
        originals.push(layer.weights().get(coord.row, coord.col));
        let (mean, sigma) = model.layer_weight_stats(coord.layer)?;
        let sigma = sigma.max(SIGMA_FLOOR);
        stats.push((mean, sigma));
        clamp.push(config.velocity_clamp.unwrap_or(3.0 * sigma));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut positions = Vec::with_capacity(config.particles);
    positions.push(originals);
    for _ in 1..config.particles {
        let position = stats
            .iter()
            .map(|&(mean, sigma)| Normal::new(mean, sigma).unwrap().sample(&mut rng))
            .collect();
        positions.push(position);
    }
    let mut swarm = Swarm::from_positions(positions, clamp, config.seed)?;
    // continue the initialization stream for the velocity updates
    swarm.rng = rng;
    Ok(swarm)
}

/// New model with the given weight cells replaced. Every other parameter is
/// bit-identical to the input model.
pub fn apply_patch(model: &Model, patch: &[(WeightCoord, f64)]) -> Result<Model> {
    let mut patched = model.clone();
    for &(coord, value) in patch {
        if !value.is_finite() {
            return Err(Error::InvalidModel(format!(
                "patch value for ({}, {}, {}) is not finite",
                coord.layer, coord.row, coord.col
            )));
        }
        patched.set_weight(coord.layer, coord.row, coord.col, value)?;
    }
    Ok(patched)
}

/// Fitness of one candidate position: the chosen metric's magnitude on the
/// repair set under the patched model, with class 1 as the positive
/// outcome. Undefined metrics score +infinity, so degenerate patches that
/// empty a conditioning class can never win.
pub fn fitness(
    model: &Model,
    coords: &[WeightCoord],
    position: &[f64],
    dataset: &LabeledDataset,
    metric: MetricKind,
) -> Result<f64> {
    fitness_with_positive(model, coords, position, dataset, metric, 1)
}

pub fn fitness_with_positive(
    model: &Model,
    coords: &[WeightCoord],
    position: &[f64],
    dataset: &LabeledDataset,
    metric: MetricKind,
    positive: u8,
) -> Result<f64> {
    if coords.len() != position.len() {
        return Err(Error::DimensionMismatch {
            expected: coords.len(),
            actual: position.len(),
        });
    }
    if let Some(slot) = position.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinitePosition { slot });
    }
    let patch: Vec<(WeightCoord, f64)> = coords
        .iter()
        .copied()
        .zip(position.iter().copied())
        .collect();
    let patched = apply_patch(model, &patch)?;
    let counts = fairness::group_counts_with_model(&patched, dataset, positive)?;
    Ok(fairness::metric_value(&counts, metric).unwrap_or(f64::INFINITY))
}

/// Advances the swarm one generation: velocity and position updates for
/// every particle, one fitness evaluation each, then a deterministic
/// reduction of the personal bests into the global best in particle-index
/// order. Equal fitness updates the bests but does not reset stagnation.
pub fn pso_step<F: FnMut(&[f64]) -> f64>(swarm: &mut Swarm, mut eval: F, config: &RepairConfig) {
    if !swarm.evaluated {
        swarm.evaluate_initial(&mut eval);
    }
    let dims = swarm.dims();
    let prev_gbest = swarm.gbest_fitness;
    let Swarm {
        particles,
        gbest_position,
        clamp,
        rng,
        ..
    } = &mut *swarm;
    for particle in particles.iter_mut() {
        for d in 0..dims {
            let r1: f64 = rng.gen();
            let r2: f64 = rng.gen();
            let v = config.inertia * particle.velocity[d]
                + config.cognitive * r1 * (particle.pbest_position[d] - particle.position[d])
                + config.social * r2 * (gbest_position[d] - particle.position[d]);
            particle.velocity[d] = v.clamp(-clamp[d], clamp[d]);
            particle.position[d] += particle.velocity[d];
        }
        let fit = eval(&particle.position);
        if fit <= particle.pbest_fitness {
            particle.pbest_fitness = fit;
            particle.pbest_position.copy_from_slice(&particle.position);
        }
    }
    for particle in &swarm.particles {
        if particle.pbest_fitness <= swarm.gbest_fitness {
            swarm.gbest_fitness = particle.pbest_fitness;
            swarm.gbest_position.clone_from(&particle.pbest_position);
        }
    }
    if swarm.gbest_fitness < prev_gbest {
        swarm.stagnation = 0;
    } else {
        swarm.stagnation += 1;
    }
    swarm.generation += 1;
}

/// One replaced weight cell.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PatchEntry {
    pub coord: WeightCoord,
    pub old_value: f64,
    pub new_value: f64,
}

/// Outcome of a repair run.
#[derive(Debug, Clone, PartialEq)]
pub struct RepairResult {
    pub patched_model: Model,
    /// Replacements applied to the original model; empty for the identity
    /// fallback.
    pub patch: Vec<PatchEntry>,
    /// Global-best fitness after initialization and after each generation.
    pub fitness_history: Vec<f64>,
    pub original_fitness: f64,
    pub best_fitness: f64,
    /// Set when no candidate strictly improved on the original weights and
    /// the original model was kept.
    pub identity_fallback: bool,
    pub generations_run: u32,
    pub stopped_early: bool,
    pub before_repair: FairnessReport,
    pub after_repair: FairnessReport,
    pub before_test: Option<FairnessReport>,
    pub after_test: Option<FairnessReport>,
}

/// Runs the particle swarm over the localized weights and applies the best
/// replacement found. Stops after `max_generations` or once the global best
/// has not strictly improved for `stagnation_limit` consecutive
/// generations. The patch is the identity whenever the search cannot
/// strictly improve the metric on the repair set.
pub fn repair(
    model: &Model,
    dataset_rep: &LabeledDataset,
    dataset_test: Option<&LabeledDataset>,
    localization: &LocalizationResult,
    config: &RepairConfig,
) -> Result<RepairResult> {
    config.validate()?;
    let coords = &localization.pareto;
    if coords.is_empty() {
        return Err(Error::NothingToRepair);
    }

    let annotated_rep = dataset_rep.annotate_predictions(model)?;
    let before_repair = fairness::report_with_positive(&annotated_rep, config.positive_class)?;
    let before_test = match dataset_test {
        Some(test) => {
            let annotated = test.annotate_predictions(model)?;
            Some(fairness::report_with_positive(
                &annotated,
                config.positive_class,
            )?)
        }
        None => None,
    };

    let originals: Vec<f64> = coords
        .iter()
        .map(|c| Ok(model.layer(c.layer)?.weights().get(c.row, c.col)))
        .collect::<Result<_>>()?;
    let original_fitness = fitness_with_positive(
        model,
        coords,
        &originals,
        dataset_rep,
        config.metric,
        config.positive_class,
    )?;

    let mut eval = |position: &[f64]| -> f64 {
        fitness_with_positive(
            model,
            coords,
            position,
            dataset_rep,
            config.metric,
            config.positive_class,
        )
        .unwrap_or(f64::INFINITY)
    };

    let mut swarm = init_swarm(model, coords, config)?;
    swarm.evaluate_initial(&mut eval);
    let mut fitness_history = vec![swarm.gbest_fitness];
    let mut stopped_early = false;
    for _ in 0..config.max_generations {
        pso_step(&mut swarm, &mut eval, config);
        fitness_history.push(swarm.gbest_fitness);
        if swarm.stagnation >= config.stagnation_limit {
            stopped_early = true;
            break;
        }
    }

    let identity_fallback = swarm.gbest_fitness >= original_fitness;
    let (patched_model, patch, best_fitness) = if identity_fallback {
        (model.clone(), Vec::new(), original_fitness)
    } else {
        let patch: Vec<PatchEntry> = coords
            .iter()
            .zip(originals.iter().zip(&swarm.gbest_position))
            .map(|(&coord, (&old_value, &new_value))| PatchEntry {
                coord,
                old_value,
                new_value,
            })
            .collect();
        let assignments: Vec<(WeightCoord, f64)> =
            patch.iter().map(|p| (p.coord, p.new_value)).collect();
        (
            apply_patch(model, &assignments)?,
            patch,
            swarm.gbest_fitness,
        )
    };

    let annotated_rep = dataset_rep.annotate_predictions(&patched_model)?;
    let after_repair = fairness::report_with_positive(&annotated_rep, config.positive_class)?;
    let after_test = match dataset_test {
        Some(test) => {
            let annotated = test.annotate_predictions(&patched_model)?;
            Some(fairness::report_with_positive(
                &annotated,
                config.positive_class,
            )?)
        }
        None => None,
    };

    Ok(RepairResult {
        patched_model,
        patch,
        fitness_history,
        original_fitness,
        best_fitness,
        identity_fallback,
        generations_run: swarm.generation,
        stopped_early,
        before_repair,
        after_repair,
        before_test,
        after_test,
    })
}
