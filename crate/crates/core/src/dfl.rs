//! Decision-focused training of a per-task duration estimator.
//!
//! Predictions are drawn from independent Normals
//! `ŷ_j ~ N(μ_j = θ_μ,j · ȳ_j, σ_j = θ_σ,j · σ̄_j)` and rounded to integer
//! durations before they reach the solver. The post-hoc regret of the
//! resulting schedule is a black box in `ŷ`, so `θ` is trained with the
//! score-function estimator `L · ∇_θ log p_θ(g)`, evaluated at the
//! continuous pre-rounding draw `g`. After training, `ŷ = round(μ)` is the
//! point prediction.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, Scenario};
use crate::regret::{perfect_schedules, regret_of_schedule};
use crate::repair::PenaltyCoefficient;
use crate::scalar::{round_clamp, Real};
use crate::scenario::{base_stats, rng_from_seed, BaseStats, Dataset, SIGMA_FLOOR};
use crate::scheduler::{solve_min_makespan, Schedule, SolveBudget};

/// Parameters are projected onto `[THETA_MIN, theta_max]` after every step.
pub const THETA_MIN: f64 = 1e-3;
pub const DEFAULT_THETA_MAX: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorParams<F> {
    pub theta_mu: Vec<F>,
    pub theta_sigma: Vec<F>,
    pub means: Vec<F>,
    pub stddevs: Vec<F>,
    /// Tasks that are sampled (nonzero baseline duration).
    pub active: Vec<bool>,
    /// Active tasks whose training durations actually vary; only these
    /// receive gradient.
    pub trainable: Vec<bool>,
}

impl<F: Real> EstimatorParams<F> {
    /// `θ = 1`, so the estimator starts at the base statistics.
    pub fn init(instance: &Instance, base: &BaseStats<F>) -> Result<Self> {
        let n = instance.task_count();
        if base.len() != n || base.stddevs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: base.len(),
            });
        }
        let floor = F::of(SIGMA_FLOOR);
        let active: Vec<bool> = instance.tasks.iter().map(|t| t.duration > 0).collect();
        let trainable = active
            .iter()
            .zip(&base.stddevs)
            .map(|(&a, &s)| a && s > floor)
            .collect();
        Ok(Self {
            theta_mu: vec![F::one(); n],
            theta_sigma: vec![F::one(); n],
            means: base.means.clone(),
            stddevs: base.stddevs.clone(),
            active,
            trainable,
        })
    }

    pub fn len(&self) -> usize {
        self.theta_mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_mu.is_empty()
    }

    pub fn mu(&self, j: usize) -> F {
        self.theta_mu[j] * self.means[j]
    }

    pub fn sigma(&self, j: usize) -> F {
        (self.theta_sigma[j] * self.stddevs[j]).max(F::of(SIGMA_FLOOR))
    }

    pub fn mus(&self) -> Vec<F> {
        (0..self.len()).map(|j| self.mu(j)).collect()
    }

    pub fn sigmas(&self) -> Vec<F> {
        (0..self.len()).map(|j| self.sigma(j)).collect()
    }

    /// Log-density of the continuous draw `g` over active tasks.
    pub fn log_density(&self, g: &[F]) -> F {
        let half_log_two_pi = F::of(0.5 * (2.0 * std::f64::consts::PI).ln());
        (0..self.len())
            .filter(|&j| self.active[j])
            .map(|j| {
                let s = self.sigma(j);
                let z = (g[j] - self.mu(j)) / s;
                -s.ln() - half_log_two_pi - F::of(0.5) * z * z
            })
            .sum()
    }

    fn project(&mut self, max: F) {
        let min = F::of(THETA_MIN);
        for v in self.theta_mu.iter_mut().chain(self.theta_sigma.iter_mut()) {
            if !(*v >= min) {
                *v = min;
            } else if *v > max {
                *v = max;
            }
        }
    }

    pub fn to_json(&self) -> String
    where
        F: Serialize,
    {
        serde_json::to_string_pretty(self).expect("params serialize")
    }
}

/// A sampled prediction: rounded durations and the continuous draw behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<F> {
    pub durations: Scenario,
    pub continuous: Vec<F>,
}

/// Sample `ŷ ~ p_θ`. Inactive tasks get duration 0 and continuous value 0.
pub fn sample_prediction<F: Real, R: Rng + ?Sized>(
    params: &EstimatorParams<F>,
    rng: &mut R,
) -> Prediction<F> {
    let mut continuous = Vec::with_capacity(params.len());
    let mut durations = Vec::with_capacity(params.len());
    for j in 0..params.len() {
        if params.active[j] {
            let g = params.mu(j) + params.sigma(j) * F::standard_normal(rng);
            continuous.push(g);
            durations.push(round_clamp(g, 1));
        } else {
            continuous.push(F::zero());
            durations.push(0);
        }
    }
    Prediction {
        durations: Scenario::new(durations),
        continuous,
    }
}

/// Point prediction `round(μ)`, clamped to at least one on active tasks.
pub fn predict<F: Real>(params: &EstimatorParams<F>) -> Scenario {
    Scenario::new(
        (0..params.len())
            .map(|j| {
                if params.active[j] {
                    round_clamp(params.mu(j), 1)
                } else {
                    0
                }
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradient<F> {
    pub theta_mu: Vec<F>,
    pub theta_sigma: Vec<F>,
}

impl<F: Real> Gradient<F> {
    pub fn zeros(n: usize) -> Self {
        Self {
            theta_mu: vec![F::zero(); n],
            theta_sigma: vec![F::zero(); n],
        }
    }

    fn add_scaled(&mut self, other: &Self, scale: F) {
        for (a, &b) in self.theta_mu.iter_mut().zip(&other.theta_mu) {
            *a = *a + b * scale;
        }
        for (a, &b) in self.theta_sigma.iter_mut().zip(&other.theta_sigma) {
            *a = *a + b * scale;
        }
    }
}

/// `loss · ∇_θ log p_θ(g)`.
///
/// Per task: `∂/∂θ_μ = L ȳ (g − μ) / σ²` and
/// `∂/∂θ_σ = L σ̄ ((g − μ)² − σ²) / σ³`. The σ component is zero while the
/// floor on σ is binding, and both are zero for tasks that are not trainable.
pub fn score_gradient<F: Real>(params: &EstimatorParams<F>, g: &[F], loss: F) -> Gradient<F> {
    let n = params.len();
    let mut grad = Gradient::zeros(n);
    let floor = F::of(SIGMA_FLOOR);
    for j in 0..n {
        if !params.trainable[j] {
            continue;
        }
        let mu = params.mu(j);
        let sigma = params.sigma(j);
        let dev = g[j] - mu;
        let var = sigma * sigma;
        grad.theta_mu[j] = loss * params.means[j] * dev / var;
        if params.theta_sigma[j] * params.stddevs[j] > floor {
            grad.theta_sigma[j] = loss * params.stddevs[j] * (dev * dev - var) / (var * sigma);
        }
    }
    grad
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<F> {
    pub learning_rate: F,
    pub epochs: usize,
    pub batch_size: usize,
    pub samples_per_step: usize,
    pub seed: u64,
    pub rho: PenaltyCoefficient<F>,
    pub budget: SolveBudget,
    /// Subtract the running mean of past losses from each loss.
    pub baseline: bool,
    /// Upper end of the projection box; keeps sampled durations bounded
    /// when a noisy step overshoots.
    pub theta_max: F,
}

impl<F: Real> Default for TrainConfig<F> {
    fn default() -> Self {
        Self {
            learning_rate: F::of(0.01),
            epochs: 50,
            batch_size: 1,
            samples_per_step: 1,
            seed: 0,
            rho: PenaltyCoefficient::new(F::one()).expect("valid"),
            budget: SolveBudget::default(),
            baseline: false,
            theta_max: F::of(DEFAULT_THETA_MAX),
        }
    }
}

impl<F: Real> TrainConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= F::zero()) || !self.learning_rate.is_finite() {
            return Err(Error::Config(
                "learning rate must be finite and >= 0".into(),
            ));
        }
        if !(self.theta_max >= F::of(THETA_MIN)) || !self.theta_max.is_finite() {
            return Err(Error::Config(format!(
                "theta_max must be finite and >= {THETA_MIN}"
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.samples_per_step == 0 {
            return Err(Error::Config(
                "epochs, batch size and samples per step must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats<F> {
    pub epoch: usize,
    pub steps: usize,
    pub mean_pregret: F,
    pub mean_theta_mu: F,
    pub mean_theta_sigma: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<F> {
    pub params: EstimatorParams<F>,
    pub curve: Vec<EpochStats<F>>,
}

impl<F: Real> TrainOutcome<F> {
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("epoch,steps,mean_pregret,mean_theta_mu,mean_theta_sigma\n");
        for e in &self.curve {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch, e.steps, e.mean_pregret, e.mean_theta_mu, e.mean_theta_sigma
            ));
        }
        out
    }
}

const SOLVE_CACHE_LIMIT: usize = 20_000;

/// Score-function training over the training split.
///
/// Per epoch and batch, for every training scenario `y_i` in the batch:
/// sample `ŷ`, solve on it, execute under `y_i`, and weight the score by the
/// post-hoc regret; then take one averaged gradient step and project `θ`.
pub fn train<F: Real>(
    instance: &Instance,
    dataset: &Dataset,
    config: &TrainConfig<F>,
) -> Result<TrainOutcome<F>> {
    config.validate()?;
    let base: BaseStats<F> = base_stats(instance, dataset)?;
    let params = EstimatorParams::init(instance, &base)?;
    train_from(instance, &dataset.train, params, config)
}

pub fn train_from<F: Real>(
    instance: &Instance,
    train_set: &[Scenario],
    mut params: EstimatorParams<F>,
    config: &TrainConfig<F>,
) -> Result<TrainOutcome<F>> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Degenerate("empty training split".into()));
    }
    let perfect = perfect_schedules(instance, train_set, &config.budget)?;
    let mut rng = rng_from_seed(config.seed);
    let mut cache: HashMap<Scenario, Schedule> = HashMap::new();
    let mut curve = Vec::with_capacity(config.epochs);
    let mut loss_sum = F::zero();
    let mut loss_count = 0u64;
    let n = params.len();
    let mut steps = 0usize;

    for epoch in 0..config.epochs {
        let mut epoch_total = F::zero();
        let mut epoch_count = 0u64;
        for batch_start in (0..train_set.len()).step_by(config.batch_size) {
            let batch_end = (batch_start + config.batch_size).min(train_set.len());
            let mut grad = Gradient::zeros(n);
            let mut terms = 0u64;
            for i in batch_start..batch_end {
                for _ in 0..config.samples_per_step {
                    let sample = sample_prediction(&params, &mut rng);
                    let first_stage = match cache.get(&sample.durations) {
                        Some(s) => s.clone(),
                        None => {
                            let s =
                                solve_min_makespan(instance, &sample.durations, &config.budget)?;
                            if cache.len() >= SOLVE_CACHE_LIMIT {
                                cache.clear();
                            }
                            cache.insert(sample.durations.clone(), s.clone());
                            s
                        }
                    };
                    let record = regret_of_schedule(
                        instance,
                        &first_stage,
                        &train_set[i],
                        &perfect[i],
                        config.rho,
                        i,
                    )?;
                    let loss = record.pregret;
                    if !loss.is_finite() {
                        return Err(Error::NonFiniteLoss {
                            epoch,
                            scenario: i,
                            value: loss.as_f64(),
                        });
                    }
                    epoch_total = epoch_total + loss;
                    epoch_count += 1;
                    let weight = if config.baseline && loss_count > 0 {
                        loss - loss_sum / F::of_u64(loss_count)
                    } else {
                        loss
                    };
                    loss_sum = loss_sum + loss;
                    loss_count += 1;
                    grad.add_scaled(
                        &score_gradient(&params, &sample.continuous, weight),
                        F::one(),
                    );
                    terms += 1;
                }
            }
            let step = config.learning_rate / F::of_u64(terms);
            for j in 0..n {
                params.theta_mu[j] = params.theta_mu[j] - step * grad.theta_mu[j];
                params.theta_sigma[j] = params.theta_sigma[j] - step * grad.theta_sigma[j];
            }
            params.project(config.theta_max);
            steps += 1;
        }
        let count = F::of_u64(n.max(1) as u64);
        curve.push(EpochStats {
            epoch,
            steps,
            mean_pregret: epoch_total / F::of_u64(epoch_count.max(1)),
            mean_theta_mu: params.theta_mu.iter().copied().sum::<F>() / count,
            mean_theta_sigma: params.theta_sigma.iter().copied().sum::<F>() / count,
        });
    }
    Ok(TrainOutcome { params, curve })
}
