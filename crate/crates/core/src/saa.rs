//! Scenario-based baselines.
//!
//! The sample-average stochastic program chooses first-stage earliest starts
//! `z` minimizing
//!
//! ```text
//! (1/|Ω|) Σ_ω makespan(ω) + ρ Σ_ω Σ_j (start_j(ω) − z_j)
//! ```
//!
//! where the per-scenario starts are produced by the unit-postponement
//! recourse in [`crate::repair`]. The search is heuristic: SGS schedules on
//! quantile mixes of the scenario durations seed a first-improvement local
//! search over single-start and suffix shifts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, Scenario, Time};
use crate::repair::{simulate, PenaltyCoefficient};
use crate::scalar::Real;
use crate::scenario::{base_stats, rng_from_seed, stats_of, BaseStats, Dataset};
use crate::scheduler::{solve_min_makespan, Optimality, Schedule, SolveBudget};

/// Default number of scenarios handed to the stochastic program.
pub const DEFAULT_SAA_SCENARIOS: usize = 20;

const QUANTILES: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaaConfig<F> {
    pub rho: PenaltyCoefficient<F>,
    /// Divide the penalty term by the scenario count as well.
    pub average_penalty: bool,
    /// Budget for the schedules that seed the search.
    pub budget: SolveBudget,
    /// Objective evaluations (each simulates every scenario).
    pub max_evaluations: u64,
    pub random_candidates: usize,
    pub seed: u64,
}

impl<F: Real> Default for SaaConfig<F> {
    fn default() -> Self {
        Self {
            rho: PenaltyCoefficient::new(F::one()).expect("valid"),
            average_penalty: false,
            budget: SolveBudget::default(),
            max_evaluations: 2_000,
            random_candidates: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint<F> {
    pub evaluation: u64,
    pub candidate: F,
    pub best: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaaSolution<F> {
    /// First-stage starts. `assumed_durations` are the rounded scenario
    /// means and `makespan` is the planned makespan under them.
    pub first_stage: Schedule,
    pub objective: F,
    pub mean_makespan: F,
    pub deviation_total: u64,
    pub scenario_count: usize,
    pub trace: Vec<TracePoint<F>>,
}

impl<F: Real + Serialize> SaaSolution<F> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("evaluation,candidate,best\n");
        for p in &self.trace {
            out.push_str(&format!("{},{},{}\n", p.evaluation, p.candidate, p.best));
        }
        out
    }
}

/// Objective value of a first-stage vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaaObjective<F> {
    pub objective: F,
    pub mean_makespan: F,
    pub deviation_total: u64,
}

/// Evaluate `starts` on every scenario with the repair simulator.
pub fn saa_objective<F: Real>(
    instance: &Instance,
    starts: &[Time],
    scenarios: &[Scenario],
    rho: PenaltyCoefficient<F>,
    average_penalty: bool,
) -> Result<SaaObjective<F>> {
    if scenarios.is_empty() {
        return Err(Error::Degenerate("no scenarios".into()));
    }
    let mut makespans: u64 = 0;
    let mut deviations: u64 = 0;
    for y in scenarios {
        let corrected = simulate(instance, starts, y)?;
        makespans += corrected
            .iter()
            .zip(&y.durations)
            .map(|(s, d)| u64::from(s + d))
            .max()
            .unwrap_or(0);
        deviations += corrected
            .iter()
            .zip(starts)
            .map(|(&c, &z)| u64::from(c - z))
            .sum::<u64>();
    }
    let count = F::of_u64(scenarios.len() as u64);
    let mean_makespan = F::of_u64(makespans) / count;
    let mut penalty = rho.apply(deviations);
    if average_penalty {
        penalty = penalty / count;
    }
    Ok(SaaObjective {
        objective: mean_makespan + penalty,
        mean_makespan,
        deviation_total: deviations,
    })
}

/// Nearest-rank empirical quantile per task.
fn quantile_durations(scenarios: &[Scenario], q: f64) -> Scenario {
    let n = scenarios[0].len();
    let k = scenarios.len();
    let rank = ((q * k as f64).ceil() as usize).clamp(1, k) - 1;
    Scenario::new(
        (0..n)
            .map(|j| {
                let mut col: Vec<Time> = scenarios.iter().map(|s| s.durations[j]).collect();
                col.sort_unstable();
                col[rank]
            })
            .collect(),
    )
}

struct Search<'a, F> {
    instance: &'a Instance,
    scenarios: &'a [Scenario],
    config: &'a SaaConfig<F>,
    evaluations: u64,
    best: Option<(Vec<Time>, SaaObjective<F>)>,
    trace: Vec<TracePoint<F>>,
}

impl<F: Real> Search<'_, F> {
    fn exhausted(&self) -> bool {
        self.evaluations >= self.config.max_evaluations
    }

    /// Score a candidate; true if it became the new best.
    fn offer(&mut self, starts: Vec<Time>) -> Result<bool> {
        let value = saa_objective(
            self.instance,
            &starts,
            self.scenarios,
            self.config.rho,
            self.config.average_penalty,
        )?;
        self.evaluations += 1;
        let better = self
            .best
            .as_ref()
            .is_none_or(|(_, b)| value.objective < b.objective);
        if better {
            self.best = Some((starts, value));
        }
        let best = self.best.as_ref().expect("set above").1.objective;
        self.trace.push(TracePoint {
            evaluation: self.evaluations,
            candidate: value.objective,
            best,
        });
        Ok(better)
    }

    fn neighbours(starts: &[Time]) -> Vec<Vec<Time>> {
        let mut out = Vec::new();
        for j in 0..starts.len() {
            if starts[j] > 0 {
                let mut z = starts.to_vec();
                z[j] -= 1;
                out.push(z);
            }
            let mut z = starts.to_vec();
            z[j] += 1;
            out.push(z);
        }
        let mut levels: Vec<Time> = starts.to_vec();
        levels.sort_unstable();
        levels.dedup();
        for &level in &levels {
            let later: Vec<usize> = (0..starts.len()).filter(|&j| starts[j] >= level).collect();
            if level > 0 {
                let mut z = starts.to_vec();
                for &j in &later {
                    z[j] -= 1;
                }
                out.push(z);
            }
            let mut z = starts.to_vec();
            for &j in &later {
                z[j] += 1;
            }
            out.push(z);
        }
        out
    }
}

/// Heuristic solution of the sample-average program over `scenarios`.
pub fn solve_saa<F: Real>(
    instance: &Instance,
    scenarios: &[Scenario],
    config: &SaaConfig<F>,
) -> Result<SaaSolution<F>> {
    if scenarios.is_empty() {
        return Err(Error::Degenerate("SAA needs at least one scenario".into()));
    }
    for y in scenarios {
        instance.check_scenario(y)?;
    }
    let stats: BaseStats<F> = stats_of(instance, scenarios)?;
    let mean_durations = stats.rounded_means(instance);

    let mut seeds: Vec<Scenario> = vec![mean_durations.clone()];
    seeds.extend(QUANTILES.iter().map(|&q| quantile_durations(scenarios, q)));
    let mut rng = rng_from_seed(config.seed);
    for _ in 0..config.random_candidates {
        let quantiles: Vec<Scenario> = QUANTILES
            .iter()
            .map(|&q| quantile_durations(scenarios, q))
            .collect();
        let mixed = (0..instance.task_count())
            .map(|j| quantiles[rng.gen_range(0..quantiles.len())].durations[j])
            .collect();
        seeds.push(Scenario::new(mixed));
    }
    let mut unique: Vec<Scenario> = Vec::new();
    for s in seeds {
        if !unique.contains(&s) {
            unique.push(s);
        }
    }

    let mut search = Search {
        instance,
        scenarios,
        config,
        evaluations: 0,
        best: None,
        trace: Vec::new(),
    };
    let mut tried: Vec<Vec<Time>> = Vec::new();
    for durations in &unique {
        let schedule = solve_min_makespan(instance, durations, &config.budget)?;
        if tried.contains(&schedule.starts) {
            continue;
        }
        tried.push(schedule.starts.clone());
        search.offer(schedule.starts)?;
        if search.exhausted() {
            break;
        }
    }

    let mut improved = true;
    while improved && !search.exhausted() {
        improved = false;
        let current = search.best.as_ref().expect("seeded").0.clone();
        for candidate in Search::<F>::neighbours(&current) {
            if search.exhausted() {
                break;
            }
            if search.offer(candidate)? {
                improved = true;
                break;
            }
        }
    }

    let (starts, value) = search.best.expect("at least one candidate evaluated");
    let planned = starts
        .iter()
        .zip(&mean_durations.durations)
        .map(|(s, d)| s + d)
        .max()
        .unwrap_or(0);
    Ok(SaaSolution {
        first_stage: Schedule {
            starts,
            makespan: planned,
            assumed_durations: mean_durations,
            optimality: Optimality::Heuristic,
        },
        objective: value.objective,
        mean_makespan: value.mean_makespan,
        deviation_total: value.deviation_total,
        scenario_count: scenarios.len(),
        trace: search.trace,
    })
}

/// Solve on the rounded training means.
pub fn deterministic_baseline(
    instance: &Instance,
    dataset: &Dataset,
    budget: &SolveBudget,
) -> Result<Schedule> {
    let stats: BaseStats<f64> = base_stats(instance, dataset)?;
    solve_min_makespan(instance, &stats.rounded_means(instance), budget)
}
