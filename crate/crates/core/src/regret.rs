//! Post-hoc regret of a first-stage decision and paired significance tests.
//!
//! For a prediction `ŷ` and a realization `y`:
//!
//! ```text
//! pregret = makespan(z_corr(ŷ, y), y) - makespan(z*(y), y) + ρ · Σ_j (z_corr_j - z_j)
//! ```
//!
//! where `z = z*(ŷ)` is the schedule computed on the prediction and `z*(y)`
//! the perfect-information schedule. Both solves use the same solver and
//! budget, so heuristic gaps affect both sides alike.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::instance::{Instance, Scenario, Time};
use crate::repair::{execute, PenaltyCoefficient};
use crate::scalar::Real;
use crate::scheduler::{solve_min_makespan, Optimality, Schedule, SolveBudget};

/// Significance level used when flagging method differences.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord<F> {
    pub scenario: usize,
    /// Realized makespan of the corrected schedule.
    pub f_corr: Time,
    /// Makespan of the perfect-information schedule.
    pub f_star: Time,
    pub deviation_sum: u64,
    pub penalty: F,
    pub pregret: F,
    pub normalized_pregret: F,
    pub first_stage_optimality: Optimality,
    pub perfect_optimality: Optimality,
}

impl<F: Real> RegretRecord<F> {
    pub fn both_exact(&self) -> bool {
        self.first_stage_optimality == Optimality::Exact
            && self.perfect_optimality == Optimality::Exact
    }
}

/// Regret of executing `first_stage` when `y` is realized, given the
/// perfect-information schedule for `y`.
pub fn regret_of_schedule<F: Real>(
    instance: &Instance,
    first_stage: &Schedule,
    y: &Scenario,
    perfect: &Schedule,
    rho: PenaltyCoefficient<F>,
    scenario: usize,
) -> Result<RegretRecord<F>> {
    let exec = execute(instance, first_stage, y, rho)?;
    let f_corr = exec.realized_makespan;
    let f_star = perfect.makespan;
    let pregret = F::of_u64(u64::from(f_corr)) - F::of_u64(u64::from(f_star)) + exec.penalty;
    let normalized_pregret = pregret / F::of_u64(u64::from(f_star.max(1)));
    Ok(RegretRecord {
        scenario,
        f_corr,
        f_star,
        deviation_sum: exec.deviation_sum,
        penalty: exec.penalty,
        pregret,
        normalized_pregret,
        first_stage_optimality: first_stage.optimality,
        perfect_optimality: perfect.optimality,
    })
}

/// Solve on `y_hat`, execute under `y`, and compare to the solve on `y`.
pub fn post_hoc_regret<F: Real>(
    instance: &Instance,
    y_hat: &Scenario,
    y: &Scenario,
    rho: PenaltyCoefficient<F>,
    budget: &SolveBudget,
) -> Result<RegretRecord<F>> {
    let first_stage = solve_min_makespan(instance, y_hat, budget)?;
    let perfect = solve_min_makespan(instance, y, budget)?;
    regret_of_schedule(instance, &first_stage, y, &perfect, rho, 0)
}

/// Perfect-information schedules, one per scenario.
pub fn perfect_schedules(
    instance: &Instance,
    scenarios: &[Scenario],
    budget: &SolveBudget,
) -> Result<Vec<Schedule>> {
    scenarios
        .iter()
        .map(|y| solve_min_makespan(instance, y, budget))
        .collect()
}

/// What a method hands to evaluation.
#[derive(Debug, Clone, Copy)]
pub enum Decision<'a> {
    /// A point prediction; the first stage is solved on it.
    Prediction(&'a Scenario),
    /// A first-stage schedule used as is.
    FirstStage(&'a Schedule),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<F> {
    pub first_stage: Schedule,
    pub records: Vec<RegretRecord<F>>,
    pub mean_pregret: F,
    pub mean_normalized_pregret: F,
}

/// One regret record per test scenario plus means.
pub fn evaluate_method<F: Real>(
    instance: &Instance,
    decision: Decision<'_>,
    test: &[Scenario],
    rho: PenaltyCoefficient<F>,
    budget: &SolveBudget,
) -> Result<Evaluation<F>> {
    let perfect = perfect_schedules(instance, test, budget)?;
    evaluate_with_perfect(instance, decision, test, &perfect, rho, budget)
}

/// As [`evaluate_method`] with precomputed perfect-information schedules.
pub fn evaluate_with_perfect<F: Real>(
    instance: &Instance,
    decision: Decision<'_>,
    test: &[Scenario],
    perfect: &[Schedule],
    rho: PenaltyCoefficient<F>,
    budget: &SolveBudget,
) -> Result<Evaluation<F>> {
    if test.is_empty() {
        return Err(Error::Degenerate("empty test set".into()));
    }
    if perfect.len() != test.len() {
        return Err(Error::LengthMismatch {
            expected: test.len(),
            actual: perfect.len(),
        });
    }
    let first_stage = match decision {
        Decision::Prediction(y_hat) => solve_min_makespan(instance, y_hat, budget)?,
        Decision::FirstStage(s) => s.clone(),
    };
    let records = test
        .iter()
        .zip(perfect)
        .enumerate()
        .map(|(k, (y, p))| regret_of_schedule(instance, &first_stage, y, p, rho, k))
        .collect::<Result<Vec<_>>>()?;
    let count = F::of_u64(records.len() as u64);
    let mean_pregret = records.iter().map(|r| r.pregret).sum::<F>() / count;
    let mean_normalized_pregret = records.iter().map(|r| r.normalized_pregret).sum::<F>() / count;
    Ok(Evaluation {
        first_stage,
        records,
        mean_pregret,
        mean_normalized_pregret,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub n: usize,
}

/// Two-sided paired t-test of `mean(a - b) = 0` with `n - 1` degrees of freedom.
pub fn paired_t_test<F: Real>(a: &[F], b: &[F]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Degenerate(format!("need at least 2 pairs, got {n}")));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| x.as_f64() - y.as_f64())
        .collect();
    if diffs.iter().all(|&d| d == 0.0) {
        return Err(Error::Degenerate("all paired differences are zero".into()));
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    if sd == 0.0 {
        return Ok(TTest {
            t: mean.signum() * f64::INFINITY,
            p: 0.0,
            n,
        });
    }
    let t = mean / (sd / nf.sqrt());
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).expect("positive degrees of freedom");
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok(TTest { t, p, n })
}

/// Paired comparison of two methods over the same instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodComparison<F> {
    pub method_a: String,
    pub method_b: String,
    pub means_a: Vec<F>,
    pub means_b: Vec<F>,
    /// `None` when the test is degenerate (fewer than two pairs or no differences).
    pub test: Option<TTest>,
    pub alpha: f64,
}

impl<F: Real> MethodComparison<F> {
    pub fn new(method_a: &str, means_a: Vec<F>, method_b: &str, means_b: Vec<F>) -> Result<Self> {
        let test = match paired_t_test(&means_a, &means_b) {
            Ok(t) => Some(t),
            Err(Error::Degenerate(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            method_a: method_a.to_string(),
            method_b: method_b.to_string(),
            means_a,
            means_b,
            test,
            alpha: ALPHA,
        })
    }

    pub fn significant(&self) -> bool {
        self.test.is_some_and(|t| t.p < self.alpha)
    }
}
