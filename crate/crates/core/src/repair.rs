//! Execution of first-stage start times under realized durations.
//!
//! Time advances one unit at a time. At every tick each unstarted task whose
//! first-stage start has been reached tries to start; it starts only if all
//! its precedence constraints hold under the realized durations and the
//! resources (net of running tasks and calendar windows) admit its demand for
//! its whole realized duration. Otherwise it is postponed by one unit. Tasks
//! try in order of their first-stage start, ties by id, and a tick is
//! re-scanned until nothing more can start.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, Scenario, Time};
use crate::profile::ResourceProfile;
use crate::scalar::Real;
use crate::scheduler::Schedule;

/// Weight of start-time deviations in the repair penalty.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PenaltyCoefficient<F>(F);

impl<F: Real> PenaltyCoefficient<F> {
    pub fn new(rho: F) -> Result<Self> {
        if rho.is_finite() && rho >= F::zero() {
            Ok(Self(rho))
        } else {
            Err(Error::Config(format!(
                "penalty coefficient must be finite and >= 0, got {rho}"
            )))
        }
    }

    pub fn zero() -> Self {
        Self(F::zero())
    }

    pub fn value(self) -> F {
        self.0
    }

    pub fn apply(self, deviation_sum: u64) -> F {
        self.0 * F::of_u64(deviation_sum)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult<F> {
    pub corrected_starts: Vec<Time>,
    pub realized_makespan: Time,
    /// Sum over tasks of corrected minus first-stage start.
    pub deviation_sum: u64,
    pub penalty: F,
}

impl<F: Real + Serialize> ExecutionResult<F> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("execution result serializes")
    }
}

/// Corrected start times for first-stage `starts` under `realized` durations.
pub fn simulate(instance: &Instance, starts: &[Time], realized: &Scenario) -> Result<Vec<Time>> {
    let n = instance.task_count();
    instance.check_scenario(realized)?;
    if starts.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: starts.len(),
        });
    }
    let y = &realized.durations;
    let preds = instance.predecessors();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&j| (starts[j], j));

    let mut profile = ResourceProfile::new(instance);
    let mut corrected: Vec<Option<Time>> = vec![None; n];
    let mut remaining = n;
    let mut t: Time = 0;
    let limit = instance.horizon_bound(realized, starts.iter().copied().max().unwrap_or(0));

    while remaining > 0 {
        loop {
            let mut progress = false;
            for &j in &order {
                if corrected[j].is_some() || starts[j] > t {
                    continue;
                }
                let released = preds[j].iter().all(|p| match corrected[p.task] {
                    Some(s) => p.lag.release(s, y[p.task]) <= t,
                    None => false,
                });
                if !released {
                    continue;
                }
                let demands = &instance.tasks[j].demands;
                if profile.conflict(demands, t, y[j]).is_none() {
                    profile.add(demands, t, y[j]);
                    corrected[j] = Some(t);
                    remaining -= 1;
                    progress = true;
                }
            }
            if !progress || remaining == 0 {
                break;
            }
        }
        if remaining == 0 {
            break;
        }
        // Nothing waiting yet: jump to the next first-stage start.
        let waiting = (0..n).any(|j| corrected[j].is_none() && starts[j] <= t);
        t = if waiting {
            t + 1
        } else {
            (0..n)
                .filter(|&j| corrected[j].is_none())
                .map(|j| starts[j])
                .min()
                .expect("an unstarted task remains")
        };
        assert!(
            t <= limit,
            "repair did not terminate by t={limit}; instance is not valid"
        );
    }
    Ok(corrected
        .into_iter()
        .map(|s| s.expect("all started"))
        .collect())
}

/// Execute `first_stage` under `realized` durations.
pub fn execute<F: Real>(
    instance: &Instance,
    first_stage: &Schedule,
    realized: &Scenario,
    rho: PenaltyCoefficient<F>,
) -> Result<ExecutionResult<F>> {
    execute_starts(instance, &first_stage.starts, realized, rho)
}

pub fn execute_starts<F: Real>(
    instance: &Instance,
    starts: &[Time],
    realized: &Scenario,
    rho: PenaltyCoefficient<F>,
) -> Result<ExecutionResult<F>> {
    let corrected = simulate(instance, starts, realized)?;
    let realized_makespan = corrected
        .iter()
        .zip(&realized.durations)
        .map(|(s, d)| s + d)
        .max()
        .unwrap_or(0);
    let deviation_sum = corrected
        .iter()
        .zip(starts)
        .map(|(&c, &z)| u64::from(c - z))
        .sum();
    Ok(ExecutionResult {
        corrected_starts: corrected,
        realized_makespan,
        deviation_sum,
        penalty: rho.apply(deviation_sum),
    })
}

/// Mean realized makespan and mean penalty over `scenarios`.
pub fn expected_execution<F: Real>(
    instance: &Instance,
    first_stage: &Schedule,
    scenarios: &[Scenario],
    rho: PenaltyCoefficient<F>,
) -> Result<(F, F)> {
    if scenarios.is_empty() {
        return Err(Error::Degenerate("no scenarios to execute".into()));
    }
    let mut makespan_total: u64 = 0;
    let mut deviation_total: u64 = 0;
    for y in scenarios {
        let r: ExecutionResult<F> = execute(instance, first_stage, y, rho)?;
        makespan_total += u64::from(r.realized_makespan);
        deviation_total += r.deviation_sum;
    }
    let count = F::of_u64(scenarios.len() as u64);
    Ok((
        F::of_u64(makespan_total) / count,
        rho.apply(deviation_total) / count,
    ))
}

/// Batch results as CSV: `instance,scenario,makespan,deviation_sum`.
pub fn batch_csv<F>(instance_name: &str, results: &[ExecutionResult<F>]) -> String {
    let mut out = String::from("instance,scenario,makespan,deviation_sum\n");
    for (k, r) in results.iter().enumerate() {
        out.push_str(&format!(
            "{instance_name},{k},{},{}\n",
            r.realized_makespan, r.deviation_sum
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::two_task_maintenance;
    use crate::scheduler::{sgs_serial, solve_min_makespan, SolveBudget};

    fn toy_schedule(priority: &[usize]) -> (Instance, Schedule) {
        let toy = two_task_maintenance();
        let s = sgs_serial(&toy, &toy.baseline(), priority).unwrap();
        (toy, s)
    }

    #[test]
    fn perfect_prediction_is_fixed_point() {
        let (toy, s) = toy_schedule(&[1, 0]);
        let r: ExecutionResult<f64> = execute(
            &toy,
            &s,
            &toy.baseline(),
            PenaltyCoefficient::new(1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(r.corrected_starts, s.starts);
        assert_eq!(r.deviation_sum, 0);
        assert_eq!(r.realized_makespan, s.makespan);
    }

    #[test]
    fn repair_when_second_task_runs_long() {
        let (toy, s) = toy_schedule(&[1, 0]);
        assert_eq!(s.starts, vec![10, 0]);
        let r: ExecutionResult<f64> = execute(
            &toy,
            &s,
            &Scenario::new(vec![4, 6]),
            PenaltyCoefficient::new(1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(r.corrected_starts, vec![16, 10]);
        assert_eq!(r.realized_makespan, 20);
        assert_eq!(r.deviation_sum, 16);
        assert_eq!(r.penalty, 16.0);
    }

    #[test]
    fn expected_values_of_both_orders() {
        let scenarios: Vec<Scenario> = (3..=7).map(|y2| Scenario::new(vec![4, y2])).collect();
        let rho = PenaltyCoefficient::<f64>::zero();
        let (toy, first) = toy_schedule(&[0, 1]);
        let (mean, _) = expected_execution(&toy, &first, &scenarios, rho).unwrap();
        assert_eq!(mean, 15.0);
        let (_, second) = toy_schedule(&[1, 0]);
        let (mean, _) = expected_execution(&toy, &second, &scenarios, rho).unwrap();
        assert_eq!(mean, 16.6);
    }

    #[test]
    fn single_assumed_scenario_means() {
        let toy = two_task_maintenance();
        let s = solve_min_makespan(&toy, &toy.baseline(), &SolveBudget::default()).unwrap();
        let (m, p) = expected_execution(
            &toy,
            &s,
            &[toy.baseline()],
            PenaltyCoefficient::new(0.5_f32).unwrap(),
        )
        .unwrap();
        assert_eq!((m, p), (14.0, 0.0));
    }

    #[test]
    fn penalty_linear_in_rho() {
        let (toy, s) = toy_schedule(&[1, 0]);
        let y = Scenario::new(vec![4, 7]);
        let a: ExecutionResult<f64> =
            execute(&toy, &s, &y, PenaltyCoefficient::new(1.0).unwrap()).unwrap();
        let b: ExecutionResult<f64> =
            execute(&toy, &s, &y, PenaltyCoefficient::new(2.5).unwrap()).unwrap();
        assert_eq!(a.deviation_sum, b.deviation_sum);
        assert_eq!(b.penalty, 2.5 * a.penalty);
    }

    #[test]
    fn negative_rho_rejected() {
        assert!(PenaltyCoefficient::new(-1.0_f64).is_err());
        assert!(PenaltyCoefficient::new(f64::NAN).is_err());
    }

    #[test]
    fn batch_csv_rows() {
        let r = ExecutionResult {
            corrected_starts: vec![0],
            realized_makespan: 3,
            deviation_sum: 1,
            penalty: 1.0_f64,
        };
        assert_eq!(
            batch_csv("toy", &[r]),
            "instance,scenario,makespan,deviation_sum\ntoy,0,3,1\n"
        );
    }
}
