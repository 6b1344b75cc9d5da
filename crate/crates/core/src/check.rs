//! Stand-alone feasibility checker for start-time vectors.
//!
//! Deliberately naive: it recomputes resource usage by summing over tasks at
//! every time point and never touches the placement code.

use crate::instance::{Instance, Lag, Scenario, Time};

/// All constraint violations of `starts` executed with `durations`.
pub fn violations(instance: &Instance, starts: &[Time], durations: &Scenario) -> Vec<String> {
    let mut out = Vec::new();
    let n = instance.tasks.len();
    if starts.len() != n || durations.durations.len() != n {
        out.push(format!(
            "length mismatch: {n} tasks, {} starts, {} durations",
            starts.len(),
            durations.durations.len()
        ));
        return out;
    }
    let y = &durations.durations;

    for task in &instance.tasks {
        let j = task.id;
        for succ in &task.successors {
            let i = succ.task;
            let required = match succ.lag {
                Lag::FinishToStart => starts[j] + y[j],
                Lag::StartToStart(lag) => starts[j] + lag,
            };
            if starts[i] < required {
                out.push(format!(
                    "edge {j}->{i}: successor starts at {} before {required}",
                    starts[i]
                ));
            }
        }
    }

    let end = (0..n).map(|j| starts[j] + y[j]).max().unwrap_or(0);
    for res in &instance.resources {
        let r = res.id;
        for t in 0..end {
            let used: u32 = (0..n)
                .filter(|&j| starts[j] <= t && t < starts[j] + y[j])
                .map(|j| instance.tasks[j].demands[r])
                .sum();
            if used > res.capacity {
                out.push(format!(
                    "resource {r} at t={t}: usage {used} exceeds capacity {}",
                    res.capacity
                ));
            }
            let blocked = instance
                .unavailability
                .iter()
                .any(|w| w.resource == r && w.start <= t && t < w.end);
            if blocked && used > 0 {
                out.push(format!("resource {r} at t={t}: used during unavailability"));
            }
        }
    }
    out
}

pub fn makespan_of(starts: &[Time], durations: &Scenario) -> Time {
    starts
        .iter()
        .zip(&durations.durations)
        .map(|(s, d)| s + d)
        .max()
        .unwrap_or(0)
}
