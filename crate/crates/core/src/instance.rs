//! Scheduling instances: tasks, precedence edges, renewable resources and
//! resource calendars.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discrete time (and duration) unit.
pub type Time = u32;

/// Constraint carried by a precedence edge `j -> i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lag {
    /// `start_i >= start_j + duration_j`
    FinishToStart,
    /// `start_i >= start_j + min_lag`; replaces finish-to-start on that edge.
    StartToStart(Time),
}

impl Lag {
    /// Earliest start of the successor given the predecessor's start and duration.
    #[inline]
    pub fn release(self, pred_start: Time, pred_duration: Time) -> Time {
        match self {
            Lag::FinishToStart => pred_start + pred_duration,
            Lag::StartToStart(lag) => pred_start + lag,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Successor {
    pub task: usize,
    pub lag: Lag,
}

impl Successor {
    pub fn finish_to_start(task: usize) -> Self {
        Self {
            task,
            lag: Lag::FinishToStart,
        }
    }

    pub fn min_lag(task: usize, lag: Time) -> Self {
        Self {
            task,
            lag: Lag::StartToStart(lag),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub id: usize,
    /// Deterministic baseline duration.
    pub duration: Time,
    /// Demand per resource, indexed like [`Instance::resources`].
    pub demands: Vec<u32>,
    pub successors: Vec<Successor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceDef {
    pub id: usize,
    pub capacity: u32,
}

/// Half-open window `[start, end)` during which a resource is fully unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Unavailability {
    pub resource: usize,
    pub start: Time,
    pub end: Time,
}

impl Unavailability {
    #[inline]
    pub fn covers(&self, t: Time) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub tasks: Vec<Task>,
    pub resources: Vec<ResourceDef>,
    pub unavailability: Vec<Unavailability>,
}

/// A realized (or assumed) duration vector, one entry per task.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scenario {
    pub durations: Vec<Time>,
}

impl Scenario {
    pub fn new(durations: Vec<Time>) -> Self {
        Self { durations }
    }

    pub fn len(&self) -> usize {
        self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.durations.is_empty()
    }
}

impl From<Vec<Time>> for Scenario {
    fn from(durations: Vec<Time>) -> Self {
        Self { durations }
    }
}

/// One invariant violation found by [`Instance::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Incoming edges of one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Predecessor {
    pub task: usize,
    pub lag: Lag,
}

impl Instance {
    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn resource_count(&self) -> usize {
        self.resources.len()
    }

    /// Baseline durations as a scenario.
    pub fn baseline(&self) -> Scenario {
        Scenario::new(self.tasks.iter().map(|t| t.duration).collect())
    }

    /// Incoming edge lists, one per task, each sorted by predecessor id.
    pub fn predecessors(&self) -> Vec<Vec<Predecessor>> {
        let mut preds = vec![Vec::new(); self.tasks.len()];
        for task in &self.tasks {
            for succ in &task.successors {
                if let Some(list) = preds.get_mut(succ.task) {
                    list.push(Predecessor {
                        task: task.id,
                        lag: succ.lag,
                    });
                }
            }
        }
        for list in &mut preds {
            list.sort_by_key(|p| p.task);
        }
        preds
    }

    /// Check every structural invariant. An empty result means the instance is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.tasks.len();
        let m = self.resources.len();

        for (idx, res) in self.resources.iter().enumerate() {
            if res.id != idx {
                out.push(Violation(format!(
                    "resource at position {idx} has id {}",
                    res.id
                )));
            }
            if res.capacity == 0 {
                out.push(Violation(format!("resource {idx} has zero capacity")));
            }
        }

        for (idx, task) in self.tasks.iter().enumerate() {
            if task.id != idx {
                out.push(Violation(format!(
                    "task at position {idx} has id {}",
                    task.id
                )));
            }
            if task.demands.len() != m {
                out.push(Violation(format!(
                    "task {idx} lists {} demands for {m} resources",
                    task.demands.len()
                )));
            }
            for (r, &demand) in task.demands.iter().enumerate() {
                if let Some(res) = self.resources.get(r) {
                    if demand > res.capacity {
                        out.push(Violation(format!(
                            "task {idx} demands {demand} of resource {r} with capacity {}",
                            res.capacity
                        )));
                    }
                }
            }
            for succ in &task.successors {
                if succ.task >= n {
                    out.push(Violation(format!(
                        "task {idx} has out-of-range successor {}",
                        succ.task
                    )));
                }
            }
        }

        for (idx, w) in self.unavailability.iter().enumerate() {
            if w.resource >= m {
                out.push(Violation(format!(
                    "unavailability window {idx} references unknown resource {}",
                    w.resource
                )));
            }
            if w.start >= w.end {
                out.push(Violation(format!(
                    "unavailability window {idx} is empty or reversed: [{}, {})",
                    w.start, w.end
                )));
            }
        }

        // Cycle detection only makes sense once edges are in range.
        if out.iter().all(|v| !v.0.contains("out-of-range successor")) {
            if let Err(Error::Cycle { task }) = self.topological_order() {
                out.push(Violation(format!("cycle detected involving task {task}")));
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Kahn's algorithm; ready tasks are released in ascending id order.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.tasks.len();
        let mut indegree = vec![0usize; n];
        for task in &self.tasks {
            for succ in &task.successors {
                if succ.task >= n {
                    return Err(Error::InvalidInstance(format!(
                        "task {} has out-of-range successor {}",
                        task.id, succ.task
                    )));
                }
                indegree[succ.task] += 1;
            }
        }
        let mut ready: BinaryHeap<Reverse<usize>> = indegree
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(j, _)| Reverse(j))
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(j)) = ready.pop() {
            order.push(j);
            for succ in &self.tasks[j].successors {
                indegree[succ.task] -= 1;
                if indegree[succ.task] == 0 {
                    ready.push(Reverse(succ.task));
                }
            }
        }
        if order.len() < n {
            let task = (0..n).find(|&j| indegree[j] > 0).unwrap_or(0);
            return Err(Error::Cycle { task });
        }
        Ok(order)
    }

    /// Check that `scenario` is a usable duration vector for this instance.
    pub fn check_scenario(&self, scenario: &Scenario) -> Result<()> {
        if scenario.len() != self.tasks.len() {
            return Err(Error::LengthMismatch {
                expected: self.tasks.len(),
                actual: scenario.len(),
            });
        }
        Ok(())
    }

    /// Smallest time after which no calendar window is active.
    pub fn calendar_end(&self) -> Time {
        self.unavailability.iter().map(|w| w.end).max().unwrap_or(0)
    }

    /// Loose upper bound on any makespan reachable by greedy placement
    /// after `release` under `durations`.
    pub fn horizon_bound(&self, durations: &Scenario, release: Time) -> Time {
        let work: Time = durations.durations.iter().sum();
        let lags: Time = self
            .tasks
            .iter()
            .flat_map(|t| t.successors.iter())
            .map(|s| match s.lag {
                Lag::FinishToStart => 0,
                Lag::StartToStart(l) => l,
            })
            .sum();
        release.max(self.calendar_end()) + work + lags + 1
    }
}

/// The two-task, one-machine example with a maintenance block on `[5, 10)`.
///
/// Task 0 has mean duration 4, task 1 has mean duration 5.
pub fn two_task_maintenance() -> Instance {
    Instance {
        name: "two-task-maintenance".to_string(),
        tasks: vec![
            Task {
                id: 0,
                duration: 4,
                demands: vec![1],
                successors: vec![],
            },
            Task {
                id: 1,
                duration: 5,
                demands: vec![1],
                successors: vec![],
            },
        ],
        resources: vec![ResourceDef { id: 0, capacity: 1 }],
        unavailability: vec![Unavailability {
            resource: 0,
            start: 5,
            end: 10,
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(edges: &[(usize, usize)], n: usize) -> Instance {
        let mut tasks: Vec<Task> = (0..n)
            .map(|id| Task {
                id,
                duration: 1,
                demands: vec![],
                successors: vec![],
            })
            .collect();
        for &(a, b) in edges {
            tasks[a].successors.push(Successor::finish_to_start(b));
        }
        Instance {
            tasks,
            ..Default::default()
        }
    }

    #[test]
    fn two_cycle_is_reported() {
        let inst = chain(&[(0, 1), (1, 0)], 2);
        let v = inst.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].0.starts_with("cycle detected"));
        assert!(matches!(inst.topological_order(), Err(Error::Cycle { .. })));
    }

    #[test]
    fn empty_instance_is_valid() {
        let inst = Instance::default();
        assert!(inst.validate().is_empty());
        assert_eq!(inst.topological_order().unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn over_capacity_demand_names_task_and_resource() {
        let inst = Instance {
            name: String::new(),
            tasks: vec![Task {
                id: 0,
                duration: 2,
                demands: vec![5],
                successors: vec![],
            }],
            resources: vec![ResourceDef { id: 0, capacity: 4 }],
            unavailability: vec![],
        };
        let v = inst.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].0.contains("task 0"));
        assert!(v[0].0.contains("resource 0"));
    }

    #[test]
    fn bad_windows_and_successors() {
        let mut inst = two_task_maintenance();
        inst.unavailability.push(Unavailability {
            resource: 3,
            start: 4,
            end: 4,
        });
        inst.tasks[0].successors.push(Successor::finish_to_start(9));
        let v = inst.validate();
        assert_eq!(v.len(), 3, "{v:?}");
    }

    #[test]
    fn topological_orders() {
        assert_eq!(
            chain(&[(0, 1), (1, 2)], 3).topological_order().unwrap(),
            vec![0, 1, 2]
        );
        assert_eq!(chain(&[], 2).topological_order().unwrap(), vec![0, 1]);
        assert_eq!(
            chain(&[(0, 1), (0, 2), (1, 3), (2, 3)], 4)
                .topological_order()
                .unwrap(),
            vec![0, 1, 2, 3]
        );
        // Ties resolved by id even when a higher id is released first.
        assert_eq!(
            chain(&[(2, 0)], 3).topological_order().unwrap(),
            vec![1, 2, 0]
        );
    }

    #[test]
    fn toy_is_valid() {
        let toy = two_task_maintenance();
        assert!(toy.is_valid());
        assert_eq!(toy.baseline().durations, vec![4, 5]);
    }
}
