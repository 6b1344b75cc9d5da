//! Minimum-makespan scheduling under a fixed duration vector.
//!
//! Placement is the serial schedule generation scheme (SGS): tasks are taken
//! in a precedence-feasible priority order and each is put at its earliest
//! start that respects precedence, min-lags, calendars and capacity over its
//! whole duration. Small instances are solved exactly by depth-first
//! branch-and-bound over the SGS selection decisions; larger ones by
//! priority-rule multi-start, biased random sampling and swap local search
//! on priority lists.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, Predecessor, Scenario, Time};
use crate::profile::ResourceProfile;
use crate::scenario::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Optimality {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub starts: Vec<Time>,
    pub makespan: Time,
    pub assumed_durations: Scenario,
    pub optimality: Optimality,
}

impl Schedule {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveBudget {
    /// Search nodes (task placements) allowed in exact branch-and-bound.
    pub node_limit: u64,
    #[serde(with = "secs")]
    pub time_limit: Duration,
    /// Largest task count attempted exactly.
    pub exact_threshold: usize,
    /// SGS evaluations spent by the heuristic search.
    pub heuristic_evals: u64,
    pub seed: u64,
}

impl Default for SolveBudget {
    fn default() -> Self {
        Self {
            node_limit: 1_000_000,
            time_limit: Duration::from_secs(3600),
            exact_threshold: 10,
            heuristic_evals: 500,
            seed: 0,
        }
    }
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Ok(Duration::from_secs_f64(v.max(0.0)))
    }
}

/// Precomputed per-solve data.
struct Ctx<'a> {
    inst: &'a Instance,
    dur: &'a [Time],
    preds: Vec<Vec<Predecessor>>,
    topo: Vec<usize>,
    empty: ResourceProfile,
}

impl<'a> Ctx<'a> {
    fn new(inst: &'a Instance, durations: &'a Scenario) -> Result<Self> {
        inst.check_scenario(durations)?;
        Ok(Self {
            inst,
            dur: &durations.durations,
            preds: inst.predecessors(),
            topo: inst.topological_order()?,
            empty: ResourceProfile::new(inst),
        })
    }

    fn n(&self) -> usize {
        self.dur.len()
    }

    /// Precedence release of `j` given placed predecessors.
    fn release(&self, j: usize, starts: &[Option<Time>]) -> Time {
        self.preds[j]
            .iter()
            .map(|p| {
                let s = starts[p.task].expect("predecessor placed");
                p.lag.release(s, self.dur[p.task])
            })
            .max()
            .unwrap_or(0)
    }

    fn place(&self, profile: &mut ResourceProfile, j: usize, starts: &[Option<Time>]) -> Time {
        let demands = &self.inst.tasks[j].demands;
        let start = profile.earliest_fit(demands, self.release(j, starts), self.dur[j]);
        profile.add(demands, start, self.dur[j]);
        start
    }

    /// Serial SGS over an already-validated priority list.
    fn sgs(&self, priority: &[usize]) -> (Vec<Time>, Time) {
        let mut profile = self.empty.clone();
        let mut starts = vec![None; self.n()];
        let mut makespan = 0;
        for &j in priority {
            let s = self.place(&mut profile, j, &starts);
            starts[j] = Some(s);
            makespan = makespan.max(s + self.dur[j]);
        }
        (
            starts.into_iter().map(|s| s.unwrap_or(0)).collect(),
            makespan,
        )
    }

    fn schedule(&self, starts: Vec<Time>, makespan: Time, optimality: Optimality) -> Schedule {
        Schedule {
            starts,
            makespan,
            assumed_durations: Scenario::new(self.dur.to_vec()),
            optimality,
        }
    }

    /// Precedence-only latest finish times against a loose horizon.
    fn latest_finish(&self) -> Vec<i64> {
        let horizon = i64::from(
            self.inst
                .horizon_bound(&Scenario::new(self.dur.to_vec()), 0),
        );
        let mut lft = vec![horizon; self.n()];
        for &j in self.topo.iter().rev() {
            for succ in &self.inst.tasks[j].successors {
                let i = succ.task;
                let latest_start_i = lft[i] - i64::from(self.dur[i]);
                let bound = match succ.lag {
                    crate::instance::Lag::FinishToStart => latest_start_i,
                    crate::instance::Lag::StartToStart(l) => {
                        latest_start_i - i64::from(l) + i64::from(self.dur[j])
                    }
                };
                lft[j] = lft[j].min(bound);
            }
        }
        lft
    }

    fn total_successors(&self) -> Vec<usize> {
        let n = self.n();
        let mut reach: Vec<Vec<bool>> = vec![vec![false; n]; n];
        for &j in self.topo.iter().rev() {
            for succ in &self.inst.tasks[j].successors {
                let i = succ.task;
                reach[j][i] = true;
                let (lo, hi) = if i < j {
                    let (a, b) = reach.split_at_mut(j);
                    (&mut b[0], &a[i])
                } else {
                    let (a, b) = reach.split_at_mut(i);
                    (&mut a[j], &b[0])
                };
                for k in 0..n {
                    lo[k] |= hi[k];
                }
            }
        }
        reach
            .iter()
            .map(|r| r.iter().filter(|&&b| b).count())
            .collect()
    }

    /// Build a precedence-feasible list choosing the eligible task with the
    /// smallest key (ties by id).
    fn list_by_key(&self, key: &[i64]) -> Vec<usize> {
        self.build_list(|eligible| {
            *eligible
                .iter()
                .min_by_key(|&&j| (key[j], j))
                .expect("eligible set nonempty")
        })
    }

    fn build_list(&self, mut pick: impl FnMut(&[usize]) -> usize) -> Vec<usize> {
        let n = self.n();
        let mut pending: Vec<usize> = self.preds.iter().map(Vec::len).collect();
        let mut eligible: Vec<usize> = (0..n).filter(|&j| pending[j] == 0).collect();
        let mut list = Vec::with_capacity(n);
        while !eligible.is_empty() {
            let j = pick(&eligible);
            eligible.retain(|&k| k != j);
            list.push(j);
            for succ in &self.inst.tasks[j].successors {
                pending[succ.task] -= 1;
                if pending[succ.task] == 0 {
                    eligible.push(succ.task);
                }
            }
            eligible.sort_unstable();
        }
        list
    }

    fn rule_lists(&self) -> Vec<Vec<usize>> {
        let lft = self.latest_finish();
        let lst: Vec<i64> = lft
            .iter()
            .zip(self.dur)
            .map(|(&f, &d)| f - i64::from(d))
            .collect();
        let mts: Vec<i64> = self
            .total_successors()
            .into_iter()
            .map(|c| -(c as i64))
            .collect();
        let grpw: Vec<i64> = (0..self.n())
            .map(|j| {
                let own = i64::from(self.dur[j]);
                let next: i64 = self.inst.tasks[j]
                    .successors
                    .iter()
                    .map(|s| i64::from(self.dur[s.task]))
                    .sum();
                -(own + next)
            })
            .collect();
        let mut lists = vec![
            self.topo.clone(),
            self.list_by_key(&lft),
            self.list_by_key(&lst),
            self.list_by_key(&mts),
            self.list_by_key(&grpw),
        ];
        lists.dedup();
        lists
    }

    fn is_topological(&self, list: &[usize]) -> bool {
        let mut pos = vec![usize::MAX; self.n()];
        for (p, &j) in list.iter().enumerate() {
            pos[j] = p;
        }
        (0..self.n()).all(|j| self.preds[j].iter().all(|p| pos[p.task] < pos[j]))
    }
}

/// Place tasks in `priority` order at their earliest feasible starts.
pub fn sgs_serial(
    instance: &Instance,
    durations: &Scenario,
    priority: &[usize],
) -> Result<Schedule> {
    let ctx = Ctx::new(instance, durations)?;
    let n = ctx.n();
    if priority.len() != n {
        return Err(Error::InvalidPriority(format!(
            "expected {n} tasks, got {}",
            priority.len()
        )));
    }
    let mut seen = vec![false; n];
    for &j in priority {
        if j >= n || std::mem::replace(&mut seen[j], true) {
            return Err(Error::InvalidPriority(format!(
                "task {j} repeated or out of range"
            )));
        }
    }
    if !ctx.is_topological(priority) {
        return Err(Error::InvalidPriority(
            "order violates a precedence edge".into(),
        ));
    }
    let (starts, makespan) = ctx.sgs(priority);
    Ok(ctx.schedule(starts, makespan, Optimality::Heuristic))
}

/// Minimum-makespan schedule for `durations`.
///
/// Exact (branch-and-bound) when the task count is within
/// `budget.exact_threshold` and the search finishes inside its node and time
/// limits; otherwise the best heuristic schedule found. Deterministic for
/// fixed inputs unless the wall-clock limit interrupts the search.
pub fn solve_min_makespan(
    instance: &Instance,
    durations: &Scenario,
    budget: &SolveBudget,
) -> Result<Schedule> {
    let ctx = Ctx::new(instance, durations)?;
    let deadline = Instant::now() + budget.time_limit;

    if ctx.n() == 0 {
        return Ok(ctx.schedule(Vec::new(), 0, Optimality::Exact));
    }

    let (rule_starts, rule_makespan) = ctx
        .rule_lists()
        .iter()
        .map(|l| ctx.sgs(l))
        .min_by_key(|(_, m)| *m)
        .expect("at least one rule list");

    if ctx.n() <= budget.exact_threshold {
        let mut bnb = BranchAndBound::new(&ctx, rule_makespan, budget.node_limit, deadline);
        bnb.run();
        if !bnb.aborted {
            let (starts, makespan) = bnb.best.unwrap_or((rule_starts, rule_makespan));
            return Ok(ctx.schedule(starts, makespan, Optimality::Exact));
        }
    }

    let (starts, makespan) = heuristic(&ctx, budget, deadline);
    let (starts, makespan) = if makespan <= rule_makespan {
        (starts, makespan)
    } else {
        (rule_starts, rule_makespan)
    };
    Ok(ctx.schedule(starts, makespan, Optimality::Heuristic))
}

struct BranchAndBound<'c, 'a> {
    ctx: &'c Ctx<'a>,
    profile: ResourceProfile,
    starts: Vec<Option<Time>>,
    pending: Vec<usize>,
    /// Makespan of the heuristic incumbent; schedules equal to it are still
    /// collected so the returned optimum is the first in id order.
    ceiling: Time,
    best: Option<(Vec<Time>, Time)>,
    nodes: u64,
    node_limit: u64,
    deadline: Instant,
    aborted: bool,
}

impl<'c, 'a> BranchAndBound<'c, 'a> {
    fn new(ctx: &'c Ctx<'a>, ceiling: Time, node_limit: u64, deadline: Instant) -> Self {
        Self {
            ctx,
            profile: ctx.empty.clone(),
            starts: vec![None; ctx.n()],
            pending: ctx.preds.iter().map(Vec::len).collect(),
            ceiling,
            best: None,
            nodes: 0,
            node_limit,
            deadline,
            aborted: false,
        }
    }

    fn run(&mut self) {
        self.dfs(0, 0);
    }

    fn prune(&self, bound: Time) -> bool {
        match &self.best {
            Some((_, best)) => bound >= *best,
            None => bound > self.ceiling,
        }
    }

    /// Critical-path bound on the completion of every unplaced task.
    fn lower_bound(&self, current: Time) -> Time {
        let ctx = self.ctx;
        let mut est = vec![0 as Time; ctx.n()];
        let mut bound = current;
        for &j in &ctx.topo {
            if self.starts[j].is_some() {
                continue;
            }
            let e = ctx.preds[j]
                .iter()
                .map(|p| {
                    let s = self.starts[p.task].unwrap_or(est[p.task]);
                    p.lag.release(s, ctx.dur[p.task])
                })
                .max()
                .unwrap_or(0);
            est[j] = e;
            bound = bound.max(e + ctx.dur[j]);
        }
        bound
    }

    fn dfs(&mut self, depth: usize, current: Time) {
        let ctx = self.ctx;
        if depth == ctx.n() {
            if !self.prune(current) {
                let starts = self.starts.iter().map(|s| s.unwrap_or(0)).collect();
                self.best = Some((starts, current));
            }
            return;
        }
        let eligible: Vec<usize> = (0..ctx.n())
            .filter(|&j| self.starts[j].is_none() && self.pending[j] == 0)
            .collect();
        for j in eligible {
            if self.aborted {
                return;
            }
            self.nodes += 1;
            if self.nodes > self.node_limit
                || (self.nodes.is_multiple_of(1024) && Instant::now() >= self.deadline)
            {
                self.aborted = true;
                return;
            }
            let s = ctx.place(&mut self.profile, j, &self.starts);
            self.starts[j] = Some(s);
            for succ in &ctx.inst.tasks[j].successors {
                self.pending[succ.task] -= 1;
            }
            let next = current.max(s + ctx.dur[j]);
            if !self.prune(self.lower_bound(next)) {
                self.dfs(depth + 1, next);
            }
            for succ in &ctx.inst.tasks[j].successors {
                self.pending[succ.task] += 1;
            }
            self.starts[j] = None;
            ctx.profile_remove(&mut self.profile, j, s);
        }
    }
}

impl Ctx<'_> {
    fn profile_remove(&self, profile: &mut ResourceProfile, j: usize, start: Time) {
        profile.remove(&self.inst.tasks[j].demands, start, self.dur[j]);
    }
}

/// Multi-start over priority rules and biased random lists, then swap local
/// search on the best list. Spends at most `budget.heuristic_evals` SGS runs.
fn heuristic(ctx: &Ctx<'_>, budget: &SolveBudget, deadline: Instant) -> (Vec<Time>, Time) {
    let mut rng = rng_from_seed(budget.seed);
    let limit = budget.heuristic_evals.max(1);
    let mut evals = 0u64;
    let out_of_budget = |evals: u64| evals >= limit || Instant::now() >= deadline;

    let mut best_list = ctx.topo.clone();
    let (mut best_starts, mut best) = ctx.sgs(&best_list);
    evals += 1;
    for list in ctx.rule_lists() {
        if out_of_budget(evals) {
            break;
        }
        let (s, m) = ctx.sgs(&list);
        evals += 1;
        if m < best {
            best = m;
            best_starts = s;
            best_list = list;
        }
    }

    // Regret-biased random sampling around latest finish times.
    let lft = ctx.latest_finish();
    let sampling = limit / 2;
    while evals < sampling && !out_of_budget(evals) {
        let list = ctx.build_list(|eligible| {
            let worst = eligible.iter().map(|&j| lft[j]).max().unwrap_or(0);
            let weights: Vec<f64> = eligible
                .iter()
                .map(|&j| ((worst - lft[j] + 1) as f64).powi(2))
                .collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.gen::<f64>() * total;
            for (k, w) in weights.iter().enumerate() {
                if u < *w {
                    return eligible[k];
                }
                u -= w;
            }
            *eligible.last().expect("eligible set nonempty")
        });
        let (s, m) = ctx.sgs(&list);
        evals += 1;
        if m < best {
            best = m;
            best_starts = s;
            best_list = list;
        }
    }

    // Swap neighborhood, first improvement, restarted after each improvement.
    let n = ctx.n();
    let window = 8.min(n.saturating_sub(1)).max(1);
    let mut improved = true;
    while improved && !out_of_budget(evals) {
        improved = false;
        'scan: for a in 0..n {
            for b in a + 1..(a + 1 + window).min(n) {
                if out_of_budget(evals) {
                    break 'scan;
                }
                if !swap_keeps_order(ctx, &best_list, a, b) {
                    continue;
                }
                best_list.swap(a, b);
                let (s, m) = ctx.sgs(&best_list);
                evals += 1;
                if m < best {
                    best = m;
                    best_starts = s;
                    improved = true;
                    break 'scan;
                }
                best_list.swap(a, b);
            }
        }
    }
    (best_starts, best)
}

/// Whether swapping positions `a < b` keeps the list precedence-feasible.
fn swap_keeps_order(ctx: &Ctx<'_>, list: &[usize], a: usize, b: usize) -> bool {
    let (x, y) = (list[a], list[b]);
    // y moves to `a`: none of its predecessors may sit in a..b.
    // x moves to `b`: none of its successors may sit in a+1..=b.
    let between = &list[a..=b];
    let y_blocked = ctx.preds[y]
        .iter()
        .any(|p| between[..b - a].contains(&p.task));
    let x_blocked = ctx.inst.tasks[x]
        .successors
        .iter()
        .any(|s| between[1..].contains(&s.task));
    !(y_blocked || x_blocked)
}
