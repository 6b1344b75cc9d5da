//! Random small instances and brute-force oracles shared by integration tests.
//!
//! Nothing here calls into the SGS placement or the repair simulator; the
//! oracles recompute everything from the instance data directly.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use stosched::instance::{
    Instance, Lag, ResourceDef, Scenario, Successor, Task, Time, Unavailability,
};

/// Random valid instance with `1..=max_tasks` tasks, 1-2 resources, mixed
/// edge kinds and up to two calendar windows.
pub fn random_instance<R: Rng>(rng: &mut R, max_tasks: usize) -> Instance {
    let n = rng.gen_range(1..=max_tasks);
    let m = rng.gen_range(1..=2);
    let resources: Vec<ResourceDef> = (0..m)
        .map(|id| ResourceDef {
            id,
            capacity: rng.gen_range(1..=4),
        })
        .collect();
    let mut tasks: Vec<Task> = (0..n)
        .map(|id| Task {
            id,
            duration: if rng.gen_bool(0.1) {
                0
            } else {
                rng.gen_range(1..=5)
            },
            demands: resources
                .iter()
                .map(|r| rng.gen_range(0..=r.capacity))
                .collect(),
            successors: Vec::new(),
        })
        .collect();
    // Edges only go from lower to higher position in a random permutation.
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(0.3) {
                let lag = if rng.gen_bool(0.25) {
                    Lag::StartToStart(rng.gen_range(0..=3))
                } else {
                    Lag::FinishToStart
                };
                tasks[perm[a]]
                    .successors
                    .push(Successor { task: perm[b], lag });
            }
        }
    }
    let windows = rng.gen_range(0..=2);
    let unavailability = (0..windows)
        .map(|_| {
            let start = rng.gen_range(0..15);
            Unavailability {
                resource: rng.gen_range(0..m),
                start,
                end: start + rng.gen_range(1..=5),
            }
        })
        .collect();
    let inst = Instance {
        name: "random".into(),
        tasks,
        resources,
        unavailability,
    };
    assert!(inst.is_valid(), "{:?}", inst.validate());
    inst
}

/// Random durations: zero for zero-baseline tasks, otherwise `1..=6`.
pub fn random_durations<R: Rng>(rng: &mut R, inst: &Instance) -> Scenario {
    Scenario::new(
        inst.tasks
            .iter()
            .map(|t| {
                if t.duration == 0 {
                    0
                } else {
                    rng.gen_range(1..=6)
                }
            })
            .collect(),
    )
}

/// Uniformly shuffled precedence-feasible order.
pub fn random_topological<R: Rng>(rng: &mut R, inst: &Instance) -> Vec<usize> {
    let n = inst.task_count();
    let mut indeg = vec![0usize; n];
    for t in &inst.tasks {
        for s in &t.successors {
            indeg[s.task] += 1;
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&j| indeg[j] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while !ready.is_empty() {
        let k = rng.gen_range(0..ready.len());
        let j = ready.swap_remove(k);
        order.push(j);
        for s in &inst.tasks[j].successors {
            indeg[s.task] -= 1;
            if indeg[s.task] == 0 {
                ready.push(s.task);
            }
        }
    }
    order
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                prefix.push(j);
                rec(prefix, used, out);
                prefix.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

pub fn is_topological(inst: &Instance, order: &[usize]) -> bool {
    let mut pos = vec![0usize; order.len()];
    for (p, &j) in order.iter().enumerate() {
        pos[j] = p;
    }
    inst.tasks
        .iter()
        .all(|t| t.successors.iter().all(|s| pos[t.id] < pos[s.task]))
}

fn release(lag: Lag, start: Time, duration: Time) -> Time {
    match lag {
        Lag::FinishToStart => start + duration,
        Lag::StartToStart(l) => start + l,
    }
}

/// Whether `task` fits at `t` next to the already fixed tasks, checked by
/// summing demands at every time point of the interval.
fn fits(inst: &Instance, fixed: &[Option<Time>], y: &[Time], task: usize, t: Time) -> bool {
    for tp in t..t + y[task] {
        for res in &inst.resources {
            let need = inst.tasks[task].demands[res.id];
            if need == 0 {
                continue;
            }
            if inst
                .unavailability
                .iter()
                .any(|w| w.resource == res.id && w.start <= tp && tp < w.end)
            {
                return false;
            }
            let used: u32 = (0..inst.task_count())
                .filter_map(|k| fixed[k].map(|s| (k, s)))
                .filter(|&(k, s)| s <= tp && tp < s + y[k])
                .map(|(k, _)| inst.tasks[k].demands[res.id])
                .sum();
            if used + need > res.capacity {
                return false;
            }
        }
    }
    true
}

/// Brute-force serial placement of `order` (independent of the library SGS).
pub fn place_in_order(inst: &Instance, y: &Scenario, order: &[usize]) -> (Vec<Time>, Time) {
    let n = inst.task_count();
    let mut fixed: Vec<Option<Time>> = vec![None; n];
    for &j in order {
        let mut t = 0;
        for p in &inst.tasks {
            for s in &p.successors {
                if s.task == j {
                    t = t.max(release(
                        s.lag,
                        fixed[p.id].expect("topological"),
                        y.durations[p.id],
                    ));
                }
            }
        }
        while !fits(inst, &fixed, &y.durations, j, t) {
            t += 1;
        }
        fixed[j] = Some(t);
    }
    let starts: Vec<Time> = fixed.into_iter().map(Option::unwrap).collect();
    let makespan = (0..n)
        .map(|j| starts[j] + y.durations[j])
        .max()
        .unwrap_or(0);
    (starts, makespan)
}

/// Minimum makespan over every precedence-feasible order, by enumeration.
pub fn brute_force_min_makespan(inst: &Instance, y: &Scenario) -> Time {
    permutations(inst.task_count())
        .into_iter()
        .filter(|o| is_topological(inst, o))
        .map(|o| place_in_order(inst, y, &o).1)
        .min()
        .unwrap_or(0)
}

/// Corrected starts under unit postponement, by event search.
///
/// Repeatedly fixes, among unfixed tasks whose predecessors are all fixed,
/// the one with the smallest `(earliest feasible start >= z_j, z_j, id)`,
/// where feasibility is re-derived from scratch against all fixed tasks.
pub fn brute_force_repair(inst: &Instance, z: &[Time], y: &Scenario) -> Vec<Time> {
    let n = inst.task_count();
    let yd = &y.durations;
    let mut fixed: Vec<Option<Time>> = vec![None; n];
    for _ in 0..n {
        let mut best: Option<(Time, Time, usize)> = None;
        for j in 0..n {
            if fixed[j].is_some() {
                continue;
            }
            let mut ready = true;
            let mut t = z[j];
            for p in &inst.tasks {
                for s in &p.successors {
                    if s.task == j {
                        match fixed[p.id] {
                            Some(sp) => t = t.max(release(s.lag, sp, yd[p.id])),
                            None => ready = false,
                        }
                    }
                }
            }
            if !ready {
                continue;
            }
            while !fits(inst, &fixed, yd, j, t) {
                t += 1;
            }
            let key = (t, z[j], j);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        let (t, _, j) = best.expect("a ready task exists in a DAG");
        fixed[j] = Some(t);
    }
    fixed.into_iter().map(Option::unwrap).collect()
}

pub fn relabel(inst: &Instance, perm: &[usize]) -> Instance {
    // perm[old] = new
    let n = inst.task_count();
    let mut tasks: Vec<Task> = vec![
        Task {
            id: 0,
            duration: 0,
            demands: vec![],
            successors: vec![]
        };
        n
    ];
    for t in &inst.tasks {
        tasks[perm[t.id]] = Task {
            id: perm[t.id],
            duration: t.duration,
            demands: t.demands.clone(),
            successors: t
                .successors
                .iter()
                .map(|s| Successor {
                    task: perm[s.task],
                    lag: s.lag,
                })
                .collect(),
        };
    }
    Instance {
        name: inst.name.clone(),
        tasks,
        resources: inst.resources.clone(),
        unavailability: inst.unavailability.clone(),
    }
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

pub mod smoothing {
    use rand::Rng;
    use stosched::dfl::{sample_prediction, score_gradient, EstimatorParams};
    use stosched::scenario::rng_from_seed;

    pub const MEANS: [f64; 3] = [4.0, 6.0, 9.0];
    pub const STDDEVS: [f64; 3] = [1.0, 1.5, 2.0];
    const TARGET: [f64; 3] = [5.0, 4.0, 10.0];
    const WEIGHT: [f64; 3] = [1.0, 0.5, 2.0];

    pub fn params(theta_mu: Vec<f64>, theta_sigma: Vec<f64>) -> EstimatorParams<f64> {
        EstimatorParams {
            theta_mu,
            theta_sigma,
            means: MEANS.to_vec(),
            stddevs: STDDEVS.to_vec(),
            active: vec![true; 3],
            trainable: vec![true; 3],
        }
    }

    pub fn surrogate(g: &[f64]) -> f64 {
        (0..3).map(|j| WEIGHT[j] * (g[j] - TARGET[j]).powi(2)).sum()
    }

    /// `E[surrogate(g)]` for `g_j ~ N(μ_j, σ_j)` by trapezoidal quadrature
    /// of each one-dimensional term.
    pub fn smoothed(theta: &[f64]) -> f64 {
        let steps = 4000;
        let width = 10.0;
        (0..3)
            .map(|j| {
                let mu = theta[j] * MEANS[j];
                let sigma = theta[3 + j] * STDDEVS[j];
                let h = 2.0 * width / steps as f64;
                (0..=steps)
                    .map(|k| {
                        let z = -width + k as f64 * h;
                        let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
                        let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
                        w * h * pdf * WEIGHT[j] * (mu + sigma * z - TARGET[j]).powi(2)
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// Central differences of [`smoothed`] in all six parameters.
    pub fn finite_difference(theta: &[f64]) -> Vec<f64> {
        let h = 1e-4;
        (0..theta.len())
            .map(|i| {
                let mut up = theta.to_vec();
                let mut down = theta.to_vec();
                up[i] += h;
                down[i] -= h;
                (smoothed(&up) - smoothed(&down)) / (2.0 * h)
            })
            .collect()
    }

    pub struct Check {
        pub estimate: f64,
        pub std_error: f64,
        pub reference: f64,
    }

    impl Check {
        pub fn within(&self, k: f64) -> bool {
            (self.estimate - self.reference).abs() <= k * self.std_error
        }
    }

    /// Monte-Carlo score gradient against finite differences at a random θ.
    pub fn check_point(seed: u64, samples: usize) -> Vec<Check> {
        let mut rng = rng_from_seed(seed);
        let theta: Vec<f64> = (0..6).map(|_| rng.gen_range(0.6..1.4)).collect();
        let p = params(theta[..3].to_vec(), theta[3..].to_vec());
        let mut sum = [0.0; 6];
        let mut sq = [0.0; 6];
        for _ in 0..samples {
            let draw = sample_prediction(&p, &mut rng);
            let g = score_gradient(&p, &draw.continuous, surrogate(&draw.continuous));
            for (i, v) in g.theta_mu.iter().chain(&g.theta_sigma).enumerate() {
                sum[i] += v;
                sq[i] += v * v;
            }
        }
        let n = samples as f64;
        finite_difference(&theta)
            .into_iter()
            .enumerate()
            .map(|(i, reference)| {
                let mean = sum[i] / n;
                let var = (sq[i] / n - mean * mean) * n / (n - 1.0);
                Check {
                    estimate: mean,
                    std_error: (var / n).sqrt(),
                    reference,
                }
            })
            .collect()
    }
}

pub mod toy {
    use stosched::{two_task_maintenance, Instance, Scenario};

    pub fn instance() -> Instance {
        two_task_maintenance()
    }

    /// The five equiprobable realizations.
    pub fn scenarios() -> Vec<Scenario> {
        (3..=7).map(|y2| Scenario::new(vec![4, y2])).collect()
    }

    /// `mean makespan + rho · Σ_ω Σ_j deviation` via the event oracle.
    pub fn objective(z: &[u32], rho: f64) -> f64 {
        let inst = instance();
        let ys = scenarios();
        let mut makespan = 0u64;
        let mut deviation = 0u64;
        for y in &ys {
            let c = super::brute_force_repair(&inst, z, y);
            makespan += (0..2)
                .map(|j| u64::from(c[j] + y.durations[j]))
                .max()
                .unwrap();
            deviation += (0..2).map(|j| u64::from(c[j] - z[j])).sum::<u64>();
        }
        makespan as f64 / ys.len() as f64 + rho * deviation as f64
    }
}
