//! Duration scenarios: sampling, seeded train/validation/test datasets and
//! the per-task base statistics estimators are initialized from.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{Instance, Scenario, Time};
use crate::scalar::{round_clamp, Real};

/// Lower bound on any standard deviation used as a distribution parameter.
pub const SIGMA_FLOOR: f64 = 1e-3;

/// Default split sizes (train, validation, test).
pub const DEFAULT_SIZES: (usize, usize, usize) = (100, 50, 50);

/// How realized durations are drawn from an instance's baseline durations.
#[derive(Debug, Clone, PartialEq)]
pub enum DurationModel {
    /// `round(N(d, sqrt(d)))`, clamped to at least 1; zero stays zero.
    NormalSqrt,
    /// Independent discrete uniform `U{lo..=hi}` per task.
    Uniform(Vec<(Time, Time)>),
}

impl DurationModel {
    /// One deterministic task at 4 and one task uniform on `{3, ..., 7}`.
    pub fn two_task_uniform() -> Self {
        DurationModel::Uniform(vec![(4, 4), (3, 7)])
    }

    pub fn sample<R: Rng + ?Sized>(&self, instance: &Instance, rng: &mut R) -> Scenario {
        match self {
            DurationModel::NormalSqrt => sample_scenario(instance, rng),
            DurationModel::Uniform(ranges) => Scenario::new(
                ranges
                    .iter()
                    .map(|&(lo, hi)| if lo >= hi { lo } else { rng.gen_range(lo..=hi) })
                    .collect(),
            ),
        }
    }
}

/// Draw one scenario with durations `N(d_j, sqrt(d_j))` rounded half up and
/// clamped to at least one; dummy tasks (`d_j = 0`) stay at zero.
pub fn sample_scenario<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> Scenario {
    Scenario::new(
        instance
            .tasks
            .iter()
            .map(|task| {
                if task.duration == 0 {
                    0
                } else {
                    let mean = f64::from(task.duration);
                    let draw = mean + mean.sqrt() * f64::standard_normal(rng);
                    round_clamp(draw, 1)
                }
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<Scenario>,
    pub validation: Vec<Scenario>,
    pub test: Vec<Scenario>,
    pub seed: u64,
}

/// Seeded random state used for every draw in this crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draw train, validation and test splits, in that order, from one seeded stream.
pub fn make_dataset(
    instance: &Instance,
    seed: u64,
    sizes: (usize, usize, usize),
) -> Result<Dataset> {
    make_dataset_with(instance, &DurationModel::NormalSqrt, seed, sizes)
}

pub fn make_dataset_with(
    instance: &Instance,
    model: &DurationModel,
    seed: u64,
    (n_train, n_val, n_test): (usize, usize, usize),
) -> Result<Dataset> {
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::Config("dataset sizes must be positive".into()));
    }
    if let DurationModel::Uniform(ranges) = model {
        if ranges.len() != instance.task_count() {
            return Err(Error::LengthMismatch {
                expected: instance.task_count(),
                actual: ranges.len(),
            });
        }
    }
    let mut rng = rng_from_seed(seed);
    let mut draw =
        |n: usize| -> Vec<Scenario> { (0..n).map(|_| model.sample(instance, &mut rng)).collect() };
    let train = draw(n_train);
    let validation = draw(n_val);
    let test = draw(n_test);
    Ok(Dataset {
        train,
        validation,
        test,
        seed,
    })
}

/// Per-task sample mean and population standard deviation of a scenario set.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseStats<F> {
    pub means: Vec<F>,
    pub stddevs: Vec<F>,
}

impl<F: Real> BaseStats<F> {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Rounded means, clamped to at least one for real tasks.
    pub fn rounded_means(&self, instance: &Instance) -> Scenario {
        Scenario::new(
            self.means
                .iter()
                .zip(&instance.tasks)
                .map(|(&m, t)| {
                    if t.duration == 0 {
                        0
                    } else {
                        round_clamp(m, 1)
                    }
                })
                .collect(),
        )
    }
}

/// Statistics over `scenarios`, with [`SIGMA_FLOOR`] applied. Tasks with a
/// zero baseline duration get mean 0 and the floor as deviation.
pub fn stats_of<F: Real>(instance: &Instance, scenarios: &[Scenario]) -> Result<BaseStats<F>> {
    if scenarios.is_empty() {
        return Err(Error::Degenerate(
            "no scenarios to compute statistics from".into(),
        ));
    }
    let n = instance.task_count();
    for s in scenarios {
        instance.check_scenario(s)?;
    }
    let floor = F::of(SIGMA_FLOOR);
    let count = F::of_u64(scenarios.len() as u64);
    let mut means = Vec::with_capacity(n);
    let mut stddevs = Vec::with_capacity(n);
    for j in 0..n {
        if instance.tasks[j].duration == 0 {
            means.push(F::zero());
            stddevs.push(floor);
            continue;
        }
        let mean = scenarios
            .iter()
            .map(|s| F::of_u64(u64::from(s.durations[j])))
            .sum::<F>()
            / count;
        let var = scenarios
            .iter()
            .map(|s| {
                let d = F::of_u64(u64::from(s.durations[j])) - mean;
                d * d
            })
            .sum::<F>()
            / count;
        means.push(mean);
        stddevs.push(var.sqrt().max(floor));
    }
    Ok(BaseStats { means, stddevs })
}

/// Base statistics of the training split.
pub fn base_stats<F: Real>(instance: &Instance, dataset: &Dataset) -> Result<BaseStats<F>> {
    stats_of(instance, &dataset.train)
}

/// One row per scenario, one column per task (`t0, t1, ...`).
pub fn scenarios_to_csv(scenarios: &[Scenario]) -> String {
    let n = scenarios.first().map_or(0, Scenario::len);
    let mut out = String::new();
    out.push_str(
        &(0..n)
            .map(|j| format!("t{j}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    for s in scenarios {
        out.push_str(
            &s.durations
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
    }
    out
}

pub fn scenarios_from_csv(text: &str) -> Result<Vec<Scenario>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let width = match lines.next() {
        Some((_, header)) => header.split(',').count(),
        None => return Ok(Vec::new()),
    };
    lines
        .map(|(idx, line)| {
            let durations = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<Time>().map_err(|_| Error::Parse {
                        line: idx + 1,
                        section: "scenarios".into(),
                        message: format!("not a duration: {tok:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if durations.len() != width {
                return Err(Error::Parse {
                    line: idx + 1,
                    section: "scenarios".into(),
                    message: format!("expected {width} columns, found {}", durations.len()),
                });
            }
            Ok(Scenario::new(durations))
        })
        .collect()
}

pub fn dataset_to_json(dataset: &Dataset) -> serde_json::Value {
    let rows =
        |s: &[Scenario]| -> Vec<Vec<Time>> { s.iter().map(|x| x.durations.clone()).collect() };
    serde_json::json!({
        "seed": dataset.seed,
        "train": rows(&dataset.train),
        "validation": rows(&dataset.validation),
        "test": rows(&dataset.test),
    })
}

pub fn dataset_from_json(value: &serde_json::Value) -> Result<Dataset> {
    let split = |key: &str| -> Result<Vec<Scenario>> {
        let rows: Vec<Vec<Time>> =
            serde_json::from_value(value.get(key).cloned().ok_or_else(|| Error::Schema {
                path: key.into(),
                message: "missing field".into(),
            })?)
            .map_err(|e| Error::Schema {
                path: key.into(),
                message: e.to_string(),
            })?;
        Ok(rows.into_iter().map(Scenario::new).collect())
    };
    Ok(Dataset {
        train: split("train")?,
        validation: split("validation")?,
        test: split("test")?,
        seed: value.get("seed").and_then(|s| s.as_u64()).unwrap_or(0),
    })
}
