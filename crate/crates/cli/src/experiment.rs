//! The full pipeline: datasets, method runs, evaluation and result files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stosched::dfl::{predict, train};
use stosched::regret::{evaluate_with_perfect, perfect_schedules, Decision, MethodComparison};
use stosched::saa::{deterministic_baseline, solve_saa};
use stosched::scenario::{make_dataset_with, Dataset};
use stosched::{Evaluation64, Optimality, Schedule};

use crate::config::{ExperimentConfig, Method};
use crate::instances::{resolve, LoadedInstance};

pub const RECORDS: &str = "records.csv";
pub const SUMMARY: &str = "summary.csv";
pub const TTESTS: &str = "ttests.csv";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: Method,
    pub evaluation: Evaluation64,
}

#[derive(Debug, Clone)]
pub struct InstanceResult {
    pub name: String,
    pub source: String,
    pub task_count: usize,
    pub rho: f64,
    pub dataset_seed: u64,
    pub methods: Vec<MethodResult>,
}

impl InstanceResult {
    pub fn get(&self, method: Method) -> Option<&Evaluation64> {
        self.methods
            .iter()
            .find(|m| m.method == method)
            .map(|m| &m.evaluation)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub instances: Vec<InstanceResult>,
    pub comparisons: Vec<MethodComparison<f64>>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub set: String,
    pub penalty: String,
    pub instance: String,
    pub method: String,
    pub rho: f64,
    pub scenario: usize,
    pub f_corr: u32,
    pub f_star: u32,
    pub deviation_sum: u64,
    pub penalty_cost: f64,
    pub pregret: f64,
    pub normalized_pregret: f64,
    pub first_stage_optimality: Optimality,
    pub perfect_optimality: Optimality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub set: String,
    pub penalty: String,
    pub instance: String,
    pub method: String,
    pub rho: f64,
    pub scenarios: usize,
    pub first_stage_makespan: u32,
    pub mean_pregret: f64,
    pub mean_normalized_pregret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestRow {
    pub set: String,
    pub penalty: String,
    pub method_a: String,
    pub method_b: String,
    pub n: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    /// `ok` or `degenerate`.
    pub status: String,
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub significant: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    config: &'a ExperimentConfig,
    instances: Vec<ManifestInstance<'a>>,
    files: Vec<&'static str>,
}

#[derive(Serialize)]
struct ManifestInstance<'a> {
    name: &'a str,
    source: &'a str,
    tasks: usize,
    rho: f64,
    dataset_seed: u64,
}

/// Dataset for the `index`-th instance of a run.
pub fn dataset_for(
    loaded: &LoadedInstance,
    config: &ExperimentConfig,
    index: usize,
) -> Result<Dataset> {
    let d = &config.dataset;
    Ok(make_dataset_with(
        &loaded.instance,
        &loaded.model,
        config.seed.wrapping_add(index as u64),
        (d.train, d.validation, d.test),
    )?)
}

/// The first-stage schedule a method commits to.
pub fn first_stage(
    loaded: &LoadedInstance,
    dataset: &Dataset,
    method: Method,
    config: &ExperimentConfig,
) -> Result<Schedule> {
    let inst = &loaded.instance;
    let rho = config.penalty.rho(inst.task_count())?;
    let budget = config.budget();
    Ok(match method {
        Method::Deterministic => deterministic_baseline(inst, dataset, &budget)?,
        Method::Saa => {
            let k = config.saa.scenarios.min(dataset.train.len());
            solve_saa(inst, &dataset.train[..k], &config.saa_config(rho))?.first_stage
        }
        Method::Dfl => {
            let outcome = train(inst, dataset, &config.train_config(rho))?;
            stosched::solve_min_makespan(inst, &predict(&outcome.params), &budget)?
        }
    })
}

pub fn run_instance(
    loaded: &LoadedInstance,
    config: &ExperimentConfig,
    index: usize,
) -> Result<InstanceResult> {
    let inst = &loaded.instance;
    let dataset = dataset_for(loaded, config, index)?;
    let rho = config.penalty.rho(inst.task_count())?;
    let budget = config.budget();
    let perfect = perfect_schedules(inst, &dataset.test, &budget)?;
    let mut methods = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        log::info!("{}: {method}", loaded.name);
        let schedule = first_stage(loaded, &dataset, method, config)
            .with_context(|| format!("{} on {}", method, loaded.name))?;
        let evaluation = evaluate_with_perfect(
            inst,
            Decision::FirstStage(&schedule),
            &dataset.test,
            &perfect,
            rho,
            &budget,
        )?;
        methods.push(MethodResult { method, evaluation });
    }
    Ok(InstanceResult {
        name: loaded.name.clone(),
        source: loaded.source.clone(),
        task_count: inst.task_count(),
        rho: rho.value(),
        dataset_seed: config.seed.wrapping_add(index as u64),
        methods,
    })
}

/// Run every method on every instance and write the result files to `config.out`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let loaded = resolve(&config.instances)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()?;
    let instances: Vec<InstanceResult> = pool.install(|| {
        loaded
            .par_iter()
            .enumerate()
            .map(|(k, l)| run_instance(l, config, k))
            .collect::<Result<_>>()
    })?;
    let comparisons = compare(config, &instances)?;
    let files = write_results(config, &instances, &comparisons)?;
    Ok(RunOutput {
        instances,
        comparisons,
        files,
    })
}

/// Paired tests over instances on mean normalized regret, for each method pair.
pub fn compare(
    config: &ExperimentConfig,
    instances: &[InstanceResult],
) -> Result<Vec<MethodComparison<f64>>> {
    let mut out = Vec::new();
    for (i, &a) in config.methods.iter().enumerate() {
        for &b in &config.methods[i + 1..] {
            let means = |m: Method| -> Vec<f64> {
                instances
                    .iter()
                    .filter_map(|r| r.get(m).map(|e| e.mean_normalized_pregret))
                    .collect()
            };
            out.push(MethodComparison::new(
                a.name(),
                means(a),
                b.name(),
                means(b),
            )?);
        }
    }
    Ok(out)
}

pub fn record_rows(config: &ExperimentConfig, instances: &[InstanceResult]) -> Vec<RecordRow> {
    let mut rows = Vec::new();
    for r in instances {
        for m in &r.methods {
            for rec in &m.evaluation.records {
                rows.push(RecordRow {
                    set: config.name.clone(),
                    penalty: config.penalty.to_string(),
                    instance: r.name.clone(),
                    method: m.method.to_string(),
                    rho: r.rho,
                    scenario: rec.scenario,
                    f_corr: rec.f_corr,
                    f_star: rec.f_star,
                    deviation_sum: rec.deviation_sum,
                    penalty_cost: rec.penalty,
                    pregret: rec.pregret,
                    normalized_pregret: rec.normalized_pregret,
                    first_stage_optimality: rec.first_stage_optimality,
                    perfect_optimality: rec.perfect_optimality,
                });
            }
        }
    }
    rows
}

pub fn summary_rows(config: &ExperimentConfig, instances: &[InstanceResult]) -> Vec<SummaryRow> {
    instances
        .iter()
        .flat_map(|r| {
            r.methods.iter().map(move |m| SummaryRow {
                set: config.name.clone(),
                penalty: config.penalty.to_string(),
                instance: r.name.clone(),
                method: m.method.to_string(),
                rho: r.rho,
                scenarios: m.evaluation.records.len(),
                first_stage_makespan: m.evaluation.first_stage.makespan,
                mean_pregret: m.evaluation.mean_pregret,
                mean_normalized_pregret: m.evaluation.mean_normalized_pregret,
            })
        })
        .collect()
}

pub fn ttest_rows(
    config: &ExperimentConfig,
    comparisons: &[MethodComparison<f64>],
) -> Vec<TTestRow> {
    let mean = |v: &[f64]| {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    comparisons
        .iter()
        .map(|c| TTestRow {
            set: config.name.clone(),
            penalty: config.penalty.to_string(),
            method_a: c.method_a.clone(),
            method_b: c.method_b.clone(),
            n: c.means_a.len(),
            mean_a: mean(&c.means_a),
            mean_b: mean(&c.means_b),
            status: if c.test.is_some() { "ok" } else { "degenerate" }.into(),
            t: c.test.map(|t| t.t),
            p: c.test.map(|t| t.p),
            significant: c.significant(),
        })
        .collect()
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Write a CSV even when there are no rows, keeping the header.
fn write_table<T: Serialize + Default>(path: &Path, rows: &[T]) -> Result<()> {
    if rows.is_empty() {
        let mut w = csv::Writer::from_path(path)?;
        w.serialize(T::default())?;
        drop(w);
        let text = fs::read_to_string(path)?;
        let header = text.lines().next().unwrap_or_default();
        fs::write(path, format!("{header}\n"))?;
        return Ok(());
    }
    write_csv(path, rows)
}

impl Default for TTestRow {
    fn default() -> Self {
        Self {
            set: String::new(),
            penalty: String::new(),
            method_a: String::new(),
            method_b: String::new(),
            n: 0,
            mean_a: 0.0,
            mean_b: 0.0,
            status: String::new(),
            t: None,
            p: None,
            significant: false,
        }
    }
}

pub fn write_results(
    config: &ExperimentConfig,
    instances: &[InstanceResult],
    comparisons: &[MethodComparison<f64>],
) -> Result<Vec<PathBuf>> {
    let out = &config.out;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let records = out.join(RECORDS);
    let summary = out.join(SUMMARY);
    let ttests = out.join(TTESTS);
    let manifest = out.join(MANIFEST);
    write_csv(&records, &record_rows(config, instances))?;
    write_csv(&summary, &summary_rows(config, instances))?;
    write_table(&ttests, &ttest_rows(config, comparisons))?;
    let m = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config,
        instances: instances
            .iter()
            .map(|r| ManifestInstance {
                name: &r.name,
                source: &r.source,
                tasks: r.task_count,
                rho: r.rho,
                dataset_seed: r.dataset_seed,
            })
            .collect(),
        files: vec![RECORDS, SUMMARY, TTESTS],
    };
    fs::write(&manifest, serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(vec![records, summary, ttests, manifest])
}
