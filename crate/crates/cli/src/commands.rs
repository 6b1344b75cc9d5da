//! Pipeline stages run one at a time, exchanging files under `out/<instance>/`.
//!
//! `gen` writes the dataset, `solve-det`, `solve-saa` and `train-dfl` each
//! write `<method>.json` (the first-stage schedule) next to it, and `eval`
//! evaluates whatever schedules are present for the configured methods.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use stosched::dfl::{predict, train};
use stosched::regret::{evaluate_with_perfect, perfect_schedules, Decision};
use stosched::saa::{deterministic_baseline, solve_saa};
use stosched::scenario::{dataset_from_json, dataset_to_json, scenarios_to_csv, Dataset};
use stosched::{solve_min_makespan, Schedule};

use crate::config::{ExperimentConfig, Method};
use crate::experiment::{compare, dataset_for, write_results, InstanceResult, MethodResult};
use crate::instances::{resolve, LoadedInstance};

pub const DATASET: &str = "dataset.json";

fn instance_dir(config: &ExperimentConfig, loaded: &LoadedInstance) -> Result<PathBuf> {
    let dir = config.out.join(&loaded.name);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn schedule_path(dir: &Path, method: Method) -> PathBuf {
    dir.join(format!("{}.json", method.name()))
}

/// Stored dataset, or a fresh one with the run's seeding when absent.
fn load_dataset(
    config: &ExperimentConfig,
    loaded: &LoadedInstance,
    index: usize,
) -> Result<Dataset> {
    let path = config.out.join(&loaded.name).join(DATASET);
    if path.is_file() {
        let text = fs::read_to_string(&path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let data = dataset_from_json(&value).with_context(|| format!("in {}", path.display()))?;
        for y in data.train.iter().chain(&data.validation).chain(&data.test) {
            loaded.instance.check_scenario(y)?;
        }
        Ok(data)
    } else {
        dataset_for(loaded, config, index)
    }
}

fn each_instance(
    config: &ExperimentConfig,
    mut f: impl FnMut(usize, &LoadedInstance, PathBuf) -> Result<()>,
) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let loaded = resolve(&config.instances)?;
    let mut dirs = Vec::new();
    for (k, l) in loaded.iter().enumerate() {
        let dir = instance_dir(config, l)?;
        f(k, l, dir.clone())?;
        dirs.push(dir);
    }
    Ok(dirs)
}

pub fn gen(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    each_instance(config, |k, l, dir| {
        let data = dataset_for(l, config, k)?;
        fs::write(
            dir.join(DATASET),
            serde_json::to_string_pretty(&dataset_to_json(&data))? + "\n",
        )?;
        fs::write(dir.join("train.csv"), scenarios_to_csv(&data.train))?;
        fs::write(
            dir.join("validation.csv"),
            scenarios_to_csv(&data.validation),
        )?;
        fs::write(dir.join("test.csv"), scenarios_to_csv(&data.test))?;
        Ok(())
    })
}

pub fn solve_det(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    each_instance(config, |k, l, dir| {
        let data = load_dataset(config, l, k)?;
        let s = deterministic_baseline(&l.instance, &data, &config.budget())?;
        fs::write(
            schedule_path(&dir, Method::Deterministic),
            s.to_json() + "\n",
        )?;
        Ok(())
    })
}

pub fn solve_saa_cmd(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    each_instance(config, |k, l, dir| {
        let data = load_dataset(config, l, k)?;
        let rho = config.penalty.rho(l.instance.task_count())?;
        let n = config.saa.scenarios.min(data.train.len());
        let sol = solve_saa(&l.instance, &data.train[..n], &config.saa_config(rho))?;
        fs::write(
            schedule_path(&dir, Method::Saa),
            sol.first_stage.to_json() + "\n",
        )?;
        fs::write(dir.join("saa_solution.json"), sol.to_json() + "\n")?;
        fs::write(dir.join("saa_trace.csv"), sol.trace_csv())?;
        Ok(())
    })
}

pub fn train_dfl(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    each_instance(config, |k, l, dir| {
        let data = load_dataset(config, l, k)?;
        let rho = config.penalty.rho(l.instance.task_count())?;
        let outcome = train(&l.instance, &data, &config.train_config(rho))?;
        let s = solve_min_makespan(&l.instance, &predict(&outcome.params), &config.budget())?;
        fs::write(schedule_path(&dir, Method::Dfl), s.to_json() + "\n")?;
        fs::write(dir.join("dfl_params.json"), outcome.params.to_json() + "\n")?;
        fs::write(dir.join("dfl_curve.csv"), outcome.curve_csv())?;
        Ok(())
    })
}

/// Evaluate stored schedules and write the result tables to `config.out`.
pub fn eval(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let loaded = resolve(&config.instances)?;
    let budget = config.budget();
    let mut results = Vec::new();
    for (k, l) in loaded.iter().enumerate() {
        let dir = config.out.join(&l.name);
        let data = load_dataset(config, l, k)?;
        let rho = config.penalty.rho(l.instance.task_count())?;
        let perfect = perfect_schedules(&l.instance, &data.test, &budget)?;
        let mut methods = Vec::new();
        for &method in &config.methods {
            let path = schedule_path(&dir, method);
            let text = fs::read_to_string(&path).with_context(|| {
                format!("no {method} schedule for {} ({})", l.name, path.display())
            })?;
            let schedule: Schedule = serde_json::from_str(&text)
                .with_context(|| format!("malformed {}", path.display()))?;
            let evaluation = evaluate_with_perfect(
                &l.instance,
                Decision::FirstStage(&schedule),
                &data.test,
                &perfect,
                rho,
                &budget,
            )?;
            methods.push(MethodResult { method, evaluation });
        }
        results.push(InstanceResult {
            name: l.name.clone(),
            source: l.source.clone(),
            task_count: l.instance.task_count(),
            rho: rho.value(),
            dataset_seed: data.seed,
            methods,
        });
    }
    let comparisons = compare(config, &results)?;
    write_results(config, &results, &comparisons)
}
