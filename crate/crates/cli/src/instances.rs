//! Resolving instance entries (paths, globs, the built-in toy) to instances.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use stosched::psplib::{parse_json, parse_sm};
use stosched::scenario::DurationModel;
use stosched::{two_task_maintenance, Instance};

/// Name of the built-in two-task instance.
pub const TOY: &str = "toy";

#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub name: String,
    pub source: String,
    pub instance: Instance,
    pub model: DurationModel,
}

/// Read one `.sm` or `.json` file.
pub fn read_instance(path: &Path) -> Result<Instance> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let report = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => parse_json(&text),
        _ => parse_sm(&text),
    }
    .with_context(|| format!("cannot parse {}", path.display()))?;
    for w in &report.warnings {
        log::warn!("{}: {w}", path.display());
    }
    let mut instance = report.instance;
    if instance.name.is_empty() {
        instance.name = stem(path);
    }
    Ok(instance)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Expand entries in order; glob matches are sorted, duplicates dropped.
pub fn resolve(entries: &[String]) -> Result<Vec<LoadedInstance>> {
    let mut out: Vec<LoadedInstance> = Vec::new();
    let mut missing = Vec::new();
    for entry in entries {
        if entry == TOY {
            out.push(LoadedInstance {
                name: TOY.into(),
                source: TOY.into(),
                instance: two_task_maintenance(),
                model: DurationModel::two_task_uniform(),
            });
            continue;
        }
        let mut paths: Vec<PathBuf> = if entry.contains(['*', '?', '[']) {
            glob::glob(entry)
                .with_context(|| format!("bad pattern `{entry}`"))?
                .collect::<std::result::Result<_, _>>()?
        } else {
            vec![PathBuf::from(entry)]
        };
        paths.sort();
        if paths.is_empty() {
            missing.push(entry.clone());
        }
        for p in paths {
            if !p.is_file() {
                missing.push(p.display().to_string());
                continue;
            }
            let source = p.display().to_string();
            if out.iter().any(|l| l.source == source) {
                continue;
            }
            out.push(LoadedInstance {
                name: stem(&p),
                source,
                instance: read_instance(&p)?,
                model: DurationModel::NormalSqrt,
            });
        }
    }
    if !missing.is_empty() {
        bail!("instances not found: {}", missing.join(", "));
    }
    let mut names: Vec<&str> = out.iter().map(|l| l.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        bail!("instance names must be unique");
    }
    Ok(out)
}
