//! Instance readers: PSPLib single-mode `.sm` files and a JSON format that
//! additionally carries start-to-start min-lags and resource calendars.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::instance::{Instance, Lag, ResourceDef, Successor, Task, Time, Unavailability};

#[derive(Debug, Clone, PartialEq)]
pub struct ParseReport {
    pub instance: Instance,
    /// Fields that were read but deliberately ignored.
    pub warnings: Vec<String>,
}

const PRECEDENCE: &str = "PRECEDENCE RELATIONS";
const REQUESTS: &str = "REQUESTS/DURATIONS";
const AVAILABILITIES: &str = "RESOURCEAVAILABILITIES";
const HEADER: &str = "header";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    ProjectInfo,
    Precedence,
    Requests,
    Availabilities,
}

impl Section {
    fn name(self) -> &'static str {
        match self {
            Section::Header => HEADER,
            Section::ProjectInfo => "PROJECT INFORMATION",
            Section::Precedence => PRECEDENCE,
            Section::Requests => REQUESTS,
            Section::Availabilities => AVAILABILITIES,
        }
    }
}

fn parse_err(line: usize, section: Section, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        section: section.name().to_string(),
        message: message.into(),
    }
}

fn number<T: std::str::FromStr>(tok: &str, line: usize, section: Section) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, section, format!("expected a number, found {tok:?}")))
}

/// Value after the first `:` on a header line, e.g. `jobs (incl. supersource/sink ):  32`.
fn header_value(text: &str, line: usize) -> Result<u32> {
    let tail = text
        .split_once(':')
        .map(|(_, v)| v)
        .ok_or_else(|| parse_err(line, Section::Header, "missing ':'"))?;
    let tok = tail
        .split_whitespace()
        .next()
        .ok_or_else(|| parse_err(line, Section::Header, "missing value"))?;
    number(tok, line, Section::Header)
}

#[derive(Default)]
struct SmRows {
    successors: Vec<Option<Vec<usize>>>,
    durations: Vec<Option<(Time, Vec<u32>)>>,
    capacities: Option<Vec<u32>>,
}

/// Parse a PSPLib single-mode file.
///
/// Job numbers are 1-based in the file and become 0-based task ids. The
/// dummy source and sink are kept as zero-duration tasks.
pub fn parse_sm(text: &str) -> Result<ParseReport> {
    let mut warnings = Vec::new();
    let mut jobs: Option<usize> = None;
    let mut renewable: Option<usize> = None;
    let mut section = Section::Header;
    // Lines still expected to be column headers inside the current section.
    let mut skip = 0usize;
    let mut rows = SmRows::default();
    let mut last_line = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let trimmed = raw.trim();

        if trimmed.starts_with("****") {
            if section != Section::Header {
                section = Section::Header;
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        if let Some(next) = section_start(trimmed) {
            section = next;
            skip = match next {
                Section::Precedence => 1,
                Section::Requests => 2,
                Section::Availabilities => 1,
                Section::ProjectInfo => 1,
                Section::Header => 0,
            };
            if matches!(next, Section::Precedence | Section::Requests) {
                let n = jobs.ok_or_else(|| {
                    parse_err(line, next, "section appears before the jobs count")
                })?;
                if next == Section::Precedence {
                    rows.successors = vec![None; n];
                } else {
                    rows.durations = vec![None; n];
                }
            }
            continue;
        }
        if skip > 0 {
            skip -= 1;
            continue;
        }

        match section {
            Section::Header => {
                let lower = trimmed.to_ascii_lowercase();
                if lower.starts_with("jobs") {
                    jobs = Some(header_value(trimmed, line)? as usize);
                } else if lower.starts_with("- renewable") {
                    renewable = Some(header_value(trimmed, line)? as usize);
                } else if lower.starts_with("- nonrenewable") {
                    if header_value(trimmed, line)? > 0 {
                        warnings.push("nonrenewable resources ignored".to_string());
                    }
                } else if lower.starts_with("- doubly") {
                    if header_value(trimmed, line)? > 0 {
                        warnings.push("doubly constrained resources ignored".to_string());
                    }
                } else if lower.starts_with("horizon") {
                    warnings.push("horizon ignored".to_string());
                }
            }
            Section::ProjectInfo => {
                warnings.push(format!(
                    "project information ignored (release date, due date, tardiness cost): {trimmed}"
                ));
            }
            Section::Precedence => {
                let toks: Vec<&str> = trimmed.split_whitespace().collect();
                if toks.len() < 3 {
                    return Err(parse_err(
                        line,
                        section,
                        "expected job, modes, successor count",
                    ));
                }
                let job: usize = number(toks[0], line, section)?;
                let modes: usize = number(toks[1], line, section)?;
                let count: usize = number(toks[2], line, section)?;
                if modes != 1 {
                    return Err(parse_err(
                        line,
                        section,
                        "multi-mode jobs are not supported",
                    ));
                }
                if toks.len() != 3 + count {
                    return Err(parse_err(
                        line,
                        section,
                        format!(
                            "job {job} declares {count} successors but lists {}",
                            toks.len() - 3
                        ),
                    ));
                }
                let slot = job_slot(&mut rows.successors, job, line, section)?;
                let succ = toks[3..]
                    .iter()
                    .map(|t| number::<usize>(t, line, section))
                    .collect::<Result<Vec<_>>>()?;
                *slot = Some(succ);
            }
            Section::Requests => {
                let m = renewable
                    .ok_or_else(|| parse_err(line, section, "renewable resource count missing"))?;
                let toks: Vec<&str> = trimmed.split_whitespace().collect();
                if toks.len() < 3 + m {
                    return Err(parse_err(
                        line,
                        section,
                        format!("expected {} columns, found {}", 3 + m, toks.len()),
                    ));
                }
                let job: usize = number(toks[0], line, section)?;
                let _mode: usize = number(toks[1], line, section)?;
                let duration: Time = number(toks[2], line, section)?;
                let demands = toks[3..3 + m]
                    .iter()
                    .map(|t| number::<u32>(t, line, section))
                    .collect::<Result<Vec<_>>>()?;
                let slot = job_slot(&mut rows.durations, job, line, section)?;
                *slot = Some((duration, demands));
            }
            Section::Availabilities => {
                let m = renewable
                    .ok_or_else(|| parse_err(line, section, "renewable resource count missing"))?;
                let caps = trimmed
                    .split_whitespace()
                    .map(|t| number::<u32>(t, line, section))
                    .collect::<Result<Vec<_>>>()?;
                if caps.len() < m {
                    return Err(parse_err(
                        line,
                        section,
                        format!("expected {m} capacities, found {}", caps.len()),
                    ));
                }
                if caps.len() > m {
                    warnings.push("capacities of non-renewable resources ignored".to_string());
                }
                rows.capacities = Some(caps[..m].to_vec());
                section = Section::Header;
            }
        }
    }

    let n = jobs.ok_or_else(|| parse_err(last_line, Section::Header, "jobs count missing"))?;
    let m = renewable.ok_or_else(|| {
        parse_err(
            last_line,
            Section::Header,
            "renewable resource count missing",
        )
    })?;
    let successors = complete(rows.successors, n, last_line, Section::Precedence)?;
    let durations = complete(rows.durations, n, last_line, Section::Requests)?;
    let capacities = rows.capacities.ok_or_else(|| {
        parse_err(
            last_line,
            Section::Availabilities,
            "section missing or truncated",
        )
    })?;

    let mut tasks = Vec::with_capacity(n);
    for (id, ((duration, demands), succ)) in durations.into_iter().zip(successors).enumerate() {
        let successors = succ
            .into_iter()
            .map(|s| {
                if s == 0 || s > n {
                    Err(parse_err(
                        last_line,
                        Section::Precedence,
                        format!("job {} has successor {s} outside 1..={n}", id + 1),
                    ))
                } else {
                    Ok(Successor::finish_to_start(s - 1))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        tasks.push(Task {
            id,
            duration,
            demands,
            successors,
        });
    }
    let resources = capacities
        .into_iter()
        .enumerate()
        .map(|(id, capacity)| ResourceDef { id, capacity })
        .collect::<Vec<_>>();
    debug_assert_eq!(resources.len(), m);

    finish(
        Instance {
            name: String::new(),
            tasks,
            resources,
            unavailability: Vec::new(),
        },
        warnings,
    )
}

fn section_start(trimmed: &str) -> Option<Section> {
    let upper = trimmed.to_ascii_uppercase();
    if upper.starts_with("PRECEDENCE RELATIONS") {
        Some(Section::Precedence)
    } else if upper.starts_with("REQUESTS/DURATIONS") {
        Some(Section::Requests)
    } else if upper.starts_with("RESOURCEAVAILABILITIES") {
        Some(Section::Availabilities)
    } else if upper.starts_with("PROJECT INFORMATION") {
        Some(Section::ProjectInfo)
    } else {
        None
    }
}

fn job_slot<T>(
    slots: &mut [Option<T>],
    job: usize,
    line: usize,
    section: Section,
) -> Result<&mut Option<T>> {
    let n = slots.len();
    if job == 0 || job > n {
        return Err(parse_err(
            line,
            section,
            format!("job number {job} outside 1..={n}"),
        ));
    }
    let slot = &mut slots[job - 1];
    if slot.is_some() {
        return Err(parse_err(line, section, format!("job {job} listed twice")));
    }
    Ok(slot)
}

fn complete<T>(slots: Vec<Option<T>>, n: usize, line: usize, section: Section) -> Result<Vec<T>> {
    if slots.len() != n {
        return Err(parse_err(line, section, "section missing"));
    }
    let present = slots.iter().filter(|s| s.is_some()).count();
    if present != n {
        return Err(parse_err(
            line,
            section,
            format!("truncated: {present} of {n} jobs listed"),
        ));
    }
    Ok(slots.into_iter().flatten().collect())
}

fn finish(instance: Instance, warnings: Vec<String>) -> Result<ParseReport> {
    let violations = instance.validate();
    if !violations.is_empty() {
        let joined = violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::InvalidInstance(joined));
    }
    Ok(ParseReport { instance, warnings })
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| schema(format!("{path}.{key}"), "missing field"))
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| schema(path, "expected an object"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| schema(path, "expected an array"))
}

fn as_u32(v: &Value, path: &str) -> Result<u32> {
    v.as_u64()
        .and_then(|x| u32::try_from(x).ok())
        .ok_or_else(|| schema(path, "expected a nonnegative integer"))
}

fn optional_array<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a [Value]> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(&[]),
        Some(v) => Ok(as_array(v, &format!("{path}.{key}"))?.as_slice()),
    }
}

/// Parse the JSON instance format.
///
/// ```json
/// { "tasks": [{ "id": 0, "duration": 4, "demands": [1],
///               "successors": [{ "id": 1, "minLag": 3 }] }],
///   "resources": [{ "id": 0, "capacity": 1 }],
///   "unavailability": [{ "resource": 0, "start": 5, "end": 10 }] }
/// ```
///
/// A successor without `minLag` is finish-to-start.
pub fn parse_json(text: &str) -> Result<ParseReport> {
    let root: Value = serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
    let obj = as_object(&root, "$")?;
    let mut warnings = Vec::new();

    let name = match obj.get("name") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(schema("name", "expected a string")),
    };

    let mut resources = Vec::new();
    for (i, r) in as_array(field(obj, "resources", "$")?, "resources")?
        .iter()
        .enumerate()
    {
        let path = format!("resources[{i}]");
        let ro = as_object(r, &path)?;
        let id = as_u32(field(ro, "id", &path)?, &format!("{path}.id"))? as usize;
        let capacity = as_u32(field(ro, "capacity", &path)?, &format!("{path}.capacity"))?;
        resources.push(ResourceDef { id, capacity });
    }
    resources.sort_by_key(|r| r.id);

    let mut tasks = Vec::new();
    for (i, t) in as_array(field(obj, "tasks", "$")?, "tasks")?
        .iter()
        .enumerate()
    {
        let path = format!("tasks[{i}]");
        let to = as_object(t, &path)?;
        let id = as_u32(field(to, "id", &path)?, &format!("{path}.id"))? as usize;
        let duration = as_u32(field(to, "duration", &path)?, &format!("{path}.duration"))?;
        let demands = as_array(field(to, "demands", &path)?, &format!("{path}.demands"))?
            .iter()
            .enumerate()
            .map(|(k, d)| as_u32(d, &format!("{path}.demands[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        let mut successors = Vec::new();
        for (k, s) in optional_array(to, "successors", &path)?.iter().enumerate() {
            let spath = format!("{path}.successors[{k}]");
            let so = as_object(s, &spath)?;
            let target = as_u32(field(so, "id", &spath)?, &format!("{spath}.id"))? as usize;
            let lag = match so.get("minLag") {
                None | Some(Value::Null) => Lag::FinishToStart,
                Some(v) => Lag::StartToStart(as_u32(v, &format!("{spath}.minLag"))?),
            };
            successors.push(Successor { task: target, lag });
        }
        for key in to.keys() {
            if !matches!(key.as_str(), "id" | "duration" | "demands" | "successors") {
                warnings.push(format!("{path}.{key} ignored"));
            }
        }
        tasks.push(Task {
            id,
            duration,
            demands,
            successors,
        });
    }
    tasks.sort_by_key(|t| t.id);

    let mut unavailability = Vec::new();
    for (i, w) in optional_array(obj, "unavailability", "$")?
        .iter()
        .enumerate()
    {
        let path = format!("unavailability[{i}]");
        let wo = as_object(w, &path)?;
        unavailability.push(Unavailability {
            resource: as_u32(field(wo, "resource", &path)?, &format!("{path}.resource"))? as usize,
            start: as_u32(field(wo, "start", &path)?, &format!("{path}.start"))?,
            end: as_u32(field(wo, "end", &path)?, &format!("{path}.end"))?,
        });
    }

    for key in obj.keys() {
        if !matches!(
            key.as_str(),
            "name" | "tasks" | "resources" | "unavailability"
        ) {
            warnings.push(format!("{key} ignored"));
        }
    }

    finish(
        Instance {
            name,
            tasks,
            resources,
            unavailability,
        },
        warnings,
    )
}

/// Serialize an instance to the JSON format read by [`parse_json`].
pub fn to_json_value(instance: &Instance) -> Value {
    let tasks: Vec<Value> = instance
        .tasks
        .iter()
        .map(|t| {
            let successors: Vec<Value> = t
                .successors
                .iter()
                .map(|s| match s.lag {
                    Lag::FinishToStart => json!({ "id": s.task }),
                    Lag::StartToStart(l) => json!({ "id": s.task, "minLag": l }),
                })
                .collect();
            json!({
                "id": t.id,
                "duration": t.duration,
                "demands": t.demands,
                "successors": successors,
            })
        })
        .collect();
    let resources: Vec<Value> = instance
        .resources
        .iter()
        .map(|r| json!({ "id": r.id, "capacity": r.capacity }))
        .collect();
    let unavailability: Vec<Value> = instance
        .unavailability
        .iter()
        .map(|w| json!({ "resource": w.resource, "start": w.start, "end": w.end }))
        .collect();
    let mut root = json!({
        "tasks": tasks,
        "resources": resources,
        "unavailability": unavailability,
    });
    if !instance.name.is_empty() {
        root["name"] = Value::String(instance.name.clone());
    }
    root
}

pub fn to_json(instance: &Instance) -> String {
    serde_json::to_string_pretty(&to_json_value(instance)).expect("instance serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::two_task_maintenance;

    const MINIMAL_SM: &str = "\
************************************************************************
jobs (incl. supersource/sink ):  3
horizon                       :  10
RESOURCES
  - renewable                 :  1   R
  - nonrenewable              :  0   N
  - doubly constrained        :  0   D
************************************************************************
PROJECT INFORMATION:
pronr.  #jobs rel.date duedate tardcost  MPM-Time
    1      1      0        9        2         4
************************************************************************
PRECEDENCE RELATIONS:
jobnr.    #modes  #successors   successors
   1        1          1           2
   2        1          1           3
   3        1          0
************************************************************************
REQUESTS/DURATIONS:
jobnr. mode duration  R 1
------------------------------------------------------------------------
  1      1     0       0
  2      1     4       2
  3      1     0       0
************************************************************************
RESOURCEAVAILABILITIES:
  R 1
    4
************************************************************************
";

    #[test]
    fn minimal_sm() {
        let report = parse_sm(MINIMAL_SM).unwrap();
        let inst = &report.instance;
        assert_eq!(inst.baseline().durations, vec![0, 4, 0]);
        assert_eq!(inst.tasks[1].demands, vec![2]);
        assert_eq!(inst.resources, vec![ResourceDef { id: 0, capacity: 4 }]);
        assert_eq!(
            inst.tasks[0].successors,
            vec![Successor::finish_to_start(1)]
        );
        assert!(report.warnings.iter().any(|w| w.contains("due date")));
    }

    #[test]
    fn truncated_precedence_names_section() {
        let cut = MINIMAL_SM.find("   3        1          0").unwrap();
        let err = parse_sm(&MINIMAL_SM[..cut]).unwrap_err();
        match err {
            Error::Parse { section, .. } => assert_eq!(section, PRECEDENCE),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_field_reports_line() {
        let bad = MINIMAL_SM.replace("  2      1     4       2", "  2      1     x       2");
        match parse_sm(&bad).unwrap_err() {
            Error::Parse { line, section, .. } => {
                assert_eq!(section, REQUESTS);
                assert_eq!(line, 23);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inconsistent_successor_count() {
        let bad = MINIMAL_SM.replace(
            "   1        1          1           2",
            "   1        1          2           2",
        );
        assert!(matches!(parse_sm(&bad), Err(Error::Parse { .. })));
    }

    const TOY_JSON: &str = r#"{
        "tasks": [
            { "id": 0, "duration": 4, "demands": [1], "successors": [] },
            { "id": 1, "duration": 5, "demands": [1], "successors": [] }
        ],
        "resources": [{ "id": 0, "capacity": 1 }],
        "unavailability": [{ "resource": 0, "start": 5, "end": 10 }]
    }"#;

    #[test]
    fn toy_json() {
        let inst = parse_json(TOY_JSON).unwrap().instance;
        let mut expected = two_task_maintenance();
        expected.name.clear();
        assert_eq!(inst, expected);
    }

    #[test]
    fn min_lag_edge() {
        let text = r#"{ "tasks": [
            { "id": 0, "duration": 2, "demands": [], "successors": [{ "id": 1, "minLag": 3 }] },
            { "id": 1, "duration": 2, "demands": [] } ],
            "resources": [] }"#;
        let inst = parse_json(text).unwrap().instance;
        assert_eq!(inst.tasks[0].successors, vec![Successor::min_lag(1, 3)]);
    }

    #[test]
    fn missing_capacity_path() {
        let text = r#"{ "tasks": [], "resources": [{ "id": 0 }] }"#;
        match parse_json(text).unwrap_err() {
            Error::Schema { path, .. } => assert_eq!(path, "resources[0].capacity"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_instance_rejected() {
        let text = r#"{ "tasks": [
            { "id": 0, "duration": 2, "demands": [2] } ],
            "resources": [{ "id": 0, "capacity": 1 }] }"#;
        assert!(matches!(parse_json(text), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn json_roundtrip_toy() {
        let toy = two_task_maintenance();
        let back = parse_json(&to_json(&toy)).unwrap().instance;
        assert_eq!(back, toy);
    }
}
