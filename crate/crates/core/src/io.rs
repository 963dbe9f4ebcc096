//! Built-in presets and the JSON input formats.
//!
//! Taskset files are arrays of `{"id", "arrival", "exec", "deadline"}`
//! objects (seconds). Processor files are
//! `{"name", "f_max_mhz", "idle_mw", "levels": [{"speed", "active_mw"}]}`.
//! Per-task estimation factors are an object mapping task ids (as strings) to
//! factors, e.g. `{"1": 0.5, "2": 0.8}`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::model::{ModelError, ProcessorModel, SpeedLevel, Task, TaskId};

pub const POWERPC_405LP: &str = "powerpc405lp";
pub const XSCALE: &str = "xscale";

/// Densities of the built-in tasksets, `paper:D=<density>`.
pub const TASKSET_DENSITIES: [f64; 7] = [0.50, 0.75, 1.00, 1.25, 1.50, 1.75, 2.00];

/// `(arrival, exec, deadline)` of tasks 1..=3 for each entry of
/// [`TASKSET_DENSITIES`].
const TASKSETS: [[(f64, f64, f64); 3]; 7] = [
    [(0.0, 1.0, 5.0), (0.0, 2.0, 10.0), (0.0, 1.5, 15.0)],
    [(0.0, 1.0, 5.0), (0.0, 3.5, 10.0), (0.0, 3.0, 15.0)],
    [(0.0, 2.0, 5.0), (0.0, 4.0, 10.0), (0.0, 3.0, 15.0)],
    [(0.0, 1.0, 5.0), (0.0, 6.5, 10.0), (0.0, 6.0, 15.0)],
    [(0.0, 2.0, 5.0), (0.0, 7.0, 10.0), (0.0, 6.0, 15.0)],
    [(0.0, 3.0, 5.0), (0.0, 7.5, 10.0), (0.0, 6.0, 15.0)],
    [(0.0, 4.0, 5.0), (0.0, 6.0, 10.0), (0.0, 9.0, 15.0)],
];

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub origin: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.origin)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
            if let Some(col) = self.column {
                write!(f, ":{col}")?;
            }
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("parse error in {0}")]
    Parse(#[from] ParseError),
    #[error("invalid {origin}: {source}")]
    Validation {
        origin: String,
        #[source]
        source: ModelError,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl IoError {
    /// Parse and validation failures, as opposed to I/O failures.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, IoError::Read { .. })
    }
}

fn json_error(origin: &str, err: serde_json::Error) -> ParseError {
    ParseError {
        origin: origin.to_string(),
        line: Some(err.line()).filter(|&l| l > 0),
        column: Some(err.column()).filter(|&c| c > 0),
        message: err.to_string(),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    id: u32,
    arrival: f64,
    exec: f64,
    deadline: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProcessor {
    name: String,
    f_max_mhz: f64,
    idle_mw: f64,
    levels: Vec<SpeedLevel>,
}

pub fn preset_processor(name: &str) -> Result<ProcessorModel, IoError> {
    let (f_max, idle, points): (f64, f64, &[(f64, f64)]) = match name {
        POWERPC_405LP => (
            333.0,
            12.0,
            &[(0.1, 19.0), (0.3, 72.0), (0.8, 600.0), (1.0, 750.0)],
        ),
        XSCALE => (
            1000.0,
            40.0,
            &[
                (0.15, 80.0),
                (0.4, 170.0),
                (0.6, 400.0),
                (0.8, 900.0),
                (1.0, 1600.0),
            ],
        ),
        other => return Err(IoError::UnknownPreset(other.to_string())),
    };
    let levels = points
        .iter()
        .map(|&(speed, active_mw)| SpeedLevel { speed, active_mw })
        .collect();
    ProcessorModel::new(name, f_max, levels, idle).map_err(|source| IoError::Validation {
        origin: name.to_string(),
        source,
    })
}

/// Parses a `paper:D=<density>` preset name into its table row index.
pub fn parse_taskset_preset(name: &str) -> Result<usize, IoError> {
    let unknown = || IoError::UnknownPreset(name.to_string());
    let value: f64 = name
        .strip_prefix("paper:D=")
        .ok_or_else(unknown)?
        .trim()
        .parse()
        .map_err(|_| unknown())?;
    TASKSET_DENSITIES
        .iter()
        .position(|&d| (d - value).abs() < 1e-9)
        .ok_or_else(unknown)
}

pub fn preset_taskset(name: &str) -> Result<Vec<Task>, IoError> {
    let row = parse_taskset_preset(name)?;
    Ok(taskset_row(row))
}

/// Preset name of the taskset with the given table density.
pub fn taskset_preset_name(density: f64) -> String {
    format!("paper:D={density:.2}")
}

fn taskset_row(row: usize) -> Vec<Task> {
    TASKSETS[row]
        .iter()
        .enumerate()
        .map(|(i, &(b, x, d))| Task::new(i as u32 + 1, b, x, d).expect("preset task is valid"))
        .collect()
}

pub fn parse_processor_json(text: &str) -> Result<ProcessorModel, IoError> {
    parse_processor_from(text, "processor")
}

fn parse_processor_from(text: &str, origin: &str) -> Result<ProcessorModel, IoError> {
    let raw: RawProcessor = serde_json::from_str(text).map_err(|e| json_error(origin, e))?;
    ProcessorModel::new(raw.name, raw.f_max_mhz, raw.levels, raw.idle_mw).map_err(|source| {
        IoError::Validation {
            origin: origin.to_string(),
            source,
        }
    })
}

pub fn parse_taskset_json(text: &str) -> Result<Vec<Task>, IoError> {
    parse_taskset_from(text, "taskset")
}

fn parse_taskset_from(text: &str, origin: &str) -> Result<Vec<Task>, IoError> {
    let raw: Vec<RawTask> = serde_json::from_str(text).map_err(|e| json_error(origin, e))?;
    let mut tasks = Vec::with_capacity(raw.len());
    let mut seen = std::collections::BTreeSet::new();
    for (idx, r) in raw.iter().enumerate() {
        let fail = |message: String| ParseError {
            origin: origin.to_string(),
            line: None,
            column: None,
            message: format!("task #{idx}: {message}"),
        };
        let task =
            Task::new(r.id, r.arrival, r.exec, r.deadline).map_err(|e| fail(e.to_string()))?;
        if !seen.insert(task.id()) {
            return Err(fail(format!("duplicate id {}", r.id)).into());
        }
        tasks.push(task);
    }
    Ok(tasks)
}

pub fn parse_gamma_json(text: &str) -> Result<BTreeMap<TaskId, f64>, IoError> {
    parse_gamma_from(text, "gamma")
}

fn parse_gamma_from(text: &str, origin: &str) -> Result<BTreeMap<TaskId, f64>, IoError> {
    let raw: BTreeMap<String, f64> =
        serde_json::from_str(text).map_err(|e| json_error(origin, e))?;
    raw.into_iter()
        .map(|(key, value)| {
            let fail = |message: String| ParseError {
                origin: origin.to_string(),
                line: None,
                column: None,
                message: format!("key {key:?}: {message}"),
            };
            let id: u32 = key
                .trim()
                .parse()
                .map_err(|_| fail("not a task id".into()))?;
            if !(value > 0.0 && value <= 1.0) {
                return Err(fail(format!("estimation factor {value} outside (0, 1]")).into());
            }
            Ok((TaskId(id), value))
        })
        .collect()
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

/// A preset name, or a path to a processor JSON file.
pub fn load_processor(spec: &str) -> Result<ProcessorModel, IoError> {
    match preset_processor(spec) {
        Err(IoError::UnknownPreset(_)) if Path::new(spec).is_file() => {
            parse_processor_from(&read(Path::new(spec))?, spec)
        }
        other => other,
    }
}

/// A `paper:D=<density>` preset, or a path to a taskset JSON file.
pub fn load_taskset(spec: &str) -> Result<Vec<Task>, IoError> {
    if spec.starts_with("paper:") {
        return preset_taskset(spec);
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(IoError::UnknownPreset(spec.to_string()));
    }
    parse_taskset_from(&read(path)?, spec)
}

/// Estimation factors: one global value, or one per task.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSpec {
    Uniform(f64),
    PerTask(BTreeMap<TaskId, f64>),
}

impl GammaSpec {
    /// Factors for `tasks`; a per-task map must cover every task.
    pub fn resolve(&self, tasks: &[Task]) -> Result<BTreeMap<TaskId, f64>, ParseError> {
        match self {
            GammaSpec::Uniform(g) => Ok(tasks.iter().map(|t| (t.id(), *g)).collect()),
            GammaSpec::PerTask(map) => {
                if let Some(t) = tasks.iter().find(|t| !map.contains_key(&t.id())) {
                    return Err(ParseError {
                        origin: "gamma".into(),
                        line: None,
                        column: None,
                        message: format!("no estimation factor for task {}", t.id().0),
                    });
                }
                Ok(map.clone())
            }
        }
    }
}

/// A number in `(0, 1]`, or a path to a per-task JSON map.
pub fn load_gamma(spec: &str) -> Result<GammaSpec, IoError> {
    if let Ok(value) = spec.trim().parse::<f64>() {
        if !(value > 0.0 && value <= 1.0) {
            return Err(ParseError {
                origin: "gamma".into(),
                line: None,
                column: None,
                message: format!("estimation factor {value} outside (0, 1]"),
            }
            .into());
        }
        return Ok(GammaSpec::Uniform(value));
    }
    let path = Path::new(spec);
    Ok(GammaSpec::PerTask(parse_gamma_from(&read(path)?, spec)?))
}
