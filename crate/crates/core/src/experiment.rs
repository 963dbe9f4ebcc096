//! Scenario sweeps and CSV result output.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::io::{preset_taskset, taskset_preset_name, GammaSpec, ParseError, TASKSET_DENSITIES};
use crate::model::{taskset_density, ModelError, ProcessorModel, SchedulingInstance, Task};
use crate::sim::{simulate, FeedbackEvents, Mode, ScenarioConfig, SimError};

pub const CSV_HEADER: [&str; 9] = [
    "sweep_value",
    "mode",
    "dynamic_energy_mJ",
    "total_energy_mJ",
    "normalized_vs_openloop",
    "deadline_misses",
    "solve_count",
    "wall_time_ms",
    "status",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("at least one mode is required")]
    NoModes,
    #[error("sweep has no values")]
    EmptySweep,
    #[error("taskset preset for density {0} does not exist")]
    UnknownDensity(f64),
    #[error(transparent)]
    Gamma(#[from] ParseError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(SimError),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("writing CSV: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// One scenario; the sweep value column holds the taskset density.
    Single,
    /// The built-in tasksets at these densities.
    Density(Vec<f64>),
    /// A uniform estimation factor for every task, at these values.
    Gamma(Vec<f64>),
}

impl Sweep {
    pub fn all_densities() -> Self {
        Sweep::Density(TASKSET_DENSITIES.to_vec())
    }

    /// 0.1, 0.2, ..., 1.0
    pub fn gamma_decile() -> Self {
        Sweep::Gamma((1..=10).map(|k| k as f64 / 10.0).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub processor: ProcessorModel,
    pub m: usize,
    /// Used by [`Sweep::Single`] and [`Sweep::Gamma`].
    pub taskset: Vec<Task>,
    /// Used by [`Sweep::Single`] and [`Sweep::Density`].
    pub gamma: GammaSpec,
    pub modes: Vec<Mode>,
    pub events: FeedbackEvents,
    pub sweep: Sweep,
    /// Fill the wall-time column. Off by default so output is reproducible.
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub sweep_value: f64,
    pub mode: Mode,
    pub status: RowStatus,
    pub dynamic_mj: Option<f64>,
    pub total_mj: Option<f64>,
    pub normalized_vs_openloop: Option<f64>,
    pub deadline_misses: usize,
    pub solve_count: usize,
    pub wall_time_ms: Option<f64>,
}

struct Point {
    value: f64,
    tasks: Vec<Task>,
    gamma: GammaSpec,
}

fn points(spec: &ExperimentSpec) -> Result<Vec<Point>, ExperimentError> {
    let out: Vec<Point> = match &spec.sweep {
        Sweep::Single => vec![Point {
            value: taskset_density(&spec.taskset),
            tasks: spec.taskset.clone(),
            gamma: spec.gamma.clone(),
        }],
        Sweep::Density(values) => values
            .iter()
            .map(|&d| {
                let tasks = preset_taskset(&taskset_preset_name(d))
                    .map_err(|_| ExperimentError::UnknownDensity(d))?;
                Ok(Point {
                    value: d,
                    tasks,
                    gamma: spec.gamma.clone(),
                })
            })
            .collect::<Result<_, ExperimentError>>()?,
        Sweep::Gamma(values) => values
            .iter()
            .map(|&g| Point {
                value: g,
                tasks: spec.taskset.clone(),
                gamma: GammaSpec::Uniform(g),
            })
            .collect(),
    };
    if out.is_empty() {
        return Err(ExperimentError::EmptySweep);
    }
    Ok(out)
}

fn run_one(
    spec: &ExperimentSpec,
    point: &Point,
    mode: Mode,
) -> Result<ExperimentRow, ExperimentError> {
    let instance = SchedulingInstance::new(point.tasks.clone(), spec.processor.clone(), spec.m)?;
    let gamma = point.gamma.resolve(&point.tasks)?;
    let config =
        ScenarioConfig::new(instance, gamma, mode, spec.events).map_err(ExperimentError::Sim)?;
    let started = Instant::now();
    let result = simulate(&config);
    let elapsed = started.elapsed().as_secs_f64() * 1e3;
    let wall_time_ms = spec.timing.then_some(elapsed);
    match result {
        Ok(trace) => Ok(ExperimentRow {
            sweep_value: point.value,
            mode,
            status: RowStatus::Ok,
            dynamic_mj: Some(trace.energy.dynamic_mj),
            total_mj: Some(trace.energy.total_mj),
            normalized_vs_openloop: None,
            deadline_misses: trace.deadline_misses().len(),
            solve_count: trace.solve_count(),
            wall_time_ms,
        }),
        Err(SimError::Infeasible) => Ok(ExperimentRow {
            sweep_value: point.value,
            mode,
            status: RowStatus::Infeasible,
            dynamic_mj: None,
            total_mj: None,
            normalized_vs_openloop: None,
            deadline_misses: 0,
            solve_count: 1,
            wall_time_ms,
        }),
        Err(e) => Err(ExperimentError::Sim(e)),
    }
}

/// Runs every (sweep value, mode) pair. Rows come back in sweep order, modes
/// in the order given, whatever order the scenarios finish in.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>, ExperimentError> {
    if spec.modes.is_empty() {
        return Err(ExperimentError::NoModes);
    }
    let points = points(spec)?;
    let jobs: Vec<(&Point, Mode)> = points
        .iter()
        .flat_map(|p| spec.modes.iter().map(move |&m| (p, m)))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|&(p, mode)| run_one(spec, p, mode))
        .collect::<Result<Vec<_>, _>>()?;

    for chunk in rows.chunks_mut(spec.modes.len()) {
        let baseline = chunk
            .iter()
            .find(|r| r.mode == Mode::OpenLoop)
            .and_then(|r| r.dynamic_mj);
        for row in chunk.iter_mut() {
            row.normalized_vs_openloop = match (row.dynamic_mj, baseline) {
                (Some(e), Some(b)) if b > 0.0 => Some(e / b),
                (Some(0.0), Some(_)) => Some(1.0),
                _ => None,
            };
        }
    }
    Ok(rows)
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

/// Writes RFC 4180 CSV with [`CSV_HEADER`] columns.
pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            format!("{:.2}", r.sweep_value),
            r.mode.to_string(),
            fmt_opt(r.dynamic_mj, 6),
            fmt_opt(r.total_mj, 6),
            fmt_opt(r.normalized_vs_openloop, 6),
            r.deadline_misses.to_string(),
            r.solve_count.to_string(),
            fmt_opt(r.wall_time_ms, 3),
            match r.status {
                RowStatus::Ok => "ok".to_string(),
                RowStatus::Infeasible => "infeasible".to_string(),
            },
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[ExperimentRow]) -> Result<String, ExperimentError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}
