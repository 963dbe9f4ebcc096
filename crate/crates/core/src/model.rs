//! Task and processor models, the scheduling time grid and energy arithmetic.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Grid points closer than this (seconds) are merged.
pub const GRID_MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("task {id}: {field} must be {requirement}, got {value}")]
    InvalidTask {
        id: TaskId,
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("processor model {name:?}: {reason}")]
    InvalidProcessor { name: String, reason: String },
    #[error("duplicate task id {0}")]
    DuplicateTask(TaskId),
    #[error("processor count must be at least 1")]
    NoProcessors,
    #[error("no task has a deadline after t = {0}")]
    EmptyHorizon(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

/// An aperiodic real-time task.
///
/// `exec` is the estimated execution time at full speed (s = 1). Executing at
/// speed `s` for `t` seconds retires `s * t` seconds of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task {
    id: TaskId,
    arrival: f64,
    exec: f64,
    deadline: f64,
}

impl Task {
    pub fn new(id: u32, arrival: f64, exec: f64, deadline: f64) -> Result<Self, ModelError> {
        let id = TaskId(id);
        let check = |ok: bool, field, requirement, value| {
            if ok {
                Ok(())
            } else {
                Err(ModelError::InvalidTask {
                    id,
                    field,
                    requirement,
                    value,
                })
            }
        };
        check(
            arrival.is_finite() && arrival >= 0.0,
            "arrival",
            "finite and >= 0",
            arrival,
        )?;
        check(
            exec.is_finite() && exec > 0.0,
            "exec",
            "finite and > 0",
            exec,
        )?;
        check(
            deadline.is_finite() && deadline > 0.0,
            "deadline",
            "finite and > 0",
            deadline,
        )?;
        Ok(Self {
            id,
            arrival,
            exec,
            deadline,
        })
    }

    pub fn id(&self) -> TaskId {
        self.id
    }

    pub fn arrival(&self) -> f64 {
        self.arrival
    }

    /// Estimated minimum execution time.
    pub fn exec(&self) -> f64 {
        self.exec
    }

    /// Relative deadline.
    pub fn deadline(&self) -> f64 {
        self.deadline
    }

    pub fn abs_deadline(&self) -> f64 {
        self.arrival + self.deadline
    }

    /// Minimum task density `exec / deadline`. A task with density above 1
    /// cannot finish even when it runs alone at full speed.
    pub fn density(&self) -> f64 {
        self.exec / self.deadline
    }

    /// Estimated cycle count for a processor running at `f_max_mhz`.
    pub fn cycles(&self, f_max_mhz: f64) -> f64 {
        self.exec * f_max_mhz * 1e6
    }
}

/// Sum of the minimum densities of `tasks`.
pub fn taskset_density(tasks: &[Task]) -> f64 {
    tasks.iter().map(Task::density).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedLevel {
    /// Frequency normalized by `f_max`.
    pub speed: f64,
    pub active_mw: f64,
}

/// A DVFS processor with discrete operating points.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessorModel {
    name: String,
    f_max_mhz: f64,
    levels: Vec<SpeedLevel>,
    idle_mw: f64,
}

impl ProcessorModel {
    pub fn new(
        name: impl Into<String>,
        f_max_mhz: f64,
        levels: Vec<SpeedLevel>,
        idle_mw: f64,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        let fail = |reason: String| ModelError::InvalidProcessor {
            name: name.clone(),
            reason,
        };
        if !(f_max_mhz.is_finite() && f_max_mhz > 0.0) {
            return Err(fail(format!("f_max must be positive, got {f_max_mhz}")));
        }
        if !(idle_mw.is_finite() && idle_mw >= 0.0) {
            return Err(fail(format!(
                "idle power must be non-negative, got {idle_mw}"
            )));
        }
        let Some(last) = levels.last() else {
            return Err(fail("at least one speed level is required".into()));
        };
        if last.speed != 1.0 {
            return Err(fail(format!(
                "highest speed must be 1.0, got {}",
                last.speed
            )));
        }
        for (q, level) in levels.iter().enumerate() {
            if !(level.speed.is_finite() && level.speed > 0.0 && level.speed <= 1.0) {
                return Err(fail(format!(
                    "level {q}: speed {} outside (0, 1]",
                    level.speed
                )));
            }
            if !(level.active_mw.is_finite() && level.active_mw >= idle_mw) {
                return Err(fail(format!(
                    "level {q}: active power {} below idle power {idle_mw}",
                    level.active_mw
                )));
            }
        }
        for (q, pair) in levels.windows(2).enumerate() {
            if pair[1].speed <= pair[0].speed {
                return Err(fail(format!(
                    "speeds not strictly increasing at level {}",
                    q + 1
                )));
            }
            if pair[1].active_mw <= pair[0].active_mw {
                return Err(fail(format!(
                    "active power not strictly increasing at level {}",
                    q + 1
                )));
            }
        }
        Ok(Self {
            name,
            f_max_mhz,
            levels,
            idle_mw,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn f_max_mhz(&self) -> f64 {
        self.f_max_mhz
    }

    pub fn levels(&self) -> &[SpeedLevel] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn speed(&self, q: usize) -> f64 {
        self.levels[q].speed
    }

    pub fn idle_mw(&self) -> f64 {
        self.idle_mw
    }

    /// Active power above idle at level `q`, in mW.
    pub fn dynamic_mw(&self, q: usize) -> f64 {
        self.levels[q].active_mw - self.idle_mw
    }

    /// Indices of the levels on the lower convex hull of the points
    /// `(speed, dynamic power)` together with the idle origin `(0, 0)`.
    /// Levels strictly above the hull are never needed by an energy-optimal mix.
    pub fn lower_hull_levels(&self) -> Vec<usize> {
        let mut hull: Vec<(f64, f64, Option<usize>)> = vec![(0.0, 0.0, None)];
        for q in 0..self.levels.len() {
            let p = (self.speed(q), self.dynamic_mw(q), Some(q));
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                // b is on or above segment a-p
                if cross <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.into_iter().filter_map(|p| p.2).collect()
    }

    /// The same processor restricted to a subset of its levels.
    pub fn restricted(&self, keep: &[usize]) -> Result<Self, ModelError> {
        let levels = keep.iter().map(|&q| self.levels[q]).collect();
        Self::new(self.name.clone(), self.f_max_mhz, levels, self.idle_mw)
    }
}

/// Tasks plus `m` identical processors.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulingInstance {
    tasks: Vec<Task>,
    model: ProcessorModel,
    m: usize,
}

impl SchedulingInstance {
    pub fn new(tasks: Vec<Task>, model: ProcessorModel, m: usize) -> Result<Self, ModelError> {
        if m == 0 {
            return Err(ModelError::NoProcessors);
        }
        let mut seen = std::collections::BTreeSet::new();
        for t in &tasks {
            if !seen.insert(t.id()) {
                return Err(ModelError::DuplicateTask(t.id()));
            }
        }
        Ok(Self { tasks, model, m })
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task(&self, id: TaskId) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id() == id)
    }

    pub fn model(&self) -> &ProcessorModel {
        &self.model
    }

    pub fn processors(&self) -> usize {
        self.m
    }
}

/// Index range `first..end` of the grid intervals in which a task may run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub task: TaskId,
    pub first: usize,
    pub end: usize,
}

impl Window {
    pub fn contains(&self, interval: usize) -> bool {
        self.first <= interval && interval < self.end
    }

    pub fn intervals(&self) -> std::ops::Range<usize> {
        self.first..self.end
    }

    pub fn is_empty(&self) -> bool {
        self.first >= self.end
    }
}

/// Sorted, de-duplicated arrival and deadline instants from `t_start` on,
/// with each live task's window of intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    windows: Vec<Window>,
}

impl TimeGrid {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn start(&self) -> f64 {
        self.points[0]
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn interval_count(&self) -> usize {
        self.points.len() - 1
    }

    /// Length of interval `mu`.
    pub fn width(&self, mu: usize) -> f64 {
        self.points[mu + 1] - self.points[mu]
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn window(&self, task: TaskId) -> Option<&Window> {
        self.windows.iter().find(|w| w.task == task)
    }

    /// Index of the grid point nearest to `t`.
    fn index_of(points: &[f64], t: f64) -> usize {
        let idx = points.partition_point(|&p| p < t);
        match (idx.checked_sub(1), points.get(idx)) {
            (Some(lo), Some(&hi)) if (t - points[lo]) < (hi - t) => lo,
            (Some(lo), None) => lo,
            _ => idx,
        }
    }
}

/// Builds the grid for the tasks whose absolute deadline lies after `t_start`.
/// Arrivals before `t_start` are clamped to it.
pub fn build_time_grid(tasks: &[Task], t_start: f64) -> Result<TimeGrid, ModelError> {
    build_time_grid_with(tasks, t_start, &[])
}

/// Like [`build_time_grid`], with additional interior split points.
/// Extra points outside `(t_start, last deadline)` are ignored.
pub fn build_time_grid_with(
    tasks: &[Task],
    t_start: f64,
    extra: &[f64],
) -> Result<TimeGrid, ModelError> {
    let live: Vec<&Task> = tasks
        .iter()
        .filter(|t| t.abs_deadline() > t_start + GRID_MERGE_TOL)
        .collect();
    if live.is_empty() {
        return Err(ModelError::EmptyHorizon(t_start));
    }
    let horizon = live
        .iter()
        .map(|t| t.abs_deadline())
        .fold(f64::NEG_INFINITY, f64::max);

    let mut raw = vec![t_start];
    for t in &live {
        raw.push(t.arrival().max(t_start));
        raw.push(t.abs_deadline());
    }
    raw.extend(
        extra
            .iter()
            .copied()
            .filter(|&p| p > t_start && p < horizon),
    );
    raw.sort_by(f64::total_cmp);

    let mut points: Vec<f64> = Vec::with_capacity(raw.len());
    for p in raw {
        match points.last() {
            Some(&last) if p - last <= GRID_MERGE_TOL => {}
            _ => points.push(p),
        }
    }

    let windows = live
        .iter()
        .map(|t| Window {
            task: t.id(),
            first: TimeGrid::index_of(&points, t.arrival().max(t_start)),
            end: TimeGrid::index_of(&points, t.abs_deadline()),
        })
        .collect();
    Ok(TimeGrid { points, windows })
}

/// Energy of an executed (or planned) schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// Busy time weighted by active-minus-idle power, mJ.
    pub dynamic_mj: f64,
    /// `dynamic_mj` plus idle power of all processors over the horizon, mJ.
    pub total_mj: f64,
    pub busy_s: BTreeMap<TaskId, f64>,
    pub horizon_s: f64,
}

impl EnergyReport {
    /// Builds a report from `(task, level, duration)` busy pieces.
    pub fn from_busy<I>(pieces: I, model: &ProcessorModel, m: usize, horizon_s: f64) -> Self
    where
        I: IntoIterator<Item = (TaskId, usize, f64)>,
    {
        let mut dynamic_mj = 0.0;
        let mut busy_s = BTreeMap::new();
        for (task, q, dt) in pieces {
            dynamic_mj += dt * model.dynamic_mw(q);
            *busy_s.entry(task).or_insert(0.0) += dt;
        }
        Self {
            dynamic_mj,
            total_mj: dynamic_mj + m as f64 * horizon_s * model.idle_mw(),
            busy_s,
            horizon_s,
        }
    }
}
