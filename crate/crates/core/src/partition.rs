//! Workload partitioning: the per-interval, per-level execution fractions that
//! minimize dynamic energy while finishing every task inside its window.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::lp::{solve_lp, LinearProgram, LpError, LpOutcome};
use crate::model::{build_time_grid_with, ModelError, ProcessorModel, Task, TaskId, TimeGrid};

/// Remaining work at or below this is treated as done.
pub const WORK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    #[error("remaining workload cannot meet every deadline on the available processors")]
    Infeasible,
    #[error("task {task} has {remaining} s of work left but its deadline {deadline} is not after t = {t_now}")]
    Expired {
        task: TaskId,
        remaining: f64,
        deadline: f64,
        t_now: f64,
    },
    #[error("nothing left to schedule at t = {0}")]
    Empty(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("solver failure: {0}")]
    Solver(#[from] LpError),
    #[error("solver reported an unbounded partition LP")]
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingTask {
    pub task: Task,
    /// Remaining estimated minimum execution time, seconds.
    pub remaining: f64,
}

/// The scheduler's view of the system at a re-plan instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    t_now: f64,
    pending: Vec<PendingTask>,
    model: ProcessorModel,
    m: usize,
    grid: TimeGrid,
}

impl Snapshot {
    /// Tasks with no remaining work are dropped. Pending tasks are kept in
    /// ascending id order.
    pub fn new(
        t_now: f64,
        tasks: &[Task],
        remaining: &BTreeMap<TaskId, f64>,
        model: ProcessorModel,
        m: usize,
    ) -> Result<Self, PartitionError> {
        Self::with_split_points(t_now, tasks, remaining, model, m, &[])
    }

    /// Snapshot with all tasks at their full estimated work.
    pub fn initial(
        t_now: f64,
        tasks: &[Task],
        model: ProcessorModel,
        m: usize,
    ) -> Result<Self, PartitionError> {
        let remaining = tasks.iter().map(|t| (t.id(), t.exec())).collect();
        Self::new(t_now, tasks, &remaining, model, m)
    }

    pub fn with_split_points(
        t_now: f64,
        tasks: &[Task],
        remaining: &BTreeMap<TaskId, f64>,
        model: ProcessorModel,
        m: usize,
        split: &[f64],
    ) -> Result<Self, PartitionError> {
        if m == 0 {
            return Err(ModelError::NoProcessors.into());
        }
        let mut pending = Vec::new();
        for task in tasks {
            let left = remaining.get(&task.id()).copied().unwrap_or(0.0);
            if left <= WORK_TOL {
                continue;
            }
            if task.abs_deadline() <= t_now {
                return Err(PartitionError::Expired {
                    task: task.id(),
                    remaining: left,
                    deadline: task.abs_deadline(),
                    t_now,
                });
            }
            pending.push(PendingTask {
                task: *task,
                remaining: left,
            });
        }
        if pending.is_empty() {
            return Err(PartitionError::Empty(t_now));
        }
        pending.sort_by_key(|p| p.task.id());
        let live: Vec<Task> = pending.iter().map(|p| p.task).collect();
        let grid = build_time_grid_with(&live, t_now, split)?;
        Ok(Self {
            t_now,
            pending,
            model,
            m,
            grid,
        })
    }

    /// The same snapshot with extra interior grid points.
    pub fn refined(&self, split: &[f64]) -> Result<Self, PartitionError> {
        let tasks: Vec<Task> = self.pending.iter().map(|p| p.task).collect();
        let remaining = self.remaining_map();
        let mut points: Vec<f64> = self.grid.points()[1..].to_vec();
        points.extend_from_slice(split);
        Self::with_split_points(
            self.t_now,
            &tasks,
            &remaining,
            self.model.clone(),
            self.m,
            &points,
        )
    }

    /// The same snapshot with different remaining work.
    pub fn with_remaining(
        &self,
        remaining: &BTreeMap<TaskId, f64>,
    ) -> Result<Self, PartitionError> {
        let tasks: Vec<Task> = self.pending.iter().map(|p| p.task).collect();
        Self::new(self.t_now, &tasks, remaining, self.model.clone(), self.m)
    }

    /// The same snapshot on a different processor model.
    pub fn with_model(&self, model: ProcessorModel) -> Self {
        Self {
            model,
            ..self.clone()
        }
    }

    pub fn t_now(&self) -> f64 {
        self.t_now
    }

    pub fn pending(&self) -> &[PendingTask] {
        &self.pending
    }

    pub fn remaining_map(&self) -> BTreeMap<TaskId, f64> {
        self.pending
            .iter()
            .map(|p| (p.task.id(), p.remaining))
            .collect()
    }

    pub fn model(&self) -> &ProcessorModel {
        &self.model
    }

    pub fn processors(&self) -> usize {
        self.m
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
}

/// Identifies one LP column: task `task` (index into the snapshot's pending
/// list) at level `level` during interval `interval`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct VarKey {
    pub interval: usize,
    pub task: usize,
    pub level: usize,
}

/// Row layout of a built partition LP.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionLp {
    pub lp: LinearProgram,
    pub vars: Vec<VarKey>,
    /// `(task index, interval)` of each per-task exclusivity row, in order.
    pub exclusivity_rows: Vec<(usize, usize)>,
    /// Interval of each capacity row, in order. Intervals with no live task get none.
    pub capacity_rows: Vec<usize>,
}

/// Builds the LP with the task state eliminated: one completion equality per
/// task, `sum_{mu in U_i} width(mu) * sum_q s_q * w[mu][i][q] = r_i`.
pub fn build_partition_lp(snapshot: &Snapshot) -> PartitionLp {
    let grid = snapshot.grid();
    let model = snapshot.model();
    let levels = model.level_count();
    let windows: Vec<_> = snapshot
        .pending()
        .iter()
        .map(|p| *grid.window(p.task.id()).expect("pending task has a window"))
        .collect();

    let mut vars = Vec::new();
    for mu in 0..grid.interval_count() {
        for (i, w) in windows.iter().enumerate() {
            if w.contains(mu) {
                vars.extend((0..levels).map(|level| VarKey {
                    interval: mu,
                    task: i,
                    level,
                }));
            }
        }
    }

    let objective = vars
        .iter()
        .map(|v| grid.width(v.interval) * model.dynamic_mw(v.level))
        .collect();
    let mut lp = LinearProgram::unit_box(objective);
    let n = vars.len();

    for (i, p) in snapshot.pending().iter().enumerate() {
        let row = vars
            .iter()
            .map(|v| {
                if v.task == i {
                    grid.width(v.interval) * model.speed(v.level)
                } else {
                    0.0
                }
            })
            .collect();
        lp.add_eq(row, p.remaining);
    }

    let mut exclusivity_rows = Vec::new();
    for (i, w) in windows.iter().enumerate() {
        for mu in w.intervals() {
            let row = vars
                .iter()
                .map(|v| {
                    if v.task == i && v.interval == mu {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            lp.add_le(row, 1.0);
            exclusivity_rows.push((i, mu));
        }
    }

    let mut capacity_rows = Vec::new();
    for mu in 0..grid.interval_count() {
        if !vars.iter().any(|v| v.interval == mu) {
            continue;
        }
        let row: Vec<f64> = vars
            .iter()
            .map(|v| if v.interval == mu { 1.0 } else { 0.0 })
            .collect();
        debug_assert_eq!(row.len(), n);
        lp.add_le(row, snapshot.processors() as f64);
        capacity_rows.push(mu);
    }

    PartitionLp {
        lp,
        vars,
        exclusivity_rows,
        capacity_rows,
    }
}

/// Execution fractions for every pending task, level and interval.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadPlan {
    grid: TimeGrid,
    tasks: Vec<TaskId>,
    levels: usize,
    /// `w[mu][i][q]`
    fractions: Vec<Vec<Vec<f64>>>,
    objective_mj: f64,
}

impl WorkloadPlan {
    /// Wraps raw fractions; the objective is recomputed from them.
    pub fn from_fractions(
        grid: TimeGrid,
        tasks: Vec<TaskId>,
        model: &ProcessorModel,
        fractions: Vec<Vec<Vec<f64>>>,
    ) -> Self {
        let levels = model.level_count();
        let mut objective_mj = 0.0;
        for (mu, per_task) in fractions.iter().enumerate() {
            for per_level in per_task {
                for (q, &w) in per_level.iter().enumerate() {
                    objective_mj += grid.width(mu) * w * model.dynamic_mw(q);
                }
            }
        }
        Self {
            grid,
            tasks,
            levels,
            fractions,
            objective_mj,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn tasks(&self) -> &[TaskId] {
        &self.tasks
    }

    pub fn level_count(&self) -> usize {
        self.levels
    }

    pub fn fraction(&self, interval: usize, task: usize, level: usize) -> f64 {
        self.fractions[interval][task][level]
    }

    /// Per-level fractions of every task in `interval`, in task order.
    pub fn interval(&self, interval: usize) -> &[Vec<f64>] {
        &self.fractions[interval]
    }

    pub fn fractions_mut(&mut self) -> &mut Vec<Vec<Vec<f64>>> {
        &mut self.fractions
    }

    /// Planned dynamic energy over the horizon, mJ.
    pub fn objective_mj(&self) -> f64 {
        self.objective_mj
    }

    /// Work (seconds at full speed) the plan gives task index `i`.
    pub fn planned_work(&self, i: usize, model: &ProcessorModel) -> f64 {
        self.fractions
            .iter()
            .enumerate()
            .map(|(mu, per_task)| {
                let rate: f64 = per_task[i]
                    .iter()
                    .enumerate()
                    .map(|(q, w)| model.speed(q) * w)
                    .sum();
                self.grid.width(mu) * rate
            })
            .sum()
    }
}

pub fn solve_partition(snapshot: &Snapshot) -> Result<WorkloadPlan, PartitionError> {
    let grid = snapshot.grid();
    if snapshot
        .pending()
        .iter()
        .any(|p| grid.window(p.task.id()).is_none_or(|w| w.is_empty()))
    {
        return Err(PartitionError::Infeasible);
    }

    let built = build_partition_lp(snapshot);
    let x = match solve_lp(&built.lp)? {
        LpOutcome::Optimal { x, .. } => x,
        LpOutcome::Infeasible => return Err(PartitionError::Infeasible),
        LpOutcome::Unbounded => return Err(PartitionError::Unbounded),
    };

    let levels = snapshot.model().level_count();
    let n = snapshot.pending().len();
    let mut fractions = vec![vec![vec![0.0; levels]; n]; grid.interval_count()];
    for (key, &value) in built.vars.iter().zip(&x) {
        fractions[key.interval][key.task][key.level] = value.clamp(0.0, 1.0);
    }
    let tasks = snapshot.pending().iter().map(|p| p.task.id()).collect();
    Ok(WorkloadPlan::from_fractions(
        grid.clone(),
        tasks,
        snapshot.model(),
        fractions,
    ))
}
