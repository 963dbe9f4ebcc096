//! Independent checkers: brute-force LP enumeration, the plan-to-continuous
//! schedule round trip, and audits of simulation traces.
//!
//! Nothing here calls into the simplex solver or the ordering code; the
//! checks re-derive what they need from first principles.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::lp::{LinearProgram, LpOutcome};
use crate::model::{ProcessorModel, SchedulingInstance, TaskId};
use crate::ordering::IntervalSchedule;
use crate::partition::{Snapshot, WorkloadPlan};
use crate::sim::{SimulationTrace, TimedSegment};

pub const MAX_ENUM_VARS: usize = 6;
pub const MAX_ENUM_ROWS: usize = 8;
const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("LP too large to enumerate: {vars} variables, {rows} rows")]
    TooLarge { vars: usize, rows: usize },
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// `None` when the system is singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                let (top, bottom) = a.split_at_mut(row);
                for (x, p) in bottom[0][col..n].iter_mut().zip(&top[col][col..n]) {
                    *x -= f * p;
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Minimum over all basic solutions: every choice of `n` linearly independent
/// constraints (rows or bounds) held with equality, filtered for feasibility.
pub fn enumerate_lp_optimum(lp: &LinearProgram) -> Result<LpOutcome, OracleError> {
    let n = lp.var_count();
    let rows = lp.eq_rows.len() + lp.ub_rows.len();
    if n > MAX_ENUM_VARS || rows > MAX_ENUM_ROWS {
        return Err(OracleError::TooLarge { vars: n, rows });
    }

    // Candidate hyperplanes (a, b) meaning a.x = b.
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    planes.extend(lp.eq_rows.iter().cloned().zip(lp.eq_rhs.iter().copied()));
    planes.extend(lp.ub_rows.iter().cloned().zip(lp.ub_rhs.iter().copied()));
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower[j]));
        planes.push((e, lp.upper[j]));
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    let scale = |b: f64| TOL * (1.0 + b.abs());
    let feasible = |x: &[f64]| {
        let dot = |row: &[f64]| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
        lp.eq_rows
            .iter()
            .zip(&lp.eq_rhs)
            .all(|(r, &b)| (dot(r) - b).abs() <= scale(b))
            && lp
                .ub_rows
                .iter()
                .zip(&lp.ub_rhs)
                .all(|(r, &b)| dot(r) <= b + scale(b))
            && x.iter()
                .zip(lp.lower.iter().zip(&lp.upper))
                .all(|(&v, (&l, &u))| v >= l - scale(l) && v <= u + scale(u))
    };

    if n == 0 {
        return Ok(if feasible(&[]) {
            LpOutcome::Optimal {
                x: vec![],
                objective: 0.0,
            }
        } else {
            LpOutcome::Infeasible
        });
    }

    for_each_subset(planes.len(), n, &mut |pick| {
        let a = pick.iter().map(|&i| planes[i].0.clone()).collect();
        let b = pick.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let obj: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                if best.as_ref().is_none_or(|(_, o)| obj < *o) {
                    best = Some((x, obj));
                }
            }
        }
    });

    Ok(match best {
        Some((x, objective)) => LpOutcome::Optimal { x, objective },
        None => LpOutcome::Infeasible,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum RoundtripViolation {
    /// Per-task exclusivity: the fractions of one task in one interval exceed 1.
    TaskFraction {
        task: TaskId,
        interval: usize,
        total: f64,
    },
    /// The interval load exceeds the processor count.
    Capacity {
        interval: usize,
        total: f64,
    },
    /// A fraction outside `[0, 1]`.
    FractionBounds {
        task: TaskId,
        interval: usize,
        level: usize,
        value: f64,
    },
    /// Planned or scheduled work differs from the task's remaining work.
    Completion {
        task: TaskId,
        expected: f64,
        achieved: f64,
    },
    /// The task is assigned outside its window.
    OutsideWindow {
        task: TaskId,
        time: f64,
    },
    /// The task runs on more than one processor at `time`.
    ParallelSelf {
        task: TaskId,
        time: f64,
    },
    /// A processor runs more than one task at `time`.
    ProcessorConflict {
        processor: usize,
        time: f64,
    },
    /// Integrating the assignment over an interval does not give back the fraction.
    Aggregation {
        task: TaskId,
        interval: usize,
        level: usize,
        planned: f64,
        integrated: f64,
    },
    Cost {
        lp: f64,
        continuous: f64,
    },
}

impl fmt::Display for RoundtripViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripReport {
    pub violations: Vec<RoundtripViolation>,
    pub lp_cost: f64,
    pub continuous_cost: f64,
}

impl RoundtripReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Piecewise-constant assignment: processor `processor` runs `task` at
/// `level` on `[start, end)`.
#[derive(Debug, Clone, Copy)]
struct Assignment {
    processor: usize,
    task: TaskId,
    level: usize,
    interval: usize,
    start: f64,
    end: f64,
}

/// Rebuilds a continuous-time assignment from `schedules` and checks it
/// against the plan: the plan's own constraints, the continuous problem's
/// initial/terminal conditions and exclusivity constraints, that integrating
/// the assignment per interval gives back each fraction, and that the two
/// costs agree.
pub fn roundtrip_check(
    plan: &WorkloadPlan,
    schedules: &[IntervalSchedule],
    snapshot: &Snapshot,
) -> RoundtripReport {
    let grid = plan.grid();
    let model = snapshot.model();
    let m = snapshot.processors();
    let mut violations = Vec::new();

    // LP side.
    let mut lp_cost = 0.0;
    for mu in 0..grid.interval_count() {
        let mut load = 0.0;
        for (i, &task) in plan.tasks().iter().enumerate() {
            let mut total = 0.0;
            for q in 0..plan.level_count() {
                let w = plan.fraction(mu, i, q);
                if !(-TOL..=1.0 + TOL).contains(&w) {
                    violations.push(RoundtripViolation::FractionBounds {
                        task,
                        interval: mu,
                        level: q,
                        value: w,
                    });
                }
                total += w;
                lp_cost += grid.width(mu) * w * model.dynamic_mw(q);
            }
            if total > 1.0 + TOL {
                violations.push(RoundtripViolation::TaskFraction {
                    task,
                    interval: mu,
                    total,
                });
            }
            load += total;
        }
        if load > m as f64 + TOL {
            violations.push(RoundtripViolation::Capacity {
                interval: mu,
                total: load,
            });
        }
    }

    // Continuous side: a(t) = 1 on [tau + sigma * width, tau + eta * width).
    let assignments: Vec<Assignment> = schedules
        .iter()
        .flat_map(|s| {
            let mu = s.interval;
            let (t0, width) = (grid.points()[mu], grid.width(mu));
            s.segments.iter().map(move |seg| Assignment {
                processor: seg.processor,
                task: seg.task,
                level: seg.level,
                interval: mu,
                start: t0 + seg.start * width,
                end: t0 + seg.end * width,
            })
        })
        .collect();

    let mut continuous_cost = 0.0;
    for a in &assignments {
        continuous_cost += (a.end - a.start) * model.dynamic_mw(a.level);
    }

    for (i, pending) in snapshot.pending().iter().enumerate() {
        let task = pending.task;
        let id = task.id();
        let window_start = task.arrival().max(snapshot.t_now());
        let window_end = task.abs_deadline();

        // initial condition x(b) = r and terminal condition x(b + d) = 0
        let achieved: f64 = assignments
            .iter()
            .filter(|a| a.task == id)
            .map(|a| (a.end - a.start) * model.speed(a.level))
            .sum();
        if (achieved - pending.remaining).abs() > 1e-7 {
            violations.push(RoundtripViolation::Completion {
                task: id,
                expected: pending.remaining,
                achieved,
            });
        }
        let planned = plan.planned_work(i, model);
        if (planned - pending.remaining).abs() > 1e-7 {
            violations.push(RoundtripViolation::Completion {
                task: id,
                expected: pending.remaining,
                achieved: planned,
            });
        }
        for a in assignments.iter().filter(|a| a.task == id) {
            if a.start < window_start - TOL || a.end > window_end + TOL {
                violations.push(RoundtripViolation::OutsideWindow {
                    task: id,
                    time: a.start,
                });
            }
        }

        // Eq: width * w = integral of sum_k a over the interval
        for mu in 0..grid.interval_count() {
            for q in 0..plan.level_count() {
                let integrated: f64 = assignments
                    .iter()
                    .filter(|a| a.task == id && a.level == q && a.interval == mu)
                    .map(|a| a.end - a.start)
                    .sum();
                let planned = grid.width(mu) * plan.fraction(mu, i, q);
                if (integrated - planned).abs() > 1e-9 * (1.0 + grid.width(mu)) {
                    violations.push(RoundtripViolation::Aggregation {
                        task: id,
                        interval: mu,
                        level: q,
                        planned,
                        integrated,
                    });
                }
            }
        }
    }

    // Exclusivity, evaluated on every piece between consecutive breakpoints.
    let mut breakpoints: Vec<f64> = assignments.iter().flat_map(|a| [a.start, a.end]).collect();
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    for pair in breakpoints.windows(2) {
        if pair[1] - pair[0] <= 1e-12 {
            continue;
        }
        let mid = 0.5 * (pair[0] + pair[1]);
        let active: Vec<&Assignment> = assignments
            .iter()
            .filter(|a| a.start <= mid && mid < a.end)
            .collect();
        let mut per_task: BTreeMap<TaskId, usize> = BTreeMap::new();
        let mut per_proc: BTreeMap<usize, usize> = BTreeMap::new();
        for a in &active {
            *per_task.entry(a.task).or_default() += 1;
            *per_proc.entry(a.processor).or_default() += 1;
        }
        for (&task, &count) in &per_task {
            if count > 1 {
                violations.push(RoundtripViolation::ParallelSelf {
                    task,
                    time: pair[0],
                });
            }
        }
        for (&processor, &count) in &per_proc {
            if count > 1 || processor >= m {
                violations.push(RoundtripViolation::ProcessorConflict {
                    processor,
                    time: pair[0],
                });
            }
        }
    }

    if (lp_cost - continuous_cost).abs() > 1e-9 || (lp_cost - plan.objective_mj()).abs() > 1e-9 {
        violations.push(RoundtripViolation::Cost {
            lp: lp_cost,
            continuous: continuous_cost,
        });
    }

    RoundtripReport {
        violations,
        lp_cost,
        continuous_cost,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AuditViolation {
    ProcessorOverlap(TimedSegment, TimedSegment),
    ParallelSelf(TimedSegment, TimedSegment),
    BeforeArrival(TimedSegment),
    AfterDeadline(TimedSegment),
    AfterFinish(TimedSegment),
    UnknownTask(TaskId),
    Conservation {
        task: TaskId,
        expected: f64,
        executed: f64,
    },
    MissNotLogged(TaskId),
    SpuriousMiss(TaskId),
}

/// Audits an executed trace against the instance and actual work `gamma * exec`.
pub fn audit_trace(
    trace: &SimulationTrace,
    instance: &SchedulingInstance,
    gamma: &BTreeMap<TaskId, f64>,
) -> Vec<AuditViolation> {
    let model: &ProcessorModel = instance.model();
    let mut out = Vec::new();
    let segs = &trace.segments;
    for (i, a) in segs.iter().enumerate() {
        for b in &segs[i + 1..] {
            let overlap = a.start.max(b.start) < a.end.min(b.end) - 1e-9;
            if !overlap {
                continue;
            }
            if a.processor == b.processor {
                out.push(AuditViolation::ProcessorOverlap(*a, *b));
            } else if a.task == b.task {
                out.push(AuditViolation::ParallelSelf(*a, *b));
            }
        }
    }

    let misses = trace.deadline_misses();
    for s in segs {
        if instance.task(s.task).is_none() {
            out.push(AuditViolation::UnknownTask(s.task));
        }
    }
    for task in instance.tasks() {
        let id = task.id();
        for s in segs.iter().filter(|s| s.task == id) {
            if s.start < task.arrival() - 1e-9 {
                out.push(AuditViolation::BeforeArrival(*s));
            }
            if s.end > task.abs_deadline() + 1e-9 {
                out.push(AuditViolation::AfterDeadline(*s));
            }
            if let Some(&done) = trace.finish_times.get(&id) {
                if s.end > done + 1e-9 {
                    out.push(AuditViolation::AfterFinish(*s));
                }
            }
        }
        let expected = gamma.get(&id).copied().unwrap_or(1.0) * task.exec();
        let executed = trace.executed_work(id, model);
        let finished_in_time = (executed - expected).abs() <= 1e-7
            && trace
                .finish_times
                .get(&id)
                .is_some_and(|&t| t <= task.abs_deadline() + 1e-9);
        if trace.finish_times.contains_key(&id) && (executed - expected).abs() > 1e-7 {
            out.push(AuditViolation::Conservation {
                task: id,
                expected,
                executed,
            });
        }
        match (finished_in_time, misses.contains(&id)) {
            (false, false) => out.push(AuditViolation::MissNotLogged(id)),
            (true, true) => out.push(AuditViolation::SpuriousMiss(id)),
            _ => {}
        }
    }
    out
}
