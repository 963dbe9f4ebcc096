//! Task ordering inside one grid interval by McNaughton's wrap-around rule.
//!
//! Items (task, level, fraction) are laid end to end on the real line in
//! ascending task id, levels ascending within a task. The line is cut at every
//! integer and chunk `k` becomes processor `k`'s timeline for the interval.
//! Processors and levels are 0-based.

use std::fmt;

use thiserror::Error;

use crate::model::TaskId;

/// Fractions at or below this are dropped before layout.
pub const FRACTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrderingError {
    #[error("task {task} needs {total} of the interval (limit 1)")]
    TaskOverCapacity { task: TaskId, total: f64 },
    #[error("interval load {total} exceeds {m} processors")]
    CapacityExceeded { total: f64, m: usize },
}

/// Per-level execution fractions of one task in one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskLoad {
    pub task: TaskId,
    pub fractions: Vec<f64>,
}

impl TaskLoad {
    pub fn new(task: TaskId, fractions: Vec<f64>) -> Self {
        Self { task, fractions }
    }

    pub fn total(&self) -> f64 {
        self.fractions.iter().sum()
    }
}

/// Processor `processor` runs `task` at `level` during the fraction
/// `[start, end]` of the interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub processor: usize,
    pub task: TaskId,
    pub level: usize,
    pub start: f64,
    pub end: f64,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }

    fn overlaps(&self, other: &Segment) -> bool {
        self.start.max(other.start) < self.end.min(other.end) - FRACTION_TOL
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P{} {} q{} [{}, {}]",
            self.processor + 1,
            self.task,
            self.level + 1,
            self.start,
            self.end
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSchedule {
    pub interval: usize,
    pub segments: Vec<Segment>,
}

impl IntervalSchedule {
    pub fn on_processor(&self, k: usize) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(move |s| s.processor == k)
    }
}

/// Removes decimal round-off from a position in `[0, 1]`, e.g. turns
/// `0.1 + 0.2` into `0.3`. Values that are not within a few ulps of a
/// 12-digit decimal are returned unchanged.
fn tidy(x: f64) -> f64 {
    let snapped = (x * 1e12).round() / 1e12;
    if (x - snapped).abs() <= 8.0 * f64::EPSILON * x.abs().max(1.0) {
        snapped
    } else {
        x
    }
}

pub fn wrap_around(
    interval: usize,
    loads: &[TaskLoad],
    m: usize,
) -> Result<IntervalSchedule, OrderingError> {
    let mut order: Vec<&TaskLoad> = loads.iter().collect();
    order.sort_by_key(|l| l.task);

    let mut total = 0.0;
    for load in &order {
        let t: f64 = load.fractions.iter().filter(|&&w| w > FRACTION_TOL).sum();
        if t > 1.0 + 1e-9 {
            return Err(OrderingError::TaskOverCapacity {
                task: load.task,
                total: t,
            });
        }
        total += t;
    }
    if total > m as f64 + 1e-9 {
        return Err(OrderingError::CapacityExceeded { total, m });
    }

    let mut segments = Vec::new();
    let mut processor = 0;
    let mut cursor = 0.0;
    for load in order {
        for (level, &w) in load.fractions.iter().enumerate() {
            if w <= FRACTION_TOL {
                continue;
            }
            let end = tidy(cursor + w);
            if end <= 1.0 + FRACTION_TOL || processor + 1 >= m {
                let end = end.min(1.0);
                segments.push(Segment {
                    processor,
                    task: load.task,
                    level,
                    start: cursor,
                    end,
                });
                cursor = end;
            } else {
                segments.push(Segment {
                    processor,
                    task: load.task,
                    level,
                    start: cursor,
                    end: 1.0,
                });
                processor += 1;
                cursor = tidy(w - (1.0 - cursor));
                segments.push(Segment {
                    processor,
                    task: load.task,
                    level,
                    start: 0.0,
                    end: cursor,
                });
            }
            if cursor >= 1.0 - FRACTION_TOL && processor + 1 < m {
                processor += 1;
                cursor = 0.0;
            }
        }
    }
    segments.retain(|s| s.len() > FRACTION_TOL);
    Ok(IntervalSchedule { interval, segments })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A segment with `start > end`, outside `[0, 1]`, or on a processor `>= m`.
    Malformed(Segment),
    ProcessorOverlap(Segment, Segment),
    ParallelSelfExecution(Segment, Segment),
    Conservation {
        task: TaskId,
        level: usize,
        expected: f64,
        scheduled: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Malformed(s) => write!(f, "malformed segment {s}"),
            Violation::ProcessorOverlap(a, b) => write!(f, "processor overlap: {a} and {b}"),
            Violation::ParallelSelfExecution(a, b) => {
                write!(f, "task runs on two processors at once: {a} and {b}")
            }
            Violation::Conservation {
                task,
                level,
                expected,
                scheduled,
            } => write!(
                f,
                "{task} level {}: planned fraction {expected}, scheduled {scheduled}",
                level + 1
            ),
        }
    }
}

/// Checks `schedule` against the loads it should realize. Empty means valid.
pub fn validate_interval(
    schedule: &IntervalSchedule,
    loads: &[TaskLoad],
    m: usize,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let segs = &schedule.segments;
    for s in segs {
        if s.processor >= m || s.start < 0.0 || s.end > 1.0 || s.start > s.end {
            out.push(Violation::Malformed(*s));
        }
    }
    for (a_idx, a) in segs.iter().enumerate() {
        for b in &segs[a_idx + 1..] {
            if !a.overlaps(b) {
                continue;
            }
            if a.processor == b.processor {
                out.push(Violation::ProcessorOverlap(*a, *b));
            } else if a.task == b.task {
                out.push(Violation::ParallelSelfExecution(*a, *b));
            }
        }
    }

    let mut keys: Vec<(TaskId, usize)> = segs.iter().map(|s| (s.task, s.level)).collect();
    for load in loads {
        keys.extend((0..load.fractions.len()).map(|q| (load.task, q)));
    }
    keys.sort();
    keys.dedup();
    for (task, level) in keys {
        let expected = loads
            .iter()
            .filter(|l| l.task == task)
            .filter_map(|l| l.fractions.get(level))
            .filter(|&&w| w > FRACTION_TOL)
            .sum::<f64>();
        let scheduled: f64 = segs
            .iter()
            .filter(|s| s.task == task && s.level == level)
            .map(Segment::len)
            .sum();
        if (expected - scheduled).abs() > 1e-12 {
            out.push(Violation::Conservation {
                task,
                level,
                expected,
                scheduled,
            });
        }
    }
    out
}
