//! Event-driven execution of planned schedules against actual execution times.
//!
//! Three strategies are supported:
//!
//! * [`Mode::OpenLoop`] plans once from the estimates and never revisits the
//!   plan. A task that finishes early leaves its remaining slots idle.
//! * [`Mode::Feedback`] plans from the estimates and re-plans the remaining
//!   work whenever an enabled event (task finish, task arrival) occurs.
//! * [`Mode::Ideal`] plans once from the actual execution times.
//!
//! Time only advances to analytically computed events; there is no fixed step.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::{EnergyReport, ProcessorModel, SchedulingInstance, Task, TaskId};
use crate::ordering::{wrap_around, IntervalSchedule, OrderingError, TaskLoad};
use crate::partition::{solve_partition, PartitionError, Snapshot, WorkloadPlan};

/// Absolute tolerance on remaining actual work (seconds at full speed).
pub const COMPLETION_TOL: f64 = 1e-9;
/// Two instants closer than this are the same instant.
pub const TIME_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("estimated workload is infeasible at t = 0")]
    Infeasible,
    #[error("re-plan at t = {t} became infeasible")]
    ReplanInfeasible { t: f64 },
    #[error("estimation factor for {task} must be in (0, 1], got {value}")]
    InvalidGamma { task: TaskId, value: f64 },
    #[error("no estimation factor given for {0}")]
    MissingGamma(TaskId),
    #[error("feedback mode needs at least one scheduling event")]
    NoFeedbackEvents,
    #[error(transparent)]
    Partition(PartitionError),
    #[error(transparent)]
    Ordering(#[from] OrderingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    OpenLoop,
    Feedback,
    Ideal,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Feedback, Mode::OpenLoop, Mode::Ideal];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::OpenLoop => "open-loop",
            Mode::Feedback => "feedback",
            Mode::Ideal => "ideal",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open-loop" | "openloop" => Ok(Mode::OpenLoop),
            "feedback" => Ok(Mode::Feedback),
            "ideal" => Ok(Mode::Ideal),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

/// Which events trigger a re-plan in feedback mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedbackEvents {
    pub finish: bool,
    pub arrival: bool,
}

impl Default for FeedbackEvents {
    fn default() -> Self {
        Self {
            finish: true,
            arrival: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    instance: SchedulingInstance,
    gamma: BTreeMap<TaskId, f64>,
    mode: Mode,
    events: FeedbackEvents,
}

impl ScenarioConfig {
    pub fn new(
        instance: SchedulingInstance,
        gamma: BTreeMap<TaskId, f64>,
        mode: Mode,
        events: FeedbackEvents,
    ) -> Result<Self, SimError> {
        for task in instance.tasks() {
            let value = *gamma
                .get(&task.id())
                .ok_or(SimError::MissingGamma(task.id()))?;
            if !(value > 0.0 && value <= 1.0) {
                return Err(SimError::InvalidGamma {
                    task: task.id(),
                    value,
                });
            }
        }
        if mode == Mode::Feedback && !events.finish && !events.arrival {
            return Err(SimError::NoFeedbackEvents);
        }
        Ok(Self {
            instance,
            gamma,
            mode,
            events,
        })
    }

    /// Same estimation factor for every task, re-planning on task finish.
    pub fn uniform(instance: SchedulingInstance, gamma: f64, mode: Mode) -> Result<Self, SimError> {
        let map = instance.tasks().iter().map(|t| (t.id(), gamma)).collect();
        Self::new(instance, map, mode, FeedbackEvents::default())
    }

    pub fn instance(&self) -> &SchedulingInstance {
        &self.instance
    }

    pub fn gamma(&self, task: TaskId) -> f64 {
        self.gamma[&task]
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn events(&self) -> FeedbackEvents {
        self.events
    }

    /// Actual minimum execution time of `task`.
    pub fn actual(&self, task: &Task) -> f64 {
        self.gamma(task.id()) * task.exec()
    }
}

/// A processor running one task at one level over absolute times `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedSegment {
    pub processor: usize,
    pub task: TaskId,
    pub level: usize,
    pub start: f64,
    pub end: f64,
}

impl TimedSegment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// One grid interval of a plan, in absolute time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedInterval {
    pub start: f64,
    pub end: f64,
    pub segments: Vec<TimedSegment>,
}

/// Everything the scheduler produced at one planning instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanRecord {
    pub snapshot: Snapshot,
    pub plan: WorkloadPlan,
    pub schedules: Vec<IntervalSchedule>,
}

impl PlanRecord {
    pub fn timeline(&self) -> Vec<TimedInterval> {
        let grid = self.plan.grid();
        self.schedules
            .iter()
            .map(|sched| {
                let mu = sched.interval;
                let (t0, width) = (grid.points()[mu], grid.width(mu));
                TimedInterval {
                    start: t0,
                    end: grid.points()[mu + 1],
                    segments: sched
                        .segments
                        .iter()
                        .map(|s| TimedSegment {
                            processor: s.processor,
                            task: s.task,
                            level: s.level,
                            start: t0 + s.start * width,
                            end: t0 + s.end * width,
                        })
                        .collect(),
                }
            })
            .collect()
    }
}

/// Solves the partition for `snapshot` and orders every interval.
pub fn plan(snapshot: Snapshot) -> Result<PlanRecord, SimError> {
    let plan = solve_partition(&snapshot).map_err(SimError::Partition)?;
    let m = snapshot.processors();
    let schedules = (0..plan.grid().interval_count())
        .map(|mu| {
            let loads: Vec<TaskLoad> = plan
                .tasks()
                .iter()
                .zip(plan.interval(mu))
                .map(|(&task, w)| TaskLoad::new(task, w.clone()))
                .collect();
            wrap_around(mu, &loads, m)
        })
        .collect::<Result<_, _>>()?;
    Ok(PlanRecord {
        snapshot,
        plan,
        schedules,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskProgress {
    pub task: Task,
    /// Actual minimum execution time.
    pub target: f64,
    /// Work retired so far, seconds at full speed.
    pub executed: f64,
    pub finished_at: Option<f64>,
    pub arrived: bool,
}

impl TaskProgress {
    pub fn remaining_actual(&self) -> f64 {
        (self.target - self.executed).max(0.0)
    }

    pub fn is_finished(&self) -> bool {
        self.finished_at.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionState {
    pub t_now: f64,
    pub progress: Vec<TaskProgress>,
}

impl ExecutionState {
    fn progress_of(&self, task: TaskId) -> Option<&TaskProgress> {
        self.progress.iter().find(|p| p.task.id() == task)
    }

    fn progress_mut(&mut self, task: TaskId) -> &mut TaskProgress {
        self.progress
            .iter_mut()
            .find(|p| p.task.id() == task)
            .expect("segment refers to a known task")
    }

    fn is_running(&self, task: TaskId) -> bool {
        self.progress_of(task).is_some_and(|p| !p.is_finished())
    }

    pub fn all_finished(&self) -> bool {
        self.progress.iter().all(TaskProgress::is_finished)
    }

    /// Segments of `interval` executing at `t_now`.
    fn running<'a>(
        &'a self,
        interval: &'a TimedInterval,
    ) -> impl Iterator<Item = &'a TimedSegment> {
        let t = self.t_now;
        interval.segments.iter().filter(move |s| {
            s.start <= t + TIME_TOL && s.end > t + TIME_TOL && self.is_running(s.task)
        })
    }
}

/// Event kinds, in tie-break priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Completion(TaskId),
    Arrival(TaskId),
    /// A planned segment starts or ends inside the interval.
    SegmentEdge,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Earliest upcoming event while executing `interval`. Ties within
/// [`TIME_TOL`] resolve completion first, then arrival, segment edge, boundary.
pub fn next_event(
    state: &ExecutionState,
    interval: &TimedInterval,
    model: &ProcessorModel,
) -> Event {
    let t = state.t_now;
    let mut best = Event {
        time: interval.end,
        kind: EventKind::Boundary,
    };
    let mut offer = |candidate: Event| {
        let earlier = candidate.time < best.time - TIME_TOL;
        let tie = (candidate.time - best.time).abs() <= TIME_TOL;
        if earlier || (tie && candidate.kind < best.kind) {
            best = candidate;
        }
    };

    for s in &interval.segments {
        for edge in [s.start, s.end] {
            if edge > t + TIME_TOL && edge < interval.end - TIME_TOL {
                offer(Event {
                    time: edge,
                    kind: EventKind::SegmentEdge,
                });
            }
        }
    }
    for p in &state.progress {
        if !p.arrived && p.task.arrival() > t + TIME_TOL {
            offer(Event {
                time: p.task.arrival(),
                kind: EventKind::Arrival(p.task.id()),
            });
        }
    }
    for s in state.running(interval) {
        let p = state.progress_of(s.task).expect("running task is known");
        let done = t + p.remaining_actual() / model.speed(s.level);
        if done <= s.end + TIME_TOL {
            offer(Event {
                time: done.min(s.end),
                kind: EventKind::Completion(s.task),
            });
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceEventKind {
    /// A partition was solved; `solve` counts from 1.
    Plan {
        solve: usize,
    },
    Arrival(TaskId),
    Finish(TaskId),
    DeadlineMiss(TaskId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceEventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub mode: Mode,
    /// Executed (not planned) busy pieces in time order.
    pub segments: Vec<TimedSegment>,
    pub events: Vec<TraceEvent>,
    pub finish_times: BTreeMap<TaskId, f64>,
    pub plans: Vec<PlanRecord>,
    pub energy: EnergyReport,
}

impl SimulationTrace {
    pub fn solve_count(&self) -> usize {
        self.plans.len()
    }

    pub fn deadline_misses(&self) -> Vec<TaskId> {
        self.events
            .iter()
            .filter_map(|e| match e.kind {
                TraceEventKind::DeadlineMiss(id) => Some(id),
                _ => None,
            })
            .collect()
    }

    /// Work retired by `task` according to the executed segments.
    pub fn executed_work(&self, task: TaskId, model: &ProcessorModel) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.task == task)
            .map(|s| s.duration() * model.speed(s.level))
            .sum()
    }
}

/// Dynamic and total energy of executed segments over `[0, horizon]`.
pub fn energy_report(
    segments: &[TimedSegment],
    model: &ProcessorModel,
    m: usize,
    horizon: f64,
) -> EnergyReport {
    EnergyReport::from_busy(
        segments.iter().map(|s| (s.task, s.level, s.duration())),
        model,
        m,
        horizon,
    )
}

struct Run<'a> {
    config: &'a ScenarioConfig,
    state: ExecutionState,
    segments: Vec<TimedSegment>,
    events: Vec<TraceEvent>,
    plans: Vec<PlanRecord>,
}

impl<'a> Run<'a> {
    fn model(&self) -> &'a ProcessorModel {
        self.config.instance().model()
    }

    fn replan(&mut self, use_actuals: bool) -> Result<Option<Vec<TimedInterval>>, SimError> {
        let instance = self.config.instance();
        let remaining: BTreeMap<TaskId, f64> = self
            .state
            .progress
            .iter()
            .filter(|p| !p.is_finished())
            .map(|p| {
                let total = if use_actuals { p.target } else { p.task.exec() };
                (p.task.id(), total - p.executed)
            })
            .collect();
        let t = self.state.t_now;
        let snapshot = match Snapshot::new(
            t,
            instance.tasks(),
            &remaining,
            instance.model().clone(),
            instance.processors(),
        ) {
            Ok(s) => s,
            Err(PartitionError::Empty(_)) => return Ok(None),
            Err(e) => return Err(SimError::Partition(e)),
        };
        let record = match plan(snapshot) {
            Ok(r) => r,
            Err(SimError::Partition(PartitionError::Infeasible)) if self.plans.is_empty() => {
                return Err(SimError::Infeasible)
            }
            Err(SimError::Partition(PartitionError::Infeasible)) => {
                return Err(SimError::ReplanInfeasible { t })
            }
            Err(e) => return Err(e),
        };
        let timeline = record.timeline();
        self.plans.push(record);
        self.events.push(TraceEvent {
            time: t,
            kind: TraceEventKind::Plan {
                solve: self.plans.len(),
            },
        });
        Ok(Some(timeline))
    }

    fn note_arrivals(&mut self) {
        let t = self.state.t_now;
        for p in &mut self.state.progress {
            if !p.arrived && p.task.arrival() <= t + TIME_TOL {
                p.arrived = true;
                self.events.push(TraceEvent {
                    time: p.task.arrival(),
                    kind: TraceEventKind::Arrival(p.task.id()),
                });
            }
        }
    }

    /// Executes `interval` from `t_now` up to `to`; returns the tasks that finished.
    fn advance(&mut self, interval: &TimedInterval, to: f64) -> Vec<TaskId> {
        let from = self.state.t_now;
        let dt = to - from;
        let model = self.model();
        let running: Vec<TimedSegment> = self.state.running(interval).copied().collect();
        let mut finished = Vec::new();
        for s in running {
            let p = self.state.progress_mut(s.task);
            p.executed = (p.executed + model.speed(s.level) * dt).min(p.target);
            if p.remaining_actual() <= COMPLETION_TOL {
                p.executed = p.target;
                p.finished_at = Some(to);
                finished.push(s.task);
            }
            let piece = TimedSegment {
                start: from,
                end: to,
                ..s
            };
            match self
                .segments
                .iter_mut()
                .rev()
                .find(|x| x.processor == s.processor)
            {
                Some(last)
                    if last.task == s.task
                        && last.level == s.level
                        && (last.end - from).abs() <= TIME_TOL =>
                {
                    last.end = to
                }
                _ => self.segments.push(piece),
            }
        }
        self.state.t_now = to;
        finished.sort();
        for &task in &finished {
            self.events.push(TraceEvent {
                time: to,
                kind: TraceEventKind::Finish(task),
            });
        }
        finished
    }
}

pub fn simulate(config: &ScenarioConfig) -> Result<SimulationTrace, SimError> {
    let instance = config.instance();
    let mut progress: Vec<TaskProgress> = instance
        .tasks()
        .iter()
        .map(|t| TaskProgress {
            task: *t,
            target: config.actual(t),
            executed: 0.0,
            finished_at: None,
            arrived: false,
        })
        .collect();
    progress.sort_by_key(|p| p.task.id());

    let mut run = Run {
        config,
        state: ExecutionState {
            t_now: 0.0,
            progress,
        },
        segments: Vec::new(),
        events: Vec::new(),
        plans: Vec::new(),
    };
    run.note_arrivals();

    let mode = config.mode();
    let events = config.events();
    let mut timeline = match run.replan(mode == Mode::Ideal)? {
        Some(t) => t,
        None => return Err(SimError::Infeasible),
    };
    let horizon = timeline.last().map_or(0.0, |iv| iv.end);

    let mut idx = 0;
    while !run.state.all_finished() {
        while idx < timeline.len() && timeline[idx].end <= run.state.t_now + TIME_TOL {
            idx += 1;
        }
        let Some(interval) = timeline.get(idx).cloned() else {
            break;
        };
        let event = next_event(&run.state, &interval, run.model());
        let finished = run.advance(&interval, event.time);
        run.note_arrivals();

        let replan = mode == Mode::Feedback
            && !run.state.all_finished()
            && ((events.finish && !finished.is_empty())
                || (events.arrival && matches!(event.kind, EventKind::Arrival(_))));
        if replan {
            match run.replan(false)? {
                Some(t) => {
                    timeline = t;
                    idx = 0;
                }
                None => break,
            }
        }
    }

    let mut finish_times = BTreeMap::new();
    let mut misses = Vec::new();
    for p in &run.state.progress {
        let deadline = p.task.abs_deadline();
        match p.finished_at {
            Some(t) => {
                finish_times.insert(p.task.id(), t);
                if t > deadline + TIME_TOL {
                    misses.push((deadline, p.task.id()));
                }
            }
            None => misses.push((deadline, p.task.id())),
        }
    }
    for (time, id) in misses {
        run.events.push(TraceEvent {
            time,
            kind: TraceEventKind::DeadlineMiss(id),
        });
    }

    let energy = energy_report(
        &run.segments,
        instance.model(),
        instance.processors(),
        horizon,
    );
    Ok(SimulationTrace {
        mode,
        segments: run.segments,
        events: run.events,
        finish_times,
        plans: run.plans,
        energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{preset_processor, preset_taskset};

    fn instance(triples: &[(f64, f64, f64)], preset: &str, m: usize) -> SchedulingInstance {
        let tasks = triples
            .iter()
            .enumerate()
            .map(|(i, &(b, x, d))| Task::new(i as u32 + 1, b, x, d).unwrap())
            .collect();
        SchedulingInstance::new(tasks, preset_processor(preset).unwrap(), m).unwrap()
    }

    fn state_with(task: Task, target: f64, executed: f64, t_now: f64) -> ExecutionState {
        ExecutionState {
            t_now,
            progress: vec![TaskProgress {
                task,
                target,
                executed,
                finished_at: None,
                arrived: true,
            }],
        }
    }

    fn one_segment(level: usize, start: f64, end: f64) -> TimedInterval {
        TimedInterval {
            start,
            end,
            segments: vec![TimedSegment {
                processor: 0,
                task: TaskId(1),
                level,
                start,
                end,
            }],
        }
    }

    #[test]
    fn completion_inside_segment() {
        let ppc = preset_processor("powerpc405lp").unwrap();
        let task = Task::new(1, 0.0, 2.0, 20.0).unwrap();
        let state = state_with(task, 1.5, 1.0, 10.0);
        let ev = next_event(&state, &one_segment(3, 10.0, 11.0), &ppc);
        assert_eq!(ev.kind, EventKind::Completion(TaskId(1)));
        assert!((ev.time - 10.5).abs() < 1e-12);
    }

    #[test]
    fn slow_segment_reaches_boundary() {
        let ppc = preset_processor("powerpc405lp").unwrap();
        let task = Task::new(1, 0.0, 2.0, 20.0).unwrap();
        let state = state_with(task, 0.9, 0.0, 0.0);
        let ev = next_event(&state, &one_segment(1, 0.0, 2.0), &ppc);
        assert_eq!(
            ev,
            Event {
                time: 2.0,
                kind: EventKind::Boundary
            }
        );
    }

    #[test]
    fn completion_wins_tie_with_boundary() {
        let ppc = preset_processor("powerpc405lp").unwrap();
        let task = Task::new(1, 0.0, 2.0, 20.0).unwrap();
        let state = state_with(task, 0.6, 0.0, 0.0);
        let ev = next_event(&state, &one_segment(1, 0.0, 2.0), &ppc);
        assert_eq!(ev.kind, EventKind::Completion(TaskId(1)));
        assert!((ev.time - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_single_task_half_gamma() {
        let inst = instance(&[(0.0, 2.0, 5.0)], "powerpc405lp", 1);
        let cfg = ScenarioConfig::uniform(inst, 0.5, Mode::Ideal).unwrap();
        let trace = simulate(&cfg).unwrap();
        assert!((trace.energy.dynamic_mj - 167.5).abs() < 1e-9);
        assert!(trace.deadline_misses().is_empty());
        assert_eq!(trace.solve_count(), 1);
    }

    #[test]
    fn open_loop_stops_at_actual_work() {
        let inst = instance(&[(0.0, 2.0, 5.0)], "powerpc405lp", 1);
        let cfg = ScenarioConfig::uniform(inst.clone(), 0.5, Mode::OpenLoop).unwrap();
        let trace = simulate(&cfg).unwrap();
        // The plan runs at s=0.3 for 30/7 s first; 1.0 s of work takes 10/3 s.
        assert_eq!(trace.segments.len(), 1);
        assert!((trace.segments[0].duration() - 10.0 / 3.0).abs() < 1e-9);
        assert!((trace.energy.dynamic_mj - 60.0 * 10.0 / 3.0).abs() < 1e-9);
        assert!((trace.executed_work(TaskId(1), inst.model()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gamma_one_modes_coincide() {
        for preset in ["powerpc405lp", "xscale"] {
            let tasks = preset_taskset("paper:D=1.25").unwrap();
            let inst =
                SchedulingInstance::new(tasks, preset_processor(preset).unwrap(), 2).unwrap();
            let energies: Vec<f64> = Mode::ALL
                .iter()
                .map(|&mode| {
                    let cfg = ScenarioConfig::uniform(inst.clone(), 1.0, mode).unwrap();
                    simulate(&cfg).unwrap().energy.dynamic_mj
                })
                .collect();
            assert!((energies[0] - energies[1]).abs() < 1e-6, "{energies:?}");
            assert!((energies[2] - energies[1]).abs() < 1e-6, "{energies:?}");
        }
    }

    #[test]
    fn feedback_beats_open_loop_at_density_two() {
        let tasks = preset_taskset("paper:D=2.00").unwrap();
        let inst =
            SchedulingInstance::new(tasks, preset_processor("powerpc405lp").unwrap(), 2).unwrap();
        let run = |mode| {
            let cfg = ScenarioConfig::uniform(inst.clone(), 0.5, mode).unwrap();
            simulate(&cfg).unwrap()
        };
        let fb = run(Mode::Feedback);
        let ol = run(Mode::OpenLoop);
        assert!(fb.energy.dynamic_mj < ol.energy.dynamic_mj);
        assert!(fb.solve_count() > 1);
        assert_eq!(ol.solve_count(), 1);
    }

    #[test]
    fn config_validation() {
        let inst = instance(&[(0.0, 2.0, 5.0)], "powerpc405lp", 1);
        assert!(matches!(
            ScenarioConfig::uniform(inst.clone(), 0.0, Mode::Ideal),
            Err(SimError::InvalidGamma { .. })
        ));
        assert!(matches!(
            ScenarioConfig::uniform(inst.clone(), 1.5, Mode::Ideal),
            Err(SimError::InvalidGamma { .. })
        ));
        assert!(matches!(
            ScenarioConfig::new(
                inst.clone(),
                BTreeMap::new(),
                Mode::Ideal,
                FeedbackEvents::default()
            ),
            Err(SimError::MissingGamma(TaskId(1)))
        ));
        let none = FeedbackEvents {
            finish: false,
            arrival: false,
        };
        let gamma = BTreeMap::from([(TaskId(1), 0.5)]);
        assert_eq!(
            ScenarioConfig::new(inst, gamma, Mode::Feedback, none).unwrap_err(),
            SimError::NoFeedbackEvents
        );
    }

    #[test]
    fn infeasible_instance_is_an_error() {
        let inst = instance(&[(0.0, 6.0, 5.0)], "powerpc405lp", 1);
        let cfg = ScenarioConfig::uniform(inst, 0.5, Mode::Feedback).unwrap();
        assert_eq!(simulate(&cfg).unwrap_err(), SimError::Infeasible);
    }

    #[test]
    fn late_arrivals_with_arrival_events() {
        let inst = instance(
            &[(0.0, 2.0, 6.0), (2.0, 3.0, 6.0), (4.0, 1.0, 3.0)],
            "xscale",
            1,
        );
        let gamma = BTreeMap::from([(TaskId(1), 0.5), (TaskId(2), 0.7), (TaskId(3), 0.9)]);
        let events = FeedbackEvents {
            finish: true,
            arrival: true,
        };
        let cfg = ScenarioConfig::new(inst.clone(), gamma, Mode::Feedback, events).unwrap();
        let trace = simulate(&cfg).unwrap();
        assert!(trace.deadline_misses().is_empty());
        let arrivals = trace
            .events
            .iter()
            .filter(|e| matches!(e.kind, TraceEventKind::Arrival(_)))
            .count();
        assert_eq!(arrivals, 3);
        // initial plan, two arrivals, two finishes that leave work behind
        assert!(trace.solve_count() >= 4);
        for w in trace.segments.windows(2) {
            assert!(w[0].start <= w[1].start + TIME_TOL);
        }
    }

    #[test]
    fn energy_report_examples() {
        let ppc = preset_processor("powerpc405lp").unwrap();
        let xs = preset_processor("xscale").unwrap();
        assert_eq!(energy_report(&[], &ppc, 2, 15.0).total_mj, 360.0);
        let seg = |level, end| TimedSegment {
            processor: 0,
            task: TaskId(1),
            level,
            start: 0.0,
            end,
        };
        assert_eq!(
            energy_report(&[seg(3, 5.0)], &ppc, 1, 5.0).dynamic_mj,
            3690.0
        );
        let r = energy_report(&[seg(2, 2.0)], &xs, 1, 2.0);
        assert_eq!(r.dynamic_mj, 720.0);
        assert_eq!(r.busy_s[&TaskId(1)], 2.0);
        assert_eq!(r.total_mj, 720.0 + 80.0);
    }
}
