//! Energy-minimal scheduling of aperiodic real-time tasks on identical DVFS
//! processors, with feedback re-planning when tasks finish early.
//!
//! The pipeline per planning instant:
//!
//! 1. [`partition`] builds and solves a linear program that splits each task's
//!    remaining work into per-interval, per-speed-level execution fractions.
//! 2. [`ordering`] turns each interval's fractions into processor timelines
//!    with McNaughton's wrap-around rule.
//! 3. [`sim`] executes the timelines against actual execution times, replanning
//!    at task-finish (and optionally arrival) events, and accounts energy.
//!
//! [`oracle`] holds independent checkers used by the test suites, [`io`] the
//! JSON formats and built-in presets, and [`experiment`] the sweep driver that
//! writes CSV results.

pub mod experiment;
pub mod io;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod ordering;
pub mod partition;
pub mod sim;

pub use lp::{solve_lp, LinearProgram, LpError, LpOutcome};
pub use model::{
    build_time_grid, taskset_density, EnergyReport, ModelError, ProcessorModel, SchedulingInstance,
    SpeedLevel, Task, TaskId, TimeGrid,
};
pub use ordering::{validate_interval, wrap_around, IntervalSchedule, Segment, TaskLoad};
pub use partition::{build_partition_lp, solve_partition, Snapshot, WorkloadPlan};
pub use sim::{simulate, Mode, ScenarioConfig, SimulationTrace};
