#![allow(dead_code)]

use proptest::prelude::*;

use feedsched::io::{preset_processor, POWERPC_405LP, XSCALE};
use feedsched::{ProcessorModel, Task};

pub fn processor(name: &str) -> ProcessorModel {
    preset_processor(name).unwrap()
}

pub fn any_preset() -> impl Strategy<Value = ProcessorModel> {
    prop_oneof![Just(processor(POWERPC_405LP)), Just(processor(XSCALE))]
}

/// Random tasksets on a quarter-second lattice with per-task density at most
/// 0.9. Staggered arrivals make the feasibility of some draws depend on `m`,
/// so callers filter infeasible ones.
pub fn taskset(max_tasks: usize) -> impl Strategy<Value = Vec<Task>> {
    prop::collection::vec((0u32..=16, 1u32..=20, 4u32..=40), 1..=max_tasks).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(k, (a, x, d))| {
                let deadline = d as f64 / 4.0;
                let exec = (x as f64 / 4.0).min(0.9 * deadline);
                Task::new(k as u32 + 1, a as f64 / 4.0, exec, deadline).unwrap()
            })
            .collect()
    })
}
