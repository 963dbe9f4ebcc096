#![no_main]

use feedsched::io::parse_taskset_json;
use feedsched::{build_time_grid, taskset_density};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(tasks) = parse_taskset_json(text) {
        // Anything the parser accepts must be usable downstream.
        assert!(taskset_density(&tasks).is_finite());
        let _ = build_time_grid(&tasks, 0.0);
    }
});
