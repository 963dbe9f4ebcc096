#![no_main]

use feedsched::io::{parse_taskset_preset, preset_taskset};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(name) = std::str::from_utf8(data) else {
        return;
    };
    if parse_taskset_preset(name).is_ok() {
        assert!(preset_taskset(name).is_ok());
    }
});
