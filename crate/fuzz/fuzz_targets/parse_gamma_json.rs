#![no_main]

use feedsched::io::parse_gamma_json;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(map) = parse_gamma_json(text) {
        assert!(map.values().all(|&g| g > 0.0 && g <= 1.0));
    }
});
