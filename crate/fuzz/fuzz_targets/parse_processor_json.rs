#![no_main]

use feedsched::io::parse_processor_json;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = parse_processor_json(text) {
        let hull = model.lower_hull_levels();
        assert!(!hull.is_empty());
        let _ = model.restricted(&hull);
    }
});
