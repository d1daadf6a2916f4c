#![no_main]

use libfuzzer_sys::fuzz_target;
use mtwcost::io::parse_grid;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(g) = parse_grid(text) {
            assert!(!g.is_empty() && g.iter().all(|v| v.is_finite()));
        }
    }
});
