#![no_main]

use libfuzzer_sys::fuzz_target;
use mtwcost::io::parse_family_json;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cost) = parse_family_json(text) {
            let _ = cost.eval_s(0.0, 0);
            let _ = cost.eval_u(-1.0);
        }
    }
});
