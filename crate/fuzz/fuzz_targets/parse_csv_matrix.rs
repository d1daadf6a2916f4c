#![no_main]

use libfuzzer_sys::fuzz_target;
use mtwcost::io::parse_csv_matrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = parse_csv_matrix(text) {
            assert!(m.nrows() > 0 && m.iter().all(|v| v.is_finite()));
        }
    }
});
