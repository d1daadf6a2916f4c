#![no_main]

use libfuzzer_sys::fuzz_target;
use mtwcost::io::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(text) {
            let args = cfg.to_args().expect("validated config renders");
            assert_eq!(args[0], cfg.command.name());
        }
    }
});
