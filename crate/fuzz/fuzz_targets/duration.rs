#![no_main]

use fluentnet::time::{format_duration, parse_duration};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ms) = parse_duration(text) {
        assert_eq!(parse_duration(&format_duration(ms)), Ok(ms));
    }
});
