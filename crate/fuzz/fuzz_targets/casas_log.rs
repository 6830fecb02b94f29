#![no_main]

use fluentnet::casas::{parse_log, Mapping};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(run) = parse_log(text, "fuzz", &Mapping::builtin()) {
        assert!(run.events.windows(2).all(|w| w[0].time <= w[1].time));
        for w in run.label_windows(0) {
            assert!(w.start <= w.end);
        }
    }
});
