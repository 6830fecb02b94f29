#![no_main]

use fluentnet::casas::Mapping;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mapping) = Mapping::parse(text) {
        for token in text.split_whitespace().take(64) {
            let _ = mapping.value(token);
            let _ = mapping.normalize(token, "ON");
        }
    }
});
