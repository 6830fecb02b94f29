#![no_main]

use fluentnet::fluent::TagRule;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rule) = text.parse::<TagRule>() {
        let again: TagRule = rule.to_string().parse().expect("printed rule parses");
        assert_eq!(again, rule);
    }
});
