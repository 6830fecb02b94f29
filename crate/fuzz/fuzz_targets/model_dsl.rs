#![no_main]

use fluentnet::rules::parse_model;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = parse_model(text) {
        let printed = model.to_string();
        let again = parse_model(&printed).expect("printed model parses");
        assert_eq!(again, model);
    }
});
