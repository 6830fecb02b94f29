#![no_main]

use fluentnet::fluent::Statement;
use fluentnet::placing::{contextualize, Topology};
use fluentnet::time::Timestamp;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(topo) = text.parse::<Topology>() else { return };
    let bound = topo.complexity_bound(0);
    // every sensor line can be contextualized without panicking
    for line in text.lines() {
        if let Some(id) = line.strip_prefix("sensor ").and_then(|r| r.split_whitespace().next()) {
            let out = contextualize(&topo, &Statement::sensor(id, true, Timestamp(1)));
            assert!(out.len() <= bound.max(1));
        }
    }
});
