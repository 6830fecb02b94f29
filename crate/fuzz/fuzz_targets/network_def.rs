#![no_main]

use fluentnet::network::NetworkDef;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(def) = NetworkDef::parse(text, None) {
        let again = NetworkDef::parse(&def.to_toml(), None).expect("serialized definition parses");
        assert_eq!(again.procedures, def.procedures);
        assert_eq!(again.nodes.len(), def.nodes.len());
    }
});
