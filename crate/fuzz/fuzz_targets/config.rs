#![no_main]

use libfuzzer_sys::fuzz_target;
use stochpsi::config::parse_key_values;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(kv) = parse_key_values(text) {
        // whatever parses must survive a write/read round trip
        let again = parse_key_values(&kv.to_text()).expect("serialized config reparses");
        assert_eq!(kv, again);
    }
});
