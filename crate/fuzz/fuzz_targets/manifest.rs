#![no_main]

use libfuzzer_sys::fuzz_target;
use stochpsi::config::parse_manifest_header;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_manifest_header(text);
});
