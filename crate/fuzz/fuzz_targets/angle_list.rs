#![no_main]

use libfuzzer_sys::fuzz_target;
use stochpsi::config::{parse_angle_list, NumberList};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(angles) = parse_angle_list(text) {
        assert!(angles.iter().all(|a| a.is_finite()));
    }
    if let Ok(list) = text.parse::<NumberList>() {
        let again: NumberList = list.to_string().parse().expect("formatted list reparses");
        assert_eq!(list, again);
    }
});
