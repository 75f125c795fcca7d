#![no_main]

use eprb::scalar::{format_rational, parse_rational};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if text.len() > 256 {
        return;
    }
    if let Ok(r) = parse_rational(text) {
        let again = parse_rational(&format_rational(&r)).expect("formatted value parses");
        assert_eq!(r, again);
    }
});
