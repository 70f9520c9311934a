#![no_main]

use libfuzzer_sys::fuzz_target;
use polywind_cli::expr::parse_angle;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(value) = parse_angle(text) {
        assert!(value.is_finite());
    }
});
