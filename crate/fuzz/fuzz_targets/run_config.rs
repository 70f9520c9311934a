#![no_main]

use libfuzzer_sys::fuzz_target;
use polywind_cli::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_json_str(text) {
        // Planning validates every field; it must reject, never panic.
        let _ = cfg.plan();
        let echo = cfg.to_json();
        assert!(RunConfig::from_json_str(&echo).is_ok(), "echo does not parse: {echo}");
    }
});
