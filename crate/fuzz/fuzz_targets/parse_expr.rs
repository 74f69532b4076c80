#![no_main]

use libfuzzer_sys::fuzz_target;
use qeforge_core::expr::parse;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(e) = parse(text) {
        // the printed form must parse back
        let printed = e.to_string();
        assert!(parse(&printed).is_ok(), "display output '{printed}' does not parse");
    }
});
