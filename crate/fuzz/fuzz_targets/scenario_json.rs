#![no_main]

use libfuzzer_sys::fuzz_target;
use qeforge_core::loaders::scenario_from_json;
use qeforge_core::verifier::report::RunConfig;

fuzz_target!(|data: &[u8]| {
    if data.len() > 16 * 1024 {
        return;
    }
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(input) = scenario_from_json(text, &RunConfig::default()) {
            assert!(input.config.points >= 1);
            assert!(!input.scenario.checks.is_empty());
        }
    }
});
