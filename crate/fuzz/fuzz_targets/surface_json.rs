#![no_main]

use libfuzzer_sys::fuzz_target;
use qeforge_core::affine::affine_ricci;
use qeforge_core::loaders::surface_from_json;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(s) = surface_from_json(text) {
        let d = &s.domain;
        let centre = [0.5 * (d.lo[0] + d.hi[0]), 0.5 * (d.lo[1] + d.hi[1])];
        // evaluation may fail on singular input but must not panic
        let _ = affine_ricci(&s, &centre);
    }
});
