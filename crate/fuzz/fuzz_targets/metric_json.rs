#![no_main]

use libfuzzer_sys::fuzz_target;
use qeforge_core::loaders::metric_from_json;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = metric_from_json(text) {
        let n = m.metric.dim;
        let p = m.points.as_ref().and_then(|p| p.first().cloned()).unwrap_or(vec![0.5; n]);
        if let Ok(geo) = m.metric.geometry(&p, 2) {
            let _ = geo.pack();
        }
    }
});
