#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = eprb::instance_file::parse_instance(text) {
        let gamma = spec.gamma_f64();
        let total: f64 = gamma.as_array().iter().sum();
        assert!((total - 4.0).abs() < 1e-6, "gamma columns must each sum to 1");
    }
});
