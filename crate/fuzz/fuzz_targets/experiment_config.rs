//! Experiment config parsing and validation.
#![no_main]

use constellation::harness::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ExperimentConfig::from_json(text) else { return };
    if cfg.validate().is_ok() {
        assert_eq!(cfg.specs().len(), cfg.agents.len());
    }
    let again = serde_json::to_string(&cfg).expect("config serializes");
    assert_eq!(ExperimentConfig::from_json(&again).expect("round trip"), cfg);
});
