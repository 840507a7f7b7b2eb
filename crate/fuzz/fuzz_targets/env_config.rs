//! Environment config parsing, validation, and a short episode on any
//! config that validates.
#![no_main]

use constellation::env::{EnvConfig, Environment};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = EnvConfig::from_json(text) else { return };
    if cfg.validate().is_err() || cfg.num_sats > 64 || cfg.rounds_per_episode > 200 {
        return;
    }
    let mut env = Environment::new(cfg).expect("validated config builds");
    let obs = env.reset();
    assert_eq!(obs.as_slice().len(), env.config().observation_len());
    let mut k = 0;
    while !env.is_done() {
        let out = env.step(k % env.num_actions());
        assert!(out.reward.is_finite());
        k += 7;
    }
    let m = env.episode_metrics();
    assert!((0.0..=100.0).contains(&m.tcr));
});
