//! Agent checkpoint decoding (every policy kind, including Q-tables); an
//! accepted checkpoint must pick an in-range action.
#![no_main]

use constellation::agents::Policy;
use constellation::env::{EnvConfig, Environment};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(policy) = Policy::from_json(text) else { return };
    let n = policy.num_sats();
    if !(2..=32).contains(&n) {
        return;
    }
    let cfg = EnvConfig {
        num_sats: n,
        planes: Some(1),
        ..EnvConfig::desk_scale()
    };
    let Ok(mut env) = Environment::new(cfg) else { return };
    let obs = env.reset();
    assert!(policy.action(&obs) < env.num_actions());
    assert_eq!(Policy::from_json(&policy.to_json()).expect("round trip"), policy);
});
