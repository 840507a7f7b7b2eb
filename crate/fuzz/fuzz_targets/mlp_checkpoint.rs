//! Network checkpoint decoding; anything accepted must run a forward pass.
#![no_main]

use constellation::nn::Mlp;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(net) = Mlp::from_json(text) else { return };
    if net.layer_sizes().iter().product::<usize>() > 1 << 20 {
        return;
    }
    let input = vec![0.5; net.input_width()];
    assert_eq!(net.predict(&input).len(), net.output_width());
    assert_eq!(Mlp::from_json(&net.to_json()).expect("round trip").to_json(), net.to_json());
});
