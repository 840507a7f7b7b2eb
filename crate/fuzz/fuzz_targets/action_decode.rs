//! Action index decoding against the encoder.
#![no_main]

use constellation::env::Action;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|input: (u32, u8)| {
    let (index, n) = (input.0 as usize, input.1 as usize);
    match Action::try_decode(index, n) {
        Some(a) => {
            assert!(n >= 2 && index < n * (n - 1));
            assert_ne!(a.from_sat, a.to_sat);
            assert_eq!(a.encode(n), index);
        }
        None => assert!(n < 2 || index >= n * (n - 1)),
    }
});
