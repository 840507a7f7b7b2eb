//! Results and summary CSV parsing; accepted rows re-serialize stably.
#![no_main]

use constellation::report::{read_results, read_summary, results_to_string};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_results(data) {
        let text = results_to_string(&rows);
        let again = read_results(text.as_bytes()).expect("own output parses");
        assert_eq!(results_to_string(&again), text);
    }
    let _ = read_summary(data);
});
