#![no_main]

use labeldeconv::pipeline::ExperimentReport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(report) = ExperimentReport::from_json(text) {
        let json = report.to_json().unwrap();
        ExperimentReport::from_json(&json).unwrap();
    }
});
