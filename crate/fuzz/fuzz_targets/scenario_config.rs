//! Fuzz the scenario TOML schema and cross-field validation.
//!
//! Arbitrary bytes must never panic the parser; whenever validation
//! succeeds, the plan it hands back must satisfy the invariants the
//! runner relies on.

#![no_main]

use libfuzzer_sys::fuzz_target;
use qseal::config::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = ScenarioConfig::from_toml_str(text) else {
        return;
    };
    if let Ok(plan) = config.validate() {
        // The runner splits the window range at calibration_windows and
        // assumes both halves are non-empty.
        assert!(plan.analytics.calibration_windows > 0);
        assert!(plan.analytics.calibration_windows < plan.total_windows);
        assert!(plan.analytics.batch_windows > 0);
        // Attack plans come out ordered and non-overlapping, so the
        // simulator can probe them window by window.
        let plans = plan.setup.attacks().plans();
        for attack in plans {
            assert!(attack.start_window <= attack.end_window);
        }
        for pair in plans.windows(2) {
            assert!(pair[1].start_window >= pair[0].end_window);
        }
    }
});
