#![no_main]

use libfuzzer_sys::fuzz_target;
use retail_sim::harness::ExperimentPlan;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(plan) = ExperimentPlan::from_json_str(text) else {
        return;
    };
    let combos = plan.sweep.iter().try_fold(1usize, |n, axis| n.checked_mul(axis.values.len()));
    if combos.is_some_and(|n| n <= 64) {
        if let Ok(cells) = plan.cells() {
            assert_eq!(cells.len(), combos.unwrap());
            for cell in &cells {
                assert!(!cell.id.is_empty());
                cell.scenario.validate().expect("cells hold valid scenarios");
            }
        }
    }
});
