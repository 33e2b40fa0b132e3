#![no_main]

use libfuzzer_sys::fuzz_target;
use retail_sim::scenario::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(scenario) = Scenario::from_json_str(text) {
        // Anything accepted must survive its own echo unchanged.
        let echoed = Scenario::from_json_str(&scenario.to_json_pretty()).expect("echo reparses");
        assert_eq!(echoed, scenario);
        assert_eq!(echoed.content_hash(), scenario.content_hash());
    }
});
