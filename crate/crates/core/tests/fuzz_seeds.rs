//! Replays the checked-in fuzz seeds through the same checks as the fuzz targets.

use std::fs;
use std::path::PathBuf;

use retail_sim::harness::ExperimentPlan;
use retail_sim::scenario::Scenario;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    out
}

#[test]
fn scenario_seeds() {
    let mut accepted = 0;
    let corpus = seeds("scenario_json");
    for (path, text) in &corpus {
        if let Ok(s) = Scenario::from_json_str(text) {
            accepted += 1;
            let echoed = Scenario::from_json_str(&s.to_json_pretty()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(echoed, s, "{}", path.display());
        }
    }
    assert!(accepted >= 3 && accepted < corpus.len(), "{accepted} of {}", corpus.len());
}

#[test]
fn plan_seeds() {
    let mut expanded = 0;
    for (path, text) in seeds("plan_json") {
        if let Ok(cells) = ExperimentPlan::from_json_str(&text).and_then(|p| p.cells()) {
            expanded += 1;
            for c in cells {
                c.scenario.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            }
        }
    }
    assert!(expanded >= 2);
}
