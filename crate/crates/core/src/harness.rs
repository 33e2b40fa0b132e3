//! Experiment runner: parameter sweeps over a base scenario, replications
//! with derived seeds, parallel execution and cell-level aggregation.
//!
//! Output layout under the chosen directory:
//!
//! ```text
//! cells.csv                     cell,measure,mean,sd,n
//! status.csv                    cell,replications,failed,error
//! <cell>/rep_00/daily.csv       per-replication outputs
//! <cell>/rep_00/summary.json
//! <cell>/rep_00/histogram.csv
//! <cell>/rep_00/scenario-echo.json
//! ```
//!
//! A cell directory is named after its parameter tuple, e.g.
//! `preset-atv__main_pool_size-2000`.

use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::engine::Simulation;
use crate::metrics::{emit_outputs, RunOutput, RunSummary};
use crate::scenario::{Mode, Scenario, ScenarioError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted path into the scenario document (`wom.adoption_fraction`), or `preset`.
    pub parameter: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(default)]
    pub name: Option<String>,
    /// Scenario document; may name a preset and override fields.
    pub base: Value,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default)]
    pub weeks: Option<u32>,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub seed: u64,
}

fn default_replications() -> u32 {
    20
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("malformed plan: {0}")]
    Plan(String),
    #[error("cell {cell}: {source}")]
    Scenario {
        cell: String,
        #[source]
        source: ScenarioError,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

impl ExperimentPlan {
    pub fn from_json_str(text: &str) -> Result<Self, HarnessError> {
        let plan: ExperimentPlan = serde_json::from_str(text).map_err(|e| HarnessError::Plan(e.to_string()))?;
        plan.check()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    fn check(&self) -> Result<(), HarnessError> {
        if !self.base.is_object() {
            return Err(HarnessError::Plan("`base` must be a scenario object".into()));
        }
        if self.replications == 0 {
            return Err(HarnessError::Plan("`replications` must be at least 1".into()));
        }
        for axis in &self.sweep {
            if axis.values.is_empty() {
                return Err(HarnessError::Plan(format!("sweep over `{}` has no values", axis.parameter)));
            }
            if axis.parameter.is_empty() || axis.parameter.split('.').any(str::is_empty) {
                return Err(HarnessError::Plan(format!("bad parameter path `{}`", axis.parameter)));
            }
        }
        Ok(())
    }

    /// Expands the sweep into cells, validating each cell's scenario.
    pub fn cells(&self) -> Result<Vec<Cell>, HarnessError> {
        self.check()?;
        let mut combos: Vec<Vec<(String, Value)>> = vec![Vec::new()];
        for axis in &self.sweep {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    axis.values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push((axis.parameter.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        combos
            .into_iter()
            .map(|params| {
                let id = cell_id(&params);
                let mut doc = self.base.clone();
                for (path, value) in &params {
                    set_path(&mut doc, path, value.clone());
                }
                if let Some(w) = self.weeks {
                    set_path(&mut doc, "weeks", Value::from(w));
                }
                if let Some(m) = self.mode {
                    set_path(&mut doc, "mode", serde_json::to_value(m).expect("mode serializes"));
                }
                let scenario = Scenario::from_value(doc).map_err(|source| HarnessError::Scenario {
                    cell: id.clone(),
                    source,
                })?;
                Ok(Cell {
                    id,
                    parameters: params,
                    scenario,
                })
            })
            .collect()
    }
}

/// Sets a dotted path inside a JSON object, creating objects as needed.
fn set_path(doc: &mut Value, path: &str, value: Value) {
    let mut cur = doc;
    let mut parts = path.split('.').peekable();
    while let Some(key) = parts.next() {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        let map = cur.as_object_mut().expect("just made an object");
        if parts.peek().is_none() {
            map.insert(key.to_owned(), value);
            return;
        }
        cur = map.entry(key.to_owned()).or_insert_with(|| Value::Object(Map::new()));
    }
}

fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Directory-safe identifier of a parameter tuple.
pub fn cell_id(params: &[(String, Value)]) -> String {
    if params.is_empty() {
        return "base".to_owned();
    }
    params
        .iter()
        .map(|(k, v)| {
            let raw = format!("{k}-{}", value_label(v));
            raw.chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                        c
                    } else {
                        '_'
                    }
                })
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join("__")
}

/// Seed of replication `rep` in cell `cell`: the first eight bytes
/// (little endian) of SHA-256 over the master seed, the cell id and the
/// replication index.
pub fn replication_seed(master: u64, cell: &str, rep: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(cell.as_bytes());
    h.update([0u8]);
    h.update(rep.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("eight bytes"))
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub id: String,
    pub parameters: Vec<(String, Value)>,
    pub scenario: Scenario,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    /// One entry per replication, in replication order.
    pub runs: Vec<Result<RunOutput, String>>,
}

impl CellResult {
    pub fn failed(&self) -> usize {
        self.runs.iter().filter(|r| r.is_err()).count()
    }

    pub fn outputs(&self) -> impl Iterator<Item = &RunOutput> {
        self.runs.iter().filter_map(|r| r.as_ref().ok())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 means one per core.
    pub workers: usize,
    pub replications: Option<u32>,
}

/// Runs a single scenario (used for each replication).
pub fn run_scenario(scenario: Scenario) -> Result<RunOutput, String> {
    match catch_unwind(AssertUnwindSafe(|| Simulation::new(scenario).run())) {
        Ok(Ok(out)) => Ok(out),
        Ok(Err(e)) => Err(e.to_string()),
        Err(panic) => Err(panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| (*s).to_owned()))
            .unwrap_or_else(|| "replication panicked".to_owned())),
    }
}

/// Runs every cell and replication of `plan`. With `out`, per-replication
/// files and the cell tables are written there.
pub fn run_replications(plan: &ExperimentPlan, out: Option<&Path>, opts: RunOptions) -> Result<Vec<CellResult>, HarnessError> {
    let cells = plan.cells()?;
    let reps = opts.replications.unwrap_or(plan.replications).max(1);
    let jobs: Vec<(usize, u32)> = (0..cells.len()).flat_map(|c| (0..reps).map(move |r| (c, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let results: Vec<Result<RunOutput, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| {
                let mut scenario = cells[c].scenario.clone();
                scenario.seed = replication_seed(plan.seed, &cells[c].id, r);
                run_scenario(scenario)
            })
            .collect()
    });
    let mut per_cell: Vec<CellResult> = cells
        .into_iter()
        .map(|cell| CellResult {
            cell,
            runs: Vec::with_capacity(reps as usize),
        })
        .collect();
    for ((c, _), res) in jobs.into_iter().zip(results) {
        per_cell[c].runs.push(res);
    }
    if let Some(dir) = out {
        write_plan_outputs(&per_cell, dir)?;
    }
    Ok(per_cell)
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Write {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_plan_outputs(cells: &[CellResult], dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(write_err(dir))?;
    for cell in cells {
        for (rep, run) in cell.runs.iter().enumerate() {
            if let Ok(run) = run {
                let rep_dir: PathBuf = dir.join(&cell.cell.id).join(format!("rep_{rep:02}"));
                emit_outputs(run, &rep_dir).map_err(write_err(&rep_dir))?;
            }
        }
    }
    let path = dir.join("cells.csv");
    std::fs::write(&path, cells_csv(cells)).map_err(write_err(&path))?;
    let path = dir.join("status.csv");
    std::fs::write(&path, status_csv(cells)).map_err(write_err(&path))?;
    Ok(())
}

/// Scalar measures of one run, in a fixed order.
pub fn measures(summary: &RunSummary) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    if let Value::Object(totals) = serde_json::to_value(&summary.totals).expect("totals serialize") {
        for (k, v) in totals {
            out.push((k, v.as_f64().unwrap_or(f64::NAN)));
        }
    }
    out.push(("mean_daily_customers".into(), summary.mean_daily_customers));
    out.push(("average_visits_per_customer".into(), summary.average_visits_per_customer));
    out.push(("distinct_customers".into(), summary.distinct_customers as f64));
    out.push(("final_pool_size".into(), summary.final_pool_size as f64));
    out.push(("terminated".into(), if summary.terminated { 1.0 } else { 0.0 }));
    out.push(("last_day".into(), f64::from(summary.last_day)));
    out
}

/// Mean and sample standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

pub fn cells_csv(cells: &[CellResult]) -> String {
    let mut s = String::from("cell,measure,mean,sd,n\n");
    for cell in cells {
        let per_run: Vec<Vec<(String, f64)>> = cell.outputs().map(|o| measures(&o.summary)).collect();
        let Some(first) = per_run.first() else { continue };
        for (i, (name, _)) in first.iter().enumerate() {
            let xs: Vec<f64> = per_run.iter().map(|m| m[i].1).collect();
            let (mean, sd) = mean_sd(&xs);
            let _ = writeln!(s, "{},{name},{mean},{sd},{}", cell.cell.id, xs.len());
        }
    }
    s
}

pub fn status_csv(cells: &[CellResult]) -> String {
    let mut s = String::from("cell,replications,failed,error\n");
    for cell in cells {
        let first_err = cell
            .runs
            .iter()
            .find_map(|r| r.as_ref().err())
            .map(|e| e.replace(['\n', ','], " "))
            .unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{}", cell.cell.id, cell.runs.len(), cell.failed(), first_err);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a = replication_seed(7, "base", 0);
        assert_eq!(a, replication_seed(7, "base", 0));
        assert_ne!(a, replication_seed(7, "base", 1));
        assert_ne!(a, replication_seed(8, "base", 0));
        assert_ne!(a, replication_seed(7, "other", 0));
    }

    #[test]
    fn sweep_expands_cartesian_product() {
        let plan = ExperimentPlan::from_json_str(
            r#"{"base": {"preset": "atv"}, "sweep": [
                {"parameter": "preset", "values": ["atv", "ww"]},
                {"parameter": "main_pool_size", "values": [2000, 4000, 6000]}],
               "replications": 2, "weeks": 1, "mode": "noise_reduction"}"#,
        )
        .unwrap();
        let cells = plan.cells().unwrap();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[0].id, "preset-atv__main_pool_size-2000");
        assert_eq!(cells[5].scenario.customers_per_day, 915);
        assert_eq!(cells[5].scenario.main_pool_size, 6000);
        assert!(cells
            .iter()
            .all(|c| c.scenario.weeks == 1 && c.scenario.mode == Mode::NoiseReduction));
    }

    #[test]
    fn nested_paths_merge_over_preset() {
        let plan = ExperimentPlan::from_json_str(
            r#"{"base": {"preset": "ww"}, "sweep": [{"parameter": "wom.adoption_fraction", "values": [0.2]}]}"#,
        )
        .unwrap();
        let cells = plan.cells().unwrap();
        assert_eq!(cells[0].scenario.wom.adoption_fraction, 0.2);
        assert_eq!(cells[0].id, "wom.adoption_fraction-0.2");
    }

    #[test]
    fn invalid_cell_is_reported() {
        let plan = ExperimentPlan::from_json_str(
            r#"{"base": {"preset": "atv"}, "sweep": [{"parameter": "main_pool_size", "values": [0]}]}"#,
        )
        .unwrap();
        assert!(matches!(plan.cells(), Err(HarnessError::Scenario { .. })));
        assert!(ExperimentPlan::from_json_str(r#"{"base": 3}"#).is_err());
        assert!(ExperimentPlan::from_json_str(r#"{"base": {}, "replications": 0}"#).is_err());
        assert!(ExperimentPlan::from_json_str(r#"{"base": {}, "extra": 1}"#).is_err());
    }

    #[test]
    fn set_path_creates_objects() {
        let mut v = json!({"a": 1});
        set_path(&mut v, "b.c", json!(2));
        assert_eq!(v, json!({"a": 1, "b": {"c": 2}}));
    }

    #[test]
    fn sample_sd() {
        assert_eq!(mean_sd(&[10.0, 20.0]).0, 15.0);
        assert!((mean_sd(&[10.0, 20.0]).1 - 7.0710678).abs() < 1e-6);
        assert_eq!(mean_sd(&[3.0]), (3.0, 0.0));
    }
}
