//! Agent-based discrete-event simulation of a service-oriented retail
//! department: customers with type-dependent behaviour, cashiers and
//! advisors, queues with reneging, satisfaction measures and word-of-mouth
//! driven customer pools.
//!
//! ```
//! use retail_sim::{engine::Simulation, scenario::{Mode, Preset}};
//!
//! let mut scenario = Preset::Ww.scenario();
//! scenario.mode = Mode::NoiseReduction;
//! scenario.weeks = 1;
//! let out = Simulation::new(scenario).run().unwrap();
//! assert_eq!(out.records.len(), 7);
//! assert_eq!(out.summary.totals.entered, out.summary.totals.epv_satisfied
//!     + out.summary.totals.epv_neutral + out.summary.totals.epv_dissatisfied);
//! ```

pub mod agents;
pub mod behavior;
pub mod cli;
pub mod engine;
pub mod harness;
pub mod metrics;
pub mod population;
pub mod queues;
pub mod scenario;
pub mod staffing;
