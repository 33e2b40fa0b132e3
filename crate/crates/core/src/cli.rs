//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::harness::{run_replications, run_scenario, ExperimentPlan, HarnessError, RunOptions};
use crate::metrics::emit_outputs;
use crate::scenario::{resolve_scenario, Mode, Preset, Scenario, ScenarioError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "retail-sim", version, about = "Agent-based retail department simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Normal,
    NoiseReduction,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Normal => Mode::Normal,
            ModeArg::NoiseReduction => Mode::NoiseReduction,
        }
    }
}

#[derive(Debug, Args)]
struct Overrides {
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Number of simulated weeks
    #[arg(long)]
    weeks: Option<u32>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Suppress progress output
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario and write its output files
    Run {
        /// Scenario file or preset name
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run every cell and replication of an experiment plan
    Sweep {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        replications: Option<u32>,
        /// Worker threads (default: one per core)
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a scenario file (or plan) without running it
    Validate {
        #[arg(long, required_unless_present = "plan")]
        scenario: Option<String>,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// List the built-in department presets
    Presets {
        /// Print each preset as a full scenario document
        #[arg(long)]
        json: bool,
    },
}

fn scenario_code(e: &ScenarioError) -> i32 {
    match e {
        ScenarioError::Io { .. } => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

fn harness_code(e: &HarnessError) -> i32 {
    match e {
        HarnessError::Read { .. } | HarnessError::Write { .. } => EXIT_IO,
        HarnessError::Scenario { source, .. } => scenario_code(source),
        HarnessError::Plan(_) | HarnessError::Pool(_) => EXIT_INVALID,
    }
}

fn apply(scenario: &mut Scenario, o: &Overrides) -> Result<(), ScenarioError> {
    if let Some(s) = o.seed {
        scenario.seed = s;
    }
    if let Some(w) = o.weeks {
        scenario.weeks = w;
    }
    if let Some(m) = o.mode {
        scenario.mode = m.into();
    }
    scenario.validate()
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run {
            scenario,
            out,
            overrides,
        } => {
            let mut sc = match resolve_scenario(&scenario) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return scenario_code(&e);
                }
            };
            if let Err(e) = apply(&mut sc, &overrides) {
                eprintln!("error: {e}");
                return EXIT_INVALID;
            }
            let result = match run_scenario(sc) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: simulation failed: {e}");
                    return EXIT_FAILED;
                }
            };
            if let Err(e) = emit_outputs(&result, &out) {
                eprintln!("error: cannot write {}: {e}", out.display());
                return EXIT_IO;
            }
            if !overrides.quiet {
                let s = &result.summary;
                println!(
                    "{}: {} days, {} visits, {} transactions, mean {:.1} customers/day{}",
                    s.department,
                    s.days_simulated,
                    s.totals.entered,
                    s.totals.transactions,
                    s.mean_daily_customers,
                    if s.terminated {
                        format!(", department closed on day {}", s.last_day)
                    } else {
                        String::new()
                    }
                );
            }
            EXIT_OK
        }
        Command::Sweep {
            plan,
            out,
            replications,
            workers,
            overrides,
        } => {
            let mut plan = match ExperimentPlan::load(&plan) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return harness_code(&e);
                }
            };
            if let Some(s) = overrides.seed {
                plan.seed = s;
            }
            if let Some(w) = overrides.weeks {
                plan.weeks = Some(w);
            }
            if let Some(m) = overrides.mode {
                plan.mode = Some(m.into());
            }
            let opts = RunOptions { workers, replications };
            let cells = match run_replications(&plan, Some(&out), opts) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return harness_code(&e);
                }
            };
            let mut failed = false;
            for c in &cells {
                if c.failed() > 0 {
                    failed = true;
                    eprintln!("cell {} failed in {} of {} replications", c.cell.id, c.failed(), c.runs.len());
                } else if !overrides.quiet {
                    let closed = c.outputs().filter(|o| o.summary.terminated).count();
                    println!("cell {}: {} replications, {} closed early", c.cell.id, c.runs.len(), closed);
                }
            }
            if failed {
                EXIT_FAILED
            } else {
                EXIT_OK
            }
        }
        Command::Validate { scenario, plan, quiet } => {
            if let Some(s) = scenario {
                match resolve_scenario(&s) {
                    Ok(sc) => {
                        if !quiet {
                            println!(
                                "{s}: ok ({}, {} customers/day, pool {})",
                                sc.department, sc.customers_per_day, sc.main_pool_size
                            );
                        }
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        return scenario_code(&e);
                    }
                }
            }
            if let Some(p) = plan {
                match ExperimentPlan::load(&p).and_then(|plan| plan.cells()) {
                    Ok(cells) => {
                        if !quiet {
                            println!("{}: ok ({} cells)", p.display(), cells.len());
                        }
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        return harness_code(&e);
                    }
                }
            }
            EXIT_OK
        }
        Command::Presets { json } => {
            for p in Preset::ALL {
                if json {
                    println!("{}", p.scenario().to_json_pretty());
                } else {
                    let s = p.scenario();
                    println!(
                        "{:<4} {:<5} {:>4} customers/day, pool {:>5}  {}",
                        p.name(),
                        s.department,
                        s.customers_per_day,
                        s.main_pool_size,
                        p.description()
                    );
                }
            }
            EXIT_OK
        }
    }
}
