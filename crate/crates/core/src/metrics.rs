//! Performance measures: exit reasons, per-visit and accumulated satisfaction,
//! queue statistics, daily records and run-level summaries, plus file output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::agents::{classify_visit, CustomerAgent, ExitReason};
use crate::population::PopulationState;
use crate::queues::ServiceKind;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct QueueDayStats {
    pub entered: u64,
    pub reneged: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DailyRecord {
    /// Zero-based simulated day.
    pub day_index: u32,
    /// 0 = Sunday.
    pub week_day: u8,
    pub entered: u64,
    pub transactions: u64,
    pub exits: [u64; 6],
    pub epv: [u64; 3],
    pub ahd: [u64; 3],
    pub queues: [QueueDayStats; 4],
    pub pool_size: u64,
    pub wom_delta: i64,
    pub visit_score_sum: i64,
    pub lifetime_score_sum: i64,
    /// Per-visit score frequencies.
    pub visit_histogram: BTreeMap<i64, u64>,
    /// Minutes after closing at which the department became empty.
    pub emptied_after_close: Option<f64>,
    /// Customers still inside when the grace window ran out.
    pub grace_evictions: u64,
}

impl DailyRecord {
    pub fn new(day_index: u32, week_day: u8) -> Self {
        Self {
            day_index,
            week_day,
            ..Self::default()
        }
    }

    pub fn completed_visits(&self) -> u64 {
        self.exits.iter().sum()
    }

    pub fn exit_count(&self, reason: ExitReason) -> u64 {
        self.exits[reason.index()]
    }
}

/// Closes a visit: counts the exit, classifies the visit score, folds it into
/// the lifetime score and classifies that.
pub fn record_visit_end(rec: &mut DailyRecord, agent: &mut CustomerAgent, reason: ExitReason) {
    rec.exits[reason.index()] += 1;
    if reason == ExitReason::AfterPurchase {
        rec.transactions += 1;
    }
    rec.epv[classify_visit(agent.visit_score).index()] += 1;
    agent.lifetime_score += agent.visit_score;
    rec.ahd[classify_visit(agent.lifetime_score).index()] += 1;
    rec.visit_score_sum += agent.visit_score;
    rec.lifetime_score_sum += agent.lifetime_score;
    *rec.visit_histogram.entry(agent.visit_score).or_default() += 1;
}

pub const DAILY_COLUMNS: [&str; 26] = [
    "day",
    "weekday",
    "entered",
    "transactions",
    "exit_after_purchase",
    "exit_before_normal_help",
    "exit_before_expert_help",
    "exit_while_waiting_to_pay",
    "exit_before_finding_anything",
    "exit_refund_only",
    "epv_satisfied",
    "epv_neutral",
    "epv_dissatisfied",
    "ahd_satisfied",
    "ahd_neutral",
    "ahd_dissatisfied",
    "q_cashier_entered",
    "q_cashier_reneged",
    "q_normal_entered",
    "q_normal_reneged",
    "q_expert_entered",
    "q_expert_reneged",
    "q_refund_entered",
    "q_refund_reneged",
    "pool_size",
    "wom_delta",
];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub entered: u64,
    pub transactions: u64,
    pub exit_after_purchase: u64,
    pub exit_before_normal_help: u64,
    pub exit_before_expert_help: u64,
    pub exit_while_waiting_to_pay: u64,
    pub exit_before_finding_anything: u64,
    pub exit_refund_only: u64,
    pub epv_satisfied: u64,
    pub epv_neutral: u64,
    pub epv_dissatisfied: u64,
    pub ahd_satisfied: u64,
    pub ahd_neutral: u64,
    pub ahd_dissatisfied: u64,
    pub q_cashier_entered: u64,
    pub q_cashier_reneged: u64,
    pub q_normal_entered: u64,
    pub q_normal_reneged: u64,
    pub q_expert_entered: u64,
    pub q_expert_reneged: u64,
    pub q_refund_entered: u64,
    pub q_refund_reneged: u64,
    pub wom_delta: i64,
}

impl Totals {
    pub fn from_records(records: &[DailyRecord]) -> Self {
        let mut t = Totals::default();
        for r in records {
            t.entered += r.entered;
            t.transactions += r.transactions;
            t.exit_after_purchase += r.exits[0];
            t.exit_before_normal_help += r.exits[1];
            t.exit_before_expert_help += r.exits[2];
            t.exit_while_waiting_to_pay += r.exits[3];
            t.exit_before_finding_anything += r.exits[4];
            t.exit_refund_only += r.exits[5];
            t.epv_satisfied += r.epv[0];
            t.epv_neutral += r.epv[1];
            t.epv_dissatisfied += r.epv[2];
            t.ahd_satisfied += r.ahd[0];
            t.ahd_neutral += r.ahd[1];
            t.ahd_dissatisfied += r.ahd[2];
            let q = |k: ServiceKind| r.queues[k.index()];
            t.q_cashier_entered += q(ServiceKind::Pay).entered;
            t.q_cashier_reneged += q(ServiceKind::Pay).reneged;
            t.q_normal_entered += q(ServiceKind::NormalHelp).entered;
            t.q_normal_reneged += q(ServiceKind::NormalHelp).reneged;
            t.q_expert_entered += q(ServiceKind::ExpertHelp).entered;
            t.q_expert_reneged += q(ServiceKind::ExpertHelp).reneged;
            t.q_refund_entered += q(ServiceKind::Refund).entered;
            t.q_refund_reneged += q(ServiceKind::Refund).reneged;
            t.wom_delta += r.wom_delta;
        }
        t
    }
}

/// Day-over-day change of the mean visit score and the mean post-visit
/// lifetime score of that day's visitors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SatisfactionGrowth {
    pub day: u32,
    pub mean_visit_score: f64,
    pub mean_lifetime_score: f64,
    pub visit_delta: f64,
    pub lifetime_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub department: String,
    pub seed: u64,
    pub scenario_hash: String,
    pub days_simulated: u32,
    pub terminated: bool,
    /// Last day reached (1-based); on termination, the day the department closed.
    pub last_day: u32,
    pub termination_reason: Option<String>,
    pub totals: Totals,
    pub mean_daily_customers: f64,
    pub distinct_customers: u64,
    pub average_visits_per_customer: f64,
    pub final_pool_size: u64,
    pub customers_created: u64,
    pub customers_deleted: u64,
    pub satisfaction_growth: Vec<SatisfactionGrowth>,
}

/// Everything a finished (or terminated) run leaves behind.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub records: Vec<DailyRecord>,
    pub summary: RunSummary,
    pub visit_histogram: BTreeMap<i64, u64>,
    pub lifetime_histogram: BTreeMap<i64, u64>,
}

pub fn satisfaction_growth(records: &[DailyRecord]) -> Vec<SatisfactionGrowth> {
    let mut out: Vec<SatisfactionGrowth> = Vec::with_capacity(records.len());
    for r in records {
        let n = r.completed_visits().max(1) as f64;
        let mv = r.visit_score_sum as f64 / n;
        let ml = r.lifetime_score_sum as f64 / n;
        let (dv, dl) = out
            .last()
            .map_or((0.0, 0.0), |p| (mv - p.mean_visit_score, ml - p.mean_lifetime_score));
        out.push(SatisfactionGrowth {
            day: r.day_index + 1,
            mean_visit_score: mv,
            mean_lifetime_score: ml,
            visit_delta: dv,
            lifetime_delta: dl,
        });
    }
    out
}

pub fn summarize(
    scenario: &Scenario,
    records: Vec<DailyRecord>,
    pop: &PopulationState,
    termination: Option<(u32, String)>,
) -> RunOutput {
    let totals = Totals::from_records(&records);
    let days = records.len() as u32;
    let mut visit_histogram = BTreeMap::new();
    for r in &records {
        for (s, c) in &r.visit_histogram {
            *visit_histogram.entry(*s).or_default() += c;
        }
    }
    let mut lifetime_histogram = BTreeMap::new();
    let mut distinct = 0u64;
    let mut visits = 0u64;
    for a in pop.agents.iter().filter(|a| a.visits_made > 0) {
        distinct += 1;
        visits += u64::from(a.visits_made);
        *lifetime_histogram.entry(a.lifetime_score).or_default() += 1;
    }
    let (terminated, last_day, termination_reason) = match termination {
        Some((day, why)) => (true, day, Some(why)),
        None => (false, days, None),
    };
    let summary = RunSummary {
        department: scenario.department.clone(),
        seed: scenario.seed,
        scenario_hash: scenario.content_hash(),
        days_simulated: days,
        terminated,
        last_day,
        termination_reason,
        mean_daily_customers: if days == 0 {
            0.0
        } else {
            totals.entered as f64 / f64::from(days)
        },
        distinct_customers: distinct,
        average_visits_per_customer: if distinct == 0 { 0.0 } else { visits as f64 / distinct as f64 },
        final_pool_size: pop.pool_size(),
        customers_created: pop.created,
        customers_deleted: pop.deleted,
        satisfaction_growth: satisfaction_growth(&records),
        totals,
    };
    RunOutput {
        scenario: scenario.clone(),
        records,
        summary,
        visit_histogram,
        lifetime_histogram,
    }
}

pub fn daily_csv(records: &[DailyRecord]) -> String {
    let mut s = DAILY_COLUMNS.join(",");
    s.push('\n');
    for r in records {
        let _ = write!(s, "{},{},{},{}", r.day_index + 1, r.week_day, r.entered, r.transactions);
        for v in r.exits.iter().chain(&r.epv).chain(&r.ahd) {
            let _ = write!(s, ",{v}");
        }
        for q in &r.queues {
            let _ = write!(s, ",{},{}", q.entered, q.reneged);
        }
        let _ = writeln!(s, ",{},{}", r.pool_size, r.wom_delta);
    }
    s
}

pub fn histogram_csv(visit: &BTreeMap<i64, u64>, lifetime: &BTreeMap<i64, u64>) -> String {
    let mut s = String::from("kind,score,count\n");
    for (kind, h) in [("visit", visit), ("lifetime", lifetime)] {
        for (score, count) in h {
            let _ = writeln!(s, "{kind},{score},{count}");
        }
    }
    s
}

/// Writes daily.csv, summary.json, histogram.csv and scenario-echo.json.
pub fn emit_outputs(run: &RunOutput, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("daily.csv"), daily_csv(&run.records))?;
    let mut summary = serde_json::to_string_pretty(&run.summary).map_err(io::Error::other)?;
    summary.push('\n');
    std::fs::write(dir.join("summary.json"), summary)?;
    std::fs::write(
        dir.join("histogram.csv"),
        histogram_csv(&run.visit_histogram, &run.lifetime_histogram),
    )?;
    let mut echo = run.scenario.to_json_pretty();
    echo.push('\n');
    std::fs::write(dir.join("scenario-echo.json"), echo)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::CustomerType;

    fn visit(prior: i64, score: i64) -> (DailyRecord, CustomerAgent) {
        let mut rec = DailyRecord::new(0, 1);
        let mut a = CustomerAgent::new(0, CustomerType::ServiceSeeker);
        a.lifetime_score = prior;
        a.visit_score = score;
        record_visit_end(&mut rec, &mut a, ExitReason::AfterPurchase);
        (rec, a)
    }

    #[test]
    fn visit_end_classification() {
        let (r, a) = visit(0, 4);
        assert_eq!((r.epv, r.ahd, a.lifetime_score), ([1, 0, 0], [1, 0, 0], 4));
        let (r, a) = visit(5, -1);
        assert_eq!((r.epv, r.ahd, a.lifetime_score), ([0, 0, 1], [1, 0, 0], 4));
        let (r, _) = visit(0, 0);
        assert_eq!((r.epv, r.ahd), ([0, 1, 0], [0, 1, 0]));
        assert_eq!(r.transactions, 1);
        assert_eq!(r.visit_histogram.get(&0), Some(&1));
    }

    #[test]
    fn csv_layout() {
        let mut r = DailyRecord::new(0, 3);
        r.entered = 2;
        r.pool_size = 10;
        r.wom_delta = -1;
        let csv = daily_csv(&[r]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap().split(',').count(), 26);
        let row: Vec<_> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 26);
        assert_eq!((row[0], row[1], row[2], row[24], row[25]), ("1", "3", "2", "10", "-1"));
    }

    #[test]
    fn growth_deltas() {
        let mut a = DailyRecord::new(0, 0);
        a.exits[0] = 2;
        a.visit_score_sum = 2;
        let mut b = DailyRecord::new(1, 1);
        b.exits[0] = 1;
        b.visit_score_sum = -1;
        let g = satisfaction_growth(&[a, b]);
        assert_eq!(g[0].visit_delta, 0.0);
        assert_eq!(g[1].visit_delta, -2.0);
    }
}
