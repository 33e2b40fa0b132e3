//! Scenario configuration: department presets, footfall, opening hours,
//! staffing, behaviour parameters and word-of-mouth settings.
//!
//! Scenario files are JSON. A file may name a `"preset"` and override any
//! subset of its fields; nested objects merge key by key, everything else is
//! replaced. Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::agents::{BehaviorParams, SatisfactionWeights};
use crate::behavior::{CustomerType, TriangularParams, UniformSource};
use crate::population::{WomParams, WomStrategy};
use crate::staffing::RoleCounts;

pub const MINUTES_PER_DAY: f64 = 1440.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Normal,
    #[serde(alias = "noise-reduction")]
    NoiseReduction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalProcess {
    /// Arrival times of a nonhomogeneous Poisson process conditioned on the
    /// day's head count: each daily-pool member arrives once, at a time drawn
    /// from the normalised footfall intensity.
    #[default]
    Poisson,
    /// Evenly spaced quantiles of the footfall intensity (debugging aid).
    Deterministic,
}

/// Opening window of one trading day, minutes since midnight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowRepr", into = "WindowRepr")]
pub struct OpeningWindow {
    pub open: f64,
    pub close: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowRepr {
    open: String,
    close: String,
}

fn parse_clock(s: &str) -> Result<f64, String> {
    let (h, m) = s.split_once(':').ok_or_else(|| format!("expected HH:MM, got {s:?}"))?;
    let h: u32 = h.parse().map_err(|_| format!("bad hour in {s:?}"))?;
    let m: u32 = m.parse().map_err(|_| format!("bad minute in {s:?}"))?;
    if h > 24 || m > 59 || (h == 24 && m > 0) {
        return Err(format!("time of day out of range: {s:?}"));
    }
    Ok(f64::from(h * 60 + m))
}

fn format_clock(minutes: f64) -> String {
    let m = minutes.round() as u32;
    format!("{:02}:{:02}", m / 60, m % 60)
}

impl TryFrom<WindowRepr> for OpeningWindow {
    type Error = String;

    fn try_from(r: WindowRepr) -> Result<Self, Self::Error> {
        let w = OpeningWindow {
            open: parse_clock(&r.open)?,
            close: parse_clock(&r.close)?,
        };
        if w.close <= w.open {
            return Err(format!("closing time {} is not after opening time {}", r.close, r.open));
        }
        Ok(w)
    }
}

impl From<OpeningWindow> for WindowRepr {
    fn from(w: OpeningWindow) -> Self {
        WindowRepr {
            open: format_clock(w.open),
            close: format_clock(w.close),
        }
    }
}

impl OpeningWindow {
    pub fn hm(open_h: u32, close_h: u32) -> Self {
        Self {
            open: f64::from(open_h * 60),
            close: f64::from(close_h * 60),
        }
    }

    pub fn minutes(&self) -> f64 {
        self.close - self.open
    }

    /// Number of (possibly partial) clock hours covered.
    pub fn hours(&self) -> usize {
        (self.minutes() / 60.0).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomerSplit {
    pub shopping_enthusiast: f64,
    pub solution_demander: f64,
    pub service_seeker: f64,
    pub disinterested_shopper: f64,
    pub internet_shopper: f64,
}

impl CustomerSplit {
    pub fn proportions(&self) -> [f64; 5] {
        [
            self.shopping_enthusiast,
            self.solution_demander,
            self.service_seeker,
            self.disinterested_shopper,
            self.internet_shopper,
        ]
    }

    pub fn uniform() -> Self {
        Self {
            shopping_enthusiast: 0.2,
            solution_demander: 0.2,
            service_seeker: 0.2,
            disinterested_shopper: 0.2,
            internet_shopper: 0.2,
        }
    }

    /// Integer head counts per type for a pool of `n`, by largest remainder.
    pub fn apportion(&self, n: usize) -> [usize; 5] {
        let p = self.proportions();
        let mut counts = p.map(|x| (x * n as f64).floor() as usize);
        let mut rest = n - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..5).collect();
        order.sort_by(|&a, &b| {
            let ra = p[a] * n as f64 - counts[a] as f64;
            let rb = p[b] * n as f64 - counts[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if rest == 0 {
                break;
            }
            counts[i] += 1;
            rest -= 1;
        }
        counts
    }

    pub fn sample(&self, src: &mut (impl UniformSource + ?Sized)) -> CustomerType {
        let u = src.next_uniform();
        let mut acc = 0.0;
        for (t, p) in CustomerType::ALL.iter().zip(self.proportions()) {
            acc += p;
            if u < acc {
                return *t;
            }
        }
        CustomerType::InternetShopper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseReductionSettings {
    pub opening: OpeningWindow,
    pub staffing: RoleCounts,
}

/// Full configuration of one simulated department.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub department: String,
    pub mode: Mode,
    pub weeks: u32,
    pub main_pool_size: u32,
    pub customer_split: CustomerSplit,
    /// Known average number of customers per day.
    pub customers_per_day: u32,
    /// Per-weekday multipliers of `customers_per_day` (Sunday first, mean 1); normal mode only.
    pub weekday_demand_factors: [f64; 7],
    /// Sunday first; normal mode only.
    pub opening_hours: [OpeningWindow; 7],
    /// One weight per opening hour for each weekday; each row sums to 1.
    pub hourly_footfall: [Vec<f64>; 7],
    /// Staff requirement per weekday, Sunday first; normal mode only.
    pub staffing: [RoleCounts; 7],
    pub noise_reduction: NoiseReductionSettings,
    pub closing_grace_minutes: f64,
    pub arrival_process: ArrivalProcess,
    pub behavior: BehaviorParams,
    pub wom: WomParams,
    pub seed: u64,
}

/// The effective settings of one weekday after applying the mode.
#[derive(Debug, Clone, PartialEq)]
pub struct DayConfig<'a> {
    pub opening: OpeningWindow,
    pub footfall: std::borrow::Cow<'a, [f64]>,
    pub demand_factor: f64,
    pub staffing: RoleCounts,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid scenario field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown preset {0:?} (available: atv, ww)")]
    UnknownPreset(String),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Atv,
    Ww,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Atv, Preset::Ww];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Atv => "atv",
            Preset::Ww => "ww",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Atv => "Audio & Television: long advisory services, tighter staffing",
            Preset::Ww => "WomensWear: short services, shopping-enthusiast heavy, more staff",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ScenarioError> {
        match name.to_ascii_lowercase().as_str() {
            "atv" | "a&tv" => Ok(Preset::Atv),
            "ww" => Ok(Preset::Ww),
            _ => Err(ScenarioError::UnknownPreset(name.to_owned())),
        }
    }

    pub fn scenario(self) -> Scenario {
        let tri = |a, b, c| TriangularParams::new(a, b, c).expect("preset triangular");
        let weekday_curve = normalized(&[5.0, 7.0, 9.0, 12.0, 11.0, 8.0, 7.0, 8.0, 11.0, 12.0, 10.0]);
        let saturday_curve = normalized(&[4.0, 6.0, 9.0, 11.0, 13.0, 14.0, 13.0, 11.0, 8.0, 6.0, 5.0]);
        let sunday_curve = normalized(&[12.0, 17.0, 21.0, 21.0, 17.0, 12.0]);
        let long_day = OpeningWindow::hm(9, 20);
        let (department, customers_per_day, main_pool_size, split, help_scale, payment, p_escalate, weekday, weekend) = match self
        {
            Preset::Atv => (
                "A&TV",
                585,
                8000,
                CustomerSplit {
                    shopping_enthusiast: 0.20,
                    solution_demander: 0.30,
                    service_seeker: 0.25,
                    disinterested_shopper: 0.15,
                    internet_shopper: 0.10,
                },
                1.0,
                tri(2.0, 4.0, 10.0),
                0.2,
                RoleCounts {
                    cashier: 2,
                    normal_advisor: 3,
                    expert_advisor: 2,
                },
                RoleCounts {
                    cashier: 3,
                    normal_advisor: 4,
                    expert_advisor: 2,
                },
            ),
            Preset::Ww => (
                "WW",
                915,
                6500,
                CustomerSplit {
                    shopping_enthusiast: 0.40,
                    solution_demander: 0.20,
                    service_seeker: 0.15,
                    disinterested_shopper: 0.20,
                    internet_shopper: 0.05,
                },
                0.5,
                tri(1.0, 2.0, 5.0),
                0.05,
                RoleCounts {
                    cashier: 3,
                    normal_advisor: 5,
                    expert_advisor: 2,
                },
                RoleCounts {
                    cashier: 4,
                    normal_advisor: 6,
                    expert_advisor: 2,
                },
            ),
        };
        let help = tri(3.0, 15.0, 30.0).scaled(help_scale).expect("scaled help");
        Scenario {
            department: department.to_owned(),
            mode: Mode::Normal,
            weeks: 10,
            main_pool_size,
            customer_split: split,
            customers_per_day,
            weekday_demand_factors: [0.8, 0.9, 0.9, 0.9, 1.0, 1.1, 1.4],
            opening_hours: [
                OpeningWindow::hm(11, 17),
                long_day,
                long_day,
                long_day,
                long_day,
                long_day,
                long_day,
            ],
            hourly_footfall: [
                sunday_curve,
                weekday_curve.clone(),
                weekday_curve.clone(),
                weekday_curve.clone(),
                weekday_curve.clone(),
                weekday_curve,
                saturday_curve,
            ],
            staffing: [weekend, weekday, weekday, weekday, weekday, weekday, weekend],
            noise_reduction: NoiseReductionSettings {
                opening: OpeningWindow::hm(9, 19),
                staffing: weekday,
            },
            closing_grace_minutes: 15.0,
            arrival_process: ArrivalProcess::Poisson,
            behavior: BehaviorParams {
                p_buy_after_browse: 0.37,
                p_requires_help: 0.38,
                p_buy_after_help: 0.56,
                p_refund_goal: 0.05,
                p_escalate,
                p_refund_grant: 0.9,
                p_refund_to_purchase: 0.5,
                browse: tri(1.0, 7.0, 15.0),
                normal_help: help,
                expert_help: help,
                patience: tri(5.0, 12.0, 20.0),
                payment,
                refund_processing: payment,
                correct_delays: true,
                weights: SatisfactionWeights::default(),
            },
            wom: WomParams::default(),
            seed: 1,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn normalized(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Recursively merges `overrides` into `base`: objects key by key, anything
/// else replaced wholesale.
pub fn merge_json(base: &mut Value, overrides: Value) {
    match (base, overrides) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl Scenario {
    /// Parses a scenario document, optionally layered over a `"preset"`.
    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self, ScenarioError> {
        let Value::Object(mut map) = value else {
            return Err(ScenarioError::Parse("scenario must be a JSON object".into()));
        };
        let doc = match map.remove("preset") {
            None => Value::Object(map),
            Some(Value::String(name)) => {
                let mut base = serde_json::to_value(Preset::from_name(&name)?.scenario()).expect("preset serializes");
                merge_json(&mut base, Value::Object(map));
                base
            }
            Some(other) => return Err(invalid("preset", format!("expected a preset name, got {other}"))),
        };
        let scenario: Scenario = serde_json::from_value(doc).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Stable content hash (hex SHA-256 of the compact JSON form).
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.weeks == 0 {
            return Err(invalid("weeks", "must be at least 1"));
        }
        if self.main_pool_size == 0 {
            return Err(invalid("main_pool_size", "must be positive"));
        }
        if self.customers_per_day == 0 {
            return Err(invalid("customers_per_day", "must be positive"));
        }
        let split = self.customer_split.proportions();
        if split.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid("customer_split", "proportions must be non-negative"));
        }
        let total: f64 = split.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("customer_split", format!("proportions sum to {total}, expected 1")));
        }
        let factors = &self.weekday_demand_factors;
        if factors.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return Err(invalid("weekday_demand_factors", "factors must be non-negative"));
        }
        let mean = factors.iter().sum::<f64>() / 7.0;
        if (mean - 1.0).abs() > 1e-6 {
            return Err(invalid(
                "weekday_demand_factors",
                format!("factors average {mean}, expected 1"),
            ));
        }
        for (d, (window, weights)) in self.opening_hours.iter().zip(&self.hourly_footfall).enumerate() {
            check_footfall(&format!("hourly_footfall[{d}]"), window, weights)?;
        }
        if !(self.closing_grace_minutes.is_finite() && self.closing_grace_minutes >= 0.0) {
            return Err(invalid("closing_grace_minutes", "must be a non-negative number of minutes"));
        }
        for (name, p) in self.behavior.probabilities() {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("behavior.{name}"), format!("{p} is not a probability")));
            }
        }
        let wom = &self.wom;
        if !(0.0..=1.0).contains(&wom.adoption_fraction) {
            return Err(invalid("wom.adoption_fraction", "must lie in [0, 1]"));
        }
        if !(wom.contact_rate.is_finite() && wom.contact_rate >= 0.0) {
            return Err(invalid("wom.contact_rate", "must be non-negative"));
        }
        if wom.strategy == WomStrategy::DynamicPool && wom.new_customer_credit < 0 {
            return Err(invalid("wom.new_customer_credit", "must not be negative"));
        }
        Ok(())
    }

    /// Effective configuration of weekday `week_day` (0 = Sunday).
    pub fn day_config(&self, week_day: usize) -> DayConfig<'_> {
        match self.mode {
            Mode::Normal => DayConfig {
                opening: self.opening_hours[week_day],
                footfall: std::borrow::Cow::Borrowed(&self.hourly_footfall[week_day]),
                demand_factor: self.weekday_demand_factors[week_day],
                staffing: self.staffing[week_day],
            },
            Mode::NoiseReduction => {
                let opening = self.noise_reduction.opening;
                DayConfig {
                    opening,
                    footfall: std::borrow::Cow::Owned(flat_footfall(&opening)),
                    demand_factor: 1.0,
                    staffing: self.noise_reduction.staffing,
                }
            }
        }
    }

    /// Staff requirement for every weekday under the current mode.
    pub fn weekly_staffing(&self) -> [RoleCounts; 7] {
        std::array::from_fn(|d| self.day_config(d).staffing)
    }

    /// Known demand for weekday `week_day` before word of mouth, rounded half up.
    pub fn core_demand(&self, week_day: usize) -> u64 {
        (f64::from(self.customers_per_day) * self.day_config(week_day).demand_factor + 0.5).floor() as u64
    }
}

fn check_footfall(field: &str, window: &OpeningWindow, weights: &[f64]) -> Result<(), ScenarioError> {
    if weights.len() != window.hours() {
        return Err(invalid(
            field,
            format!("{} weights for a {}-hour opening window", weights.len(), window.hours()),
        ));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(invalid(field, "weights must be non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(invalid(field, format!("weights sum to {total}, expected 1")));
    }
    Ok(())
}

/// Equal weight per minute of opening time.
pub fn flat_footfall(window: &OpeningWindow) -> Vec<f64> {
    let hours = window.hours();
    let total = window.minutes();
    (0..hours)
        .map(|h| {
            let start = h as f64 * 60.0;
            let end = (start + 60.0).min(total);
            (end - start) / total
        })
        .collect()
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Scenario::from_json_str(&text)
}

/// Resolves a CLI scenario argument: an existing file, otherwise a preset
/// name. Arguments that look like paths are always read as files.
pub fn resolve_scenario(arg: &str) -> Result<Scenario, ScenarioError> {
    let path = Path::new(arg);
    let looks_like_path = path.extension().is_some() || path.components().count() > 1;
    if path.exists() || looks_like_path {
        load_scenario(path)
    } else {
        Preset::from_name(arg).map(Preset::scenario)
    }
}

/// Expected arrivals per opening hour for a day with `demand` customers.
pub fn expected_hourly_arrivals(day: &DayConfig<'_>, demand: f64) -> Vec<f64> {
    day.footfall.iter().map(|w| w * demand).collect()
}

/// Arrival times (minutes since midnight, ascending) for `demand` customers.
///
/// Times follow the piecewise-constant footfall intensity over the opening
/// window; with [`ArrivalProcess::Poisson`] they are independent draws, which
/// is the arrival pattern of a nonhomogeneous Poisson process conditioned on
/// its count.
pub fn arrivals_for_day(day: &DayConfig<'_>, process: ArrivalProcess, demand: usize, rng: &mut (impl Rng + ?Sized)) -> Vec<f64> {
    let window = day.opening;
    let total_minutes = window.minutes();
    let mut cumulative = Vec::with_capacity(day.footfall.len());
    let mut acc = 0.0;
    for w in day.footfall.iter() {
        acc += w;
        cumulative.push(acc);
    }
    if demand == 0 || acc <= 0.0 {
        return Vec::new();
    }
    let time_at = |q: f64| -> f64 {
        let target = q * acc;
        let h = cumulative.partition_point(|c| *c <= target).min(cumulative.len() - 1);
        let before = if h == 0 { 0.0 } else { cumulative[h - 1] };
        let width = day.footfall[h];
        let start = h as f64 * 60.0;
        let span = (start + 60.0).min(total_minutes) - start;
        let frac = if width > 0.0 {
            ((target - before) / width).clamp(0.0, 1.0)
        } else {
            0.0
        };
        // keep arrivals strictly before closing
        (window.open + start + frac * span).min(window.close - 1e-6)
    };
    let mut times: Vec<f64> = match process {
        ArrivalProcess::Poisson => (0..demand).map(|_| time_at(rng.next_uniform())).collect(),
        ArrivalProcess::Deterministic => (0..demand).map(|i| time_at((i as f64 + 0.5) / demand as f64)).collect(),
    };
    times.sort_by(f64::total_cmp);
    times
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn presets_carry_department_demand() {
        let atv = Preset::Atv.scenario();
        assert_eq!((atv.customers_per_day, atv.main_pool_size), (585, 8000));
        let ww = Preset::Ww.scenario();
        assert_eq!((ww.customers_per_day, ww.main_pool_size), (915, 6500));
        atv.validate().unwrap();
        ww.validate().unwrap();
    }

    #[test]
    fn preset_file_round_trip() {
        let s = Scenario::from_json_str(r#"{"preset": "atv"}"#).unwrap();
        assert_eq!(s, Preset::Atv.scenario());
        let echoed = Scenario::from_json_str(&s.to_json_pretty()).unwrap();
        assert_eq!(echoed, s);
    }

    #[test]
    fn field_overrides_merge() {
        let s = Scenario::from_json_str(
            r#"{"preset": "ww", "main_pool_size": 2000, "wom": {"strategy": "dynamic_pool", "adoption_fraction": 0.5, "contact_rate": 2}}"#,
        )
        .unwrap();
        assert_eq!(s.main_pool_size, 2000);
        assert_eq!(s.wom.strategy, WomStrategy::DynamicPool);
        assert_eq!(s.customers_per_day, 915);
    }

    #[test]
    fn bad_split_names_field() {
        let err = Scenario::from_json_str(
            r#"{"preset": "atv", "customer_split": {"shopping_enthusiast": 0.1, "solution_demander": 0.2,
                "service_seeker": 0.2, "disinterested_shopper": 0.2, "internet_shopper": 0.2}}"#,
        )
        .unwrap_err();
        assert!(
            matches!(&err, ScenarioError::Invalid { field, .. } if field == "customer_split"),
            "{err}"
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            Scenario::from_json_str(r#"{"preset": "atv", "colour": "blue"}"#),
            Err(ScenarioError::Parse(_))
        ));
        assert!(matches!(
            Scenario::from_json_str(r#"{"preset": "atv", "wom": {"adoption": 1}}"#),
            Err(ScenarioError::Parse(_))
        ));
        assert!(matches!(
            Scenario::from_json_str(r#"{"preset": "shoes"}"#),
            Err(ScenarioError::UnknownPreset(_))
        ));
    }

    #[test]
    fn footfall_length_checked() {
        let err = Scenario::from_json_str(r#"{"preset": "atv", "hourly_footfall": [[1.0],[1.0],[1.0],[1.0],[1.0],[1.0],[1.0]]}"#)
            .unwrap_err();
        assert!(
            matches!(&err, ScenarioError::Invalid { field, .. } if field == "hourly_footfall[0]"),
            "{err}"
        );
    }

    #[test]
    fn noise_reduction_days_are_identical() {
        let mut s = Preset::Atv.scenario();
        s.mode = Mode::NoiseReduction;
        let first = s.day_config(0);
        for d in 1..7 {
            assert_eq!(s.day_config(d), first);
            assert_eq!(s.core_demand(d), 585);
        }
        assert_eq!(first.opening, OpeningWindow::hm(9, 19));
        assert!(first.footfall.iter().all(|w| (w - 0.1).abs() < 1e-12));
    }

    #[test]
    fn normal_mode_varies_by_weekday() {
        let s = Preset::Atv.scenario();
        assert_eq!(s.day_config(0).opening, OpeningWindow::hm(11, 17));
        assert_eq!(s.day_config(3).opening, OpeningWindow::hm(9, 20));
        let weekly: u64 = (0..7).map(|d| s.core_demand(d)).sum();
        assert!((weekly as i64 - 7 * 585).abs() <= 3);
    }

    #[test]
    fn flat_rate_split_per_hour() {
        let window = OpeningWindow::hm(9, 19);
        let day = DayConfig {
            opening: window,
            footfall: std::borrow::Cow::Owned(flat_footfall(&window)),
            demand_factor: 1.0,
            staffing: RoleCounts::default(),
        };
        let per_hour = expected_hourly_arrivals(&day, 600.0);
        assert!(per_hour.iter().all(|x| (x - 60.0).abs() < 1e-9));
    }

    #[test]
    fn arrivals_follow_footfall() {
        let s = Preset::Atv.scenario();
        let day = s.day_config(1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut per_hour = vec![0usize; day.footfall.len()];
        let days = 1000;
        for _ in 0..days {
            let t = arrivals_for_day(&day, ArrivalProcess::Poisson, 585, &mut rng);
            assert_eq!(t.len(), 585);
            assert!(t.windows(2).all(|w| w[0] <= w[1]));
            assert!(t.iter().all(|x| *x >= day.opening.open && *x < day.opening.close));
            for x in t {
                per_hour[((x - day.opening.open) / 60.0) as usize] += 1;
            }
        }
        for (h, w) in day.footfall.iter().enumerate() {
            let expected = w * 585.0 * days as f64;
            let got = per_hour[h] as f64;
            assert!((got - expected).abs() / expected < 0.02, "hour {h}: {got} vs {expected}");
        }
        assert!(arrivals_for_day(&day, ArrivalProcess::Poisson, 0, &mut rng).is_empty());
    }

    #[test]
    fn deterministic_arrivals_are_spread() {
        let mut s = Preset::Atv.scenario();
        s.mode = Mode::NoiseReduction;
        let day = s.day_config(0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = arrivals_for_day(&day, ArrivalProcess::Deterministic, 600, &mut rng);
        assert!((t[0] - (540.0 + 0.5)).abs() < 1e-9);
        assert!((t[599] - (540.0 + 599.5)).abs() < 1e-9);
    }

    #[test]
    fn apportion_is_exact() {
        let split = Preset::Atv.scenario().customer_split;
        assert_eq!(split.apportion(8000), [1600, 2400, 2000, 1200, 800]);
        assert_eq!(split.apportion(7).iter().sum::<usize>(), 7);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = Preset::Atv.scenario();
        let mut b = a.clone();
        assert_eq!(a.content_hash(), b.content_hash());
        b.seed = 2;
        assert_ne!(a.content_hash(), b.content_hash());
    }
}
