//! Stochastic behaviour primitives.
//!
//! Every random decision a customer makes is either a Bernoulli trial against a
//! probability threshold or a delay drawn from a triangular distribution. Both
//! are modulated by the customer's type: a likelihood of `low`, `moderate` or
//! `high` moves the threshold (or the mode of the delay) halfway towards the
//! nearer bound.
//!
//! All draws consume exactly one uniform variate from a [`UniformSource`], so a
//! scripted source can force any decision path.

use rand::RngCore;
use serde::{Deserialize, Serialize};

/// A stream of uniform variates in `[0, 1)`.
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

impl<R: RngCore + ?Sized> UniformSource for R {
    #[inline]
    fn next_uniform(&mut self) -> f64 {
        // 53 random mantissa bits, same construction as rand's `StandardUniform`.
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Replays a fixed list of uniforms, then panics. Used to hand-trace the
/// statechart.
#[derive(Debug, Clone, Default)]
pub struct ScriptedUniforms {
    values: Vec<f64>,
    next: usize,
}

impl ScriptedUniforms {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        Self {
            values: values.into(),
            next: 0,
        }
    }

    pub fn consumed(&self) -> usize {
        self.next
    }

    pub fn remaining(&self) -> usize {
        self.values.len() - self.next
    }
}

impl UniformSource for ScriptedUniforms {
    fn next_uniform(&mut self) -> f64 {
        let v = *self
            .values
            .get(self.next)
            .unwrap_or_else(|| panic!("scripted uniform stream exhausted after {} draws", self.next));
        self.next += 1;
        v
    }
}

/// How likely a customer type is to perform an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Likelihood {
    Low = 0,
    Moderate = 1,
    High = 2,
}

impl Likelihood {
    pub const ALL: [Likelihood; 3] = [Likelihood::Low, Likelihood::Moderate, Likelihood::High];
}

/// Corrects an original decision threshold for a customer's likelihood.
///
/// `limit` is half the distance from the threshold to the nearer of 0 and 1, so
/// the result always stays inside `[0, 1]`.
pub fn correct_threshold(original: f64, likelihood: Likelihood) -> f64 {
    debug_assert!((0.0..=1.0).contains(&original), "threshold {original} outside [0, 1]");
    let limit = if original < 0.5 {
        original / 2.0
    } else {
        (1.0 - original) / 2.0
    };
    match likelihood {
        Likelihood::Low => original - limit,
        Likelihood::Moderate => original,
        Likelihood::High => original + limit,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelaySense {
    /// A higher likelihood lengthens the delay (e.g. patience under `wait`).
    LongerIsFavorable,
    /// A higher likelihood shortens the delay.
    ShorterIsFavorable,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TriangularError {
    #[error("triangular bounds must satisfy 0 <= min <= mode <= max (got {min}, {mode}, {max})")]
    Ordering { min: f64, mode: f64, max: f64 },
}

/// Parameters of a triangular delay distribution, in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct TriangularParams {
    min: f64,
    mode: f64,
    max: f64,
}

impl TriangularParams {
    pub fn new(min: f64, mode: f64, max: f64) -> Result<Self, TriangularError> {
        if min.is_finite() && mode.is_finite() && max.is_finite() && 0.0 <= min && min <= mode && mode <= max {
            Ok(Self { min, mode, max })
        } else {
            Err(TriangularError::Ordering { min, mode, max })
        }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn mode(&self) -> f64 {
        self.mode
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn mean(&self) -> f64 {
        (self.min + self.mode + self.max) / 3.0
    }

    /// Multiplies all three parameters by `factor` (must be non-negative).
    pub fn scaled(&self, factor: f64) -> Result<Self, TriangularError> {
        Self::new(self.min * factor, self.mode * factor, self.max * factor)
    }

    /// Inverse-CDF transform of one uniform variate.
    pub fn quantile(&self, u: f64) -> f64 {
        let range = self.max - self.min;
        if range <= 0.0 {
            return self.min;
        }
        let left = self.mode - self.min;
        let x = if u * range < left {
            self.min + (u * range * left).sqrt()
        } else {
            self.max - ((1.0 - u) * range * (self.max - self.mode)).sqrt()
        };
        x.clamp(self.min, self.max)
    }
}

impl TryFrom<[f64; 3]> for TriangularParams {
    type Error = TriangularError;

    fn try_from([min, mode, max]: [f64; 3]) -> Result<Self, Self::Error> {
        Self::new(min, mode, max)
    }
}

impl From<TriangularParams> for [f64; 3] {
    fn from(t: TriangularParams) -> Self {
        [t.min, t.mode, t.max]
    }
}

/// Delay analogue of [`correct_threshold`]: moves the mode halfway towards `max`
/// (favourable and likely) or towards `min`, leaving the support untouched.
pub fn correct_triangular(t: TriangularParams, likelihood: Likelihood, sense: DelaySense) -> TriangularParams {
    let towards_max = match (likelihood, sense) {
        (Likelihood::Moderate, _) => return t,
        (Likelihood::High, DelaySense::LongerIsFavorable) | (Likelihood::Low, DelaySense::ShorterIsFavorable) => true,
        (Likelihood::Low, DelaySense::LongerIsFavorable) | (Likelihood::High, DelaySense::ShorterIsFavorable) => false,
    };
    let mode = if towards_max {
        t.mode + (t.max - t.mode) / 2.0
    } else {
        t.mode - (t.mode - t.min) / 2.0
    };
    TriangularParams {
        mode: mode.clamp(t.min, t.max),
        ..t
    }
}

pub fn sample_triangular(t: &TriangularParams, src: &mut (impl UniformSource + ?Sized)) -> f64 {
    t.quantile(src.next_uniform())
}

pub fn bernoulli(p: f64, src: &mut (impl UniformSource + ?Sized)) -> bool {
    debug_assert!((0.0..=1.0).contains(&p), "probability {p} outside [0, 1]");
    src.next_uniform() < p
}

/// The five customer types of the department's market segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomerType {
    ShoppingEnthusiast,
    SolutionDemander,
    ServiceSeeker,
    DisinterestedShopper,
    InternetShopper,
}

impl CustomerType {
    pub const ALL: [CustomerType; 5] = [
        CustomerType::ShoppingEnthusiast,
        CustomerType::SolutionDemander,
        CustomerType::ServiceSeeker,
        CustomerType::DisinterestedShopper,
        CustomerType::InternetShopper,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            CustomerType::ShoppingEnthusiast => "shopping_enthusiast",
            CustomerType::SolutionDemander => "solution_demander",
            CustomerType::ServiceSeeker => "service_seeker",
            CustomerType::DisinterestedShopper => "disinterested_shopper",
            CustomerType::InternetShopper => "internet_shopper",
        }
    }

    pub fn profile(self) -> CustomerTypeProfile {
        use Likelihood::*;
        let (buy, wait, ask_help, ask_refund) = match self {
            CustomerType::ShoppingEnthusiast => (High, Moderate, Moderate, Low),
            CustomerType::SolutionDemander => (High, Low, Low, Low),
            CustomerType::ServiceSeeker => (Moderate, High, High, Low),
            CustomerType::DisinterestedShopper => (Low, Low, Low, High),
            CustomerType::InternetShopper => (Low, High, High, Low),
        };
        CustomerTypeProfile {
            customer_type: self,
            likelihood_buy: buy,
            likelihood_wait: wait,
            likelihood_ask_help: ask_help,
            likelihood_ask_refund: ask_refund,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CustomerTypeProfile {
    pub customer_type: CustomerType,
    pub likelihood_buy: Likelihood,
    pub likelihood_wait: Likelihood,
    pub likelihood_ask_help: Likelihood,
    pub likelihood_ask_refund: Likelihood,
}

impl CustomerTypeProfile {
    /// A profile with every likelihood `moderate`; leaves all thresholds unchanged.
    pub fn neutral(customer_type: CustomerType) -> Self {
        Self {
            customer_type,
            likelihood_buy: Likelihood::Moderate,
            likelihood_wait: Likelihood::Moderate,
            likelihood_ask_help: Likelihood::Moderate,
            likelihood_ask_refund: Likelihood::Moderate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn threshold_examples() {
        assert!((correct_threshold(0.37, Likelihood::High) - 0.555).abs() < 1e-12);
        assert!((correct_threshold(0.8, Likelihood::Low) - 0.7).abs() < 1e-12);
        for p in [0.0, 0.13, 0.5, 0.99] {
            assert_eq!(correct_threshold(p, Likelihood::Moderate), p);
        }
    }

    #[test]
    fn threshold_fixed_points_and_range() {
        for l in Likelihood::ALL {
            assert_eq!(correct_threshold(0.0, l), 0.0);
            assert_eq!(correct_threshold(1.0, l), 1.0);
        }
        for i in 0..=100 {
            let ot = i as f64 / 100.0;
            let lo = correct_threshold(ot, Likelihood::Low);
            let mid = correct_threshold(ot, Likelihood::Moderate);
            let hi = correct_threshold(ot, Likelihood::High);
            assert!(lo <= mid && mid <= hi, "ot={ot}");
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi), "ot={ot}");
        }
    }

    #[test]
    fn triangular_correction_examples() {
        let t = TriangularParams::new(5.0, 12.0, 20.0).unwrap();
        let sense = DelaySense::LongerIsFavorable;
        assert_eq!(correct_triangular(t, Likelihood::Moderate, sense), t);
        assert_eq!(
            correct_triangular(t, Likelihood::High, sense),
            TriangularParams::new(5.0, 16.0, 20.0).unwrap()
        );
        assert_eq!(
            correct_triangular(t, Likelihood::Low, sense),
            TriangularParams::new(5.0, 8.5, 20.0).unwrap()
        );
        // the shorter-is-favourable sense swaps the two adjustments
        let short = DelaySense::ShorterIsFavorable;
        assert_eq!(correct_triangular(t, Likelihood::High, short).mode(), 8.5);
        assert_eq!(correct_triangular(t, Likelihood::Low, short).mode(), 16.0);
    }

    #[test]
    fn triangular_rejects_bad_ordering() {
        assert!(TriangularParams::new(3.0, 2.0, 4.0).is_err());
        assert!(TriangularParams::new(-1.0, 0.0, 4.0).is_err());
        assert!(TriangularParams::new(0.0, f64::NAN, 4.0).is_err());
        let err = serde_json::from_str::<TriangularParams>("[5, 1, 2]");
        assert!(err.is_err());
    }

    #[test]
    fn degenerate_triangular_is_constant() {
        let t = TriangularParams::new(4.0, 4.0, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(sample_triangular(&t, &mut rng), 4.0);
        }
    }

    #[test]
    fn triangular_sample_mean_and_support() {
        let browse = TriangularParams::new(1.0, 7.0, 15.0).unwrap();
        let help = TriangularParams::new(3.0, 15.0, 30.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_triangular(&browse, &mut rng);
            let h = sample_triangular(&help, &mut rng);
            assert!((3.0..=30.0).contains(&h));
        }
        let mean = sum / n as f64;
        assert!((mean - 23.0 / 3.0).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn triangular_quantile_matches_cdf() {
        // F(x) = (x-a)^2 / ((b-a)(c-a)) on the left branch, so F(mode) = (c-a)/(b-a).
        let t = TriangularParams::new(1.0, 7.0, 15.0).unwrap();
        let at_mode = (7.0 - 1.0) / (15.0 - 1.0);
        assert!((t.quantile(at_mode) - 7.0).abs() < 1e-9);
        assert_eq!(t.quantile(0.0), 1.0);
        assert!((t.quantile(1.0) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_edges_and_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mut hits = 0;
        for _ in 0..n {
            assert!(!bernoulli(0.0, &mut rng));
            assert!(bernoulli(1.0, &mut rng));
            hits += bernoulli(0.37, &mut rng) as u32;
        }
        let frac = hits as f64 / n as f64;
        assert!((frac - 0.37).abs() < 0.01, "fraction {frac}");
    }

    #[test]
    fn profiles_cover_table() {
        let p = CustomerType::ShoppingEnthusiast.profile();
        assert_eq!(p.likelihood_buy, Likelihood::High);
        assert_eq!(p.likelihood_ask_refund, Likelihood::Low);
        let p = CustomerType::DisinterestedShopper.profile();
        assert_eq!(
            (
                p.likelihood_buy,
                p.likelihood_wait,
                p.likelihood_ask_help,
                p.likelihood_ask_refund
            ),
            (Likelihood::Low, Likelihood::Low, Likelihood::Low, Likelihood::High)
        );
    }

    #[test]
    fn scripted_stream_replays_in_order() {
        let mut s = ScriptedUniforms::new(vec![0.0, 0.99]);
        assert!(bernoulli(0.5, &mut s));
        assert!(!bernoulli(0.5, &mut s));
        assert_eq!(s.remaining(), 0);
    }
}
