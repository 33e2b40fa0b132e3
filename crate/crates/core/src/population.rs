//! Finite customer population: the main pool, the daily pool drawn from it,
//! and word-of-mouth pool dynamics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{CustomerAgent, CustomerId};
use crate::behavior::CustomerType;
use crate::scenario::CustomerSplit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WomStrategy {
    #[default]
    None,
    /// Constant main pool; word of mouth only changes how many are picked.
    StaticPool,
    /// Word of mouth creates and deletes main-pool members.
    DynamicPool,
}

/// Which classification of yesterday's visits feeds the word-of-mouth balance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountBasis {
    #[default]
    PerVisit,
    Lifetime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewCustomerTypes {
    #[default]
    Uniform,
    /// Same proportions as the initial main pool.
    Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WomParams {
    pub adoption_fraction: f64,
    pub contact_rate: f64,
    pub strategy: WomStrategy,
    #[serde(default)]
    pub count_basis: CountBasis,
    #[serde(default)]
    pub new_customer_types: NewCustomerTypes,
    /// Opening score of customers created by positive word of mouth.
    #[serde(default = "default_credit")]
    pub new_customer_credit: i64,
}

fn default_credit() -> i64 {
    1
}

impl Default for WomParams {
    fn default() -> Self {
        Self {
            adoption_fraction: 0.0,
            contact_rate: 0.0,
            strategy: WomStrategy::None,
            count_basis: CountBasis::PerVisit,
            new_customer_types: NewCustomerTypes::Uniform,
            new_customer_credit: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PopulationError {
    #[error("department closed: {0}")]
    DepartmentClosed(String),
    #[error("static pool size must be positive")]
    ZeroStaticPool,
}

/// Extra (or, if negative, lost) customers from yesterday's satisfaction
/// balance, rounded half away from zero.
pub fn additional_customers(n_satisfied: u64, n_dissatisfied: u64, wom: &WomParams) -> i64 {
    let balance = n_satisfied as f64 - n_dissatisfied as f64;
    (balance * wom.adoption_fraction * wom.contact_rate).round() as i64
}

/// Core demand scaled by how far the main pool has drifted from its initial
/// size, rounded half up in exact integer arithmetic.
pub fn core_customers_per_day(dynamic_pool_size: u64, known_per_day: u64, static_pool_size: u64) -> Result<u64, PopulationError> {
    if static_pool_size == 0 {
        return Err(PopulationError::ZeroStaticPool);
    }
    let num = 2 * u128::from(dynamic_pool_size) * u128::from(known_per_day) + u128::from(static_pool_size);
    Ok((num / (2 * u128::from(static_pool_size))) as u64)
}

/// Removes `k` uniformly chosen elements from `v` and returns them.
fn take_random<R: Rng + ?Sized>(v: &mut Vec<CustomerId>, k: usize, rng: &mut R) -> Vec<CustomerId> {
    let len = v.len();
    let k = k.min(len);
    for i in 0..k {
        let j = rng.random_range(0..len - i);
        v.swap(j, len - 1 - i);
    }
    v.split_off(len - k)
}

#[derive(Debug, Clone)]
pub struct PopulationState {
    /// Every customer ever created, indexed by id. Deleted ones stay with `alive == false`.
    pub agents: Vec<CustomerAgent>,
    idle: Vec<CustomerId>,
    daily: Vec<CustomerId>,
    pub static_pool_size: u64,
    pub yesterday_satisfied: u64,
    pub yesterday_dissatisfied: u64,
    pub created: u64,
    pub deleted: u64,
}

impl PopulationState {
    pub fn new(size: u64, split: &CustomerSplit) -> Self {
        let counts = split.apportion(size as usize);
        let mut agents = Vec::with_capacity(size as usize);
        for (t, n) in CustomerType::ALL.iter().zip(counts) {
            for _ in 0..n {
                agents.push(CustomerAgent::new(agents.len() as CustomerId, *t));
            }
        }
        let idle = (0..agents.len() as CustomerId).collect();
        Self {
            agents,
            idle,
            daily: Vec::new(),
            static_pool_size: size,
            yesterday_satisfied: 0,
            yesterday_dissatisfied: 0,
            created: 0,
            deleted: 0,
        }
    }

    /// Alive members of the main pool, including today's daily pool.
    pub fn pool_size(&self) -> u64 {
        (self.idle.len() + self.daily.len()) as u64
    }

    pub fn daily_pool(&self) -> &[CustomerId] {
        &self.daily
    }

    pub fn idle_pool(&self) -> &[CustomerId] {
        &self.idle
    }

    fn pick_into_daily<R: Rng + ?Sized>(&mut self, n: u64, rng: &mut R) {
        let picked = take_random(&mut self.idle, n as usize, rng);
        self.daily.extend(picked);
    }

    /// Static strategy: core picks plus or minus the word-of-mouth delta.
    pub fn build_daily_pool_static<R: Rng + ?Sized>(
        &mut self,
        core: u64,
        wom_delta: i64,
        rng: &mut R,
    ) -> Result<(), PopulationError> {
        debug_assert!(self.daily.is_empty());
        if wom_delta < 0 && wom_delta.unsigned_abs() >= core {
            return Err(PopulationError::DepartmentClosed(format!(
                "negative word of mouth ({wom_delta}) takes away all {core} core customers"
            )));
        }
        self.pick_into_daily(core, rng);
        if wom_delta > 0 {
            self.pick_into_daily(wom_delta as u64, rng);
        } else if wom_delta < 0 {
            let released = take_random(&mut self.daily, wom_delta.unsigned_abs() as usize, rng);
            self.idle.extend(released);
        }
        Ok(())
    }

    /// Dynamic strategy: core demand follows the pool size; positive word of
    /// mouth creates customers, negative word of mouth removes them.
    pub fn build_daily_pool_dynamic<R: Rng + ?Sized>(
        &mut self,
        known_per_day: u64,
        wom: &WomParams,
        split: &CustomerSplit,
        wom_delta: i64,
        rng: &mut R,
    ) -> Result<u64, PopulationError> {
        debug_assert!(self.daily.is_empty());
        let core = core_customers_per_day(self.pool_size(), known_per_day, self.static_pool_size)?;
        self.pick_into_daily(core, rng);
        if wom_delta > 0 {
            for _ in 0..wom_delta {
                let t = match wom.new_customer_types {
                    NewCustomerTypes::Uniform => CustomerType::ALL[rng.random_range(0..CustomerType::ALL.len())],
                    NewCustomerTypes::Split => split.sample(rng),
                };
                let id = self.agents.len() as CustomerId;
                self.agents
                    .push(CustomerAgent::word_of_mouth_recruit(id, t, wom.new_customer_credit));
                self.daily.push(id);
                self.created += 1;
            }
        } else if wom_delta < 0 {
            self.apply_negative_wom(wom_delta.unsigned_abs(), rng)?;
        }
        Ok(core)
    }

    /// Makes `n` random picks from the daily pool. A customer with a positive
    /// score is neutralised and put back (and may be picked again); anyone
    /// else is deleted for good. Returns the number deleted.
    pub fn apply_negative_wom<R: Rng + ?Sized>(&mut self, n: u64, rng: &mut R) -> Result<u64, PopulationError> {
        if n > self.daily.len() as u64 {
            return Err(PopulationError::DepartmentClosed(format!(
                "negative word of mouth reaches {n} customers but only {} are left today",
                self.daily.len()
            )));
        }
        let mut removed = 0;
        for _ in 0..n {
            if self.daily.is_empty() {
                return Err(PopulationError::DepartmentClosed(
                    "no customers left in the daily pool".into(),
                ));
            }
            let i = rng.random_range(0..self.daily.len());
            let agent = &mut self.agents[self.daily[i] as usize];
            if agent.lifetime_score > 0 {
                agent.neutralize();
            } else {
                agent.alive = false;
                self.daily.swap_remove(i);
                removed += 1;
                self.deleted += 1;
            }
        }
        if self.daily.is_empty() {
            return Err(PopulationError::DepartmentClosed(
                "no customers left in the daily pool".into(),
            ));
        }
        Ok(removed)
    }

    /// Returns today's customers to the main pool and stores the satisfaction
    /// balance for tomorrow's word of mouth.
    pub fn end_of_day_release(&mut self, satisfied: u64, dissatisfied: u64) {
        self.idle.append(&mut self.daily);
        self.yesterday_satisfied = satisfied;
        self.yesterday_dissatisfied = dissatisfied;
    }

    /// Every alive agent is in exactly one of the idle/daily pools and
    /// `alive + deleted == initial + created`.
    pub fn check_conservation(&self) -> Result<(), String> {
        let mut seen = vec![false; self.agents.len()];
        for &id in self.idle.iter().chain(&self.daily) {
            let slot = seen.get_mut(id as usize).ok_or_else(|| format!("unknown customer {id}"))?;
            if *slot {
                return Err(format!("customer {id} held twice"));
            }
            if !self.agents[id as usize].alive {
                return Err(format!("deleted customer {id} still pooled"));
            }
            *slot = true;
        }
        let alive = self.agents.iter().filter(|a| a.alive).count() as u64;
        if alive != self.pool_size() {
            return Err(format!("{alive} alive customers but {} pooled", self.pool_size()));
        }
        if alive + self.deleted != self.static_pool_size + self.created {
            return Err(format!(
                "pool bookkeeping: {alive} alive + {} deleted != {} initial + {} created",
                self.deleted, self.static_pool_size, self.created
            ));
        }
        Ok(())
    }
}
