//! Staff pool with full-time and part-time contracts, and the daily roster.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{Contract, Role, StaffId, StaffMember};

/// Head count per fixed role.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleCounts {
    pub cashier: u32,
    pub normal_advisor: u32,
    pub expert_advisor: u32,
}

impl RoleCounts {
    pub fn get(&self, role: Role) -> u32 {
        match role {
            Role::Cashier => self.cashier,
            Role::NormalAdvisor => self.normal_advisor,
            Role::ExpertAdvisor => self.expert_advisor,
            Role::GenericPartTimer => 0,
        }
    }

    pub fn total(&self) -> u32 {
        self.cashier + self.normal_advisor + self.expert_advisor
    }
}

/// Weekdays Monday..Friday, with 0 = Sunday.
pub const FULL_TIME_DAYS: std::ops::RangeInclusive<usize> = 1..=5;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum StaffingError {
    #[error("roster needs {needed} part-timers but the pool has {available}")]
    Infeasible { needed: u32, available: u32 },
}

#[derive(Debug, Clone)]
pub struct StaffPool {
    pub full_timers: Vec<StaffMember>,
    pub part_timers: Vec<StaffMember>,
}

impl StaffPool {
    /// Full-timers cover the weekday maxima per role; generic part-timers make
    /// up the largest shortfall on any day.
    pub fn for_requirements(week: &[RoleCounts; 7]) -> Self {
        let mut next: StaffId = 0;
        let mut full_timers = Vec::new();
        let mut ft_counts = RoleCounts::default();
        for role in Role::FIXED {
            let n = FULL_TIME_DAYS.map(|d| week[d].get(role)).max().unwrap_or(0);
            match role {
                Role::Cashier => ft_counts.cashier = n,
                Role::NormalAdvisor => ft_counts.normal_advisor = n,
                Role::ExpertAdvisor => ft_counts.expert_advisor = n,
                Role::GenericPartTimer => unreachable!(),
            }
            for _ in 0..n {
                full_timers.push(StaffMember::new(next, role, Contract::FullTime));
                next += 1;
            }
        }
        let pt = week
            .iter()
            .map(|req| {
                Role::FIXED
                    .iter()
                    .map(|&r| req.get(r).saturating_sub(ft_counts.get(r)))
                    .sum::<u32>()
            })
            .max()
            .unwrap_or(0);
        let part_timers = (0..pt)
            .map(|i| StaffMember::new(next + i as StaffId, Role::GenericPartTimer, Contract::PartTime))
            .collect();
        Self {
            full_timers,
            part_timers,
        }
    }

    pub fn size(&self) -> usize {
        self.full_timers.len() + self.part_timers.len()
    }
}

/// A staff member on duty for one day. `duty` is the role slot they fill;
/// for full-timers it equals their own role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RosterSlot {
    pub member: StaffMember,
    pub duty: Role,
}

pub type Roster = Vec<RosterSlot>;

pub fn roster_counts(roster: &[RosterSlot]) -> RoleCounts {
    let mut c = RoleCounts::default();
    for slot in roster {
        match slot.duty {
            Role::Cashier => c.cashier += 1,
            Role::NormalAdvisor => c.normal_advisor += 1,
            Role::ExpertAdvisor => c.expert_advisor += 1,
            Role::GenericPartTimer => {}
        }
    }
    c
}

/// Picks the day's staff: random full-timers of each role first, then random
/// part-timers for any shortfall.
pub fn select_staff_for_day<R: Rng + ?Sized>(
    pool: &StaffPool,
    requirement: &RoleCounts,
    rng: &mut R,
) -> Result<Roster, StaffingError> {
    let mut roster = Vec::with_capacity(requirement.total() as usize);
    let mut shortfall = Vec::new();
    for role in Role::FIXED {
        let need = requirement.get(role) as usize;
        let mut candidates: Vec<&StaffMember> = pool.full_timers.iter().filter(|m| m.role == role).collect();
        let take = need.min(candidates.len());
        let (chosen, _) = candidates.partial_shuffle(rng, take);
        for m in chosen.iter() {
            roster.push(RosterSlot {
                member: (*m).clone(),
                duty: role,
            });
        }
        shortfall.extend(std::iter::repeat_n(role, need - take));
    }
    if shortfall.len() > pool.part_timers.len() {
        return Err(StaffingError::Infeasible {
            needed: shortfall.len() as u32,
            available: pool.part_timers.len() as u32,
        });
    }
    let mut pts: Vec<&StaffMember> = pool.part_timers.iter().collect();
    let (chosen, _) = pts.partial_shuffle(rng, shortfall.len());
    for (m, duty) in chosen.iter().zip(shortfall) {
        roster.push(RosterSlot {
            member: (*m).clone(),
            duty,
        });
    }
    Ok(roster)
}
