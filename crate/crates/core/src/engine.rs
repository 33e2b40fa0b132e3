//! Discrete-event kernel: event calendar, clock, random streams and the
//! simulation of trading days.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{
    customer_statechart_step, staff_serve, BehaviorParams, CustomerAgent, CustomerEvent, CustomerId, CustomerState, ExitReason,
    Followup, ModelError, Role, StaffMember, StepContext, StepOutcome, Timer,
};
use crate::behavior::UniformSource;
use crate::metrics::{record_visit_end, summarize, DailyRecord, QueueDayStats, RunOutput};
use crate::population::{additional_customers, CountBasis, PopulationError, PopulationState, WomStrategy};
use crate::queues::{QueueSystem, ServiceKind};
use crate::scenario::{arrivals_for_day, OpeningWindow, Scenario};
use crate::staffing::{select_staff_for_day, Roster, StaffPool, StaffingError};

struct Entry<E> {
    at: f64,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.at.total_cmp(&self.at).then(other.seq.cmp(&self.seq))
    }
}

/// Pending events ordered by time, then by insertion.
pub struct EventCalendar<E> {
    heap: BinaryHeap<Entry<E>>,
    next_seq: u64,
    now: f64,
}

impl<E> EventCalendar<E> {
    pub fn new(start: f64) -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: start,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, at: f64, event: E) -> Result<(), ModelError> {
        if at < self.now || at.is_nan() {
            return Err(ModelError::ScheduleInPast { at, now: self.now });
        }
        self.heap.push(Entry {
            at,
            seq: self.next_seq,
            event,
        });
        self.next_seq += 1;
        Ok(())
    }

    pub fn pop(&mut self) -> Option<(f64, E)> {
        let e = self.heap.pop()?;
        self.now = e.at;
        Some((e.at, e.event))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimClock {
    pub day_index: u32,
    /// Minutes since midnight.
    pub time_of_day: f64,
}

impl SimClock {
    pub fn week_day(&self) -> usize {
        (self.day_index % 7) as usize
    }

    pub fn next_day(&mut self) {
        self.day_index += 1;
        self.time_of_day = 0.0;
    }
}

/// Independent random streams of one replication.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub arrivals: ChaCha8Rng,
    pub behavior: ChaCha8Rng,
    pub staffing: ChaCha8Rng,
    pub wom: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        let stream = |n: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(n);
            r
        };
        Self {
            arrivals: stream(0),
            behavior: stream(1),
            staffing: stream(2),
            wom: stream(3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Ev {
    Arrival(CustomerId),
    Timer {
        customer: CustomerId,
        token: u32,
        timer: Timer,
    },
    /// Committed abandonment, queued behind any service completing at the same instant.
    RenegeCommit {
        customer: CustomerId,
        token: u32,
    },
    Closing,
    GraceEnd,
}

/// Per-day constants handed to [`simulate_day`].
#[derive(Debug, Clone, Copy)]
pub struct DayInputs<'a> {
    pub params: &'a BehaviorParams,
    pub opening: OpeningWindow,
    pub grace_minutes: f64,
    pub check_invariants: bool,
}

struct OnDuty {
    member: StaffMember,
    duty: Role,
    serving: Option<CustomerId>,
}

struct Department<'a, 'r> {
    inputs: DayInputs<'a>,
    agents: &'a mut [CustomerAgent],
    rng: &'r mut dyn UniformSource,
    rec: &'a mut DailyRecord,
    cal: EventCalendar<Ev>,
    queues: QueueSystem,
    staff: Vec<OnDuty>,
    inside: BTreeSet<CustomerId>,
    closing: bool,
}

fn preferred_roles(kind: ServiceKind) -> &'static [Role] {
    use Role::*;
    match kind {
        ServiceKind::Pay | ServiceKind::Refund => &[Cashier, GenericPartTimer],
        ServiceKind::NormalHelp => &[NormalAdvisor, GenericPartTimer, ExpertAdvisor],
        ServiceKind::ExpertHelp => &[ExpertAdvisor, GenericPartTimer],
    }
}

impl Department<'_, '_> {
    fn now(&self) -> f64 {
        self.cal.now()
    }

    fn agent(&mut self, id: CustomerId) -> &mut CustomerAgent {
        &mut self.agents[id as usize]
    }

    fn step(&mut self, id: CustomerId, event: CustomerEvent) -> Result<StepOutcome, ModelError> {
        let ctx = StepContext {
            params: self.inputs.params,
            closing: self.closing,
        };
        customer_statechart_step(&mut self.agents[id as usize], event, ctx, &mut *self.rng)
    }

    fn handle(&mut self, ev: Ev) -> Result<(), ModelError> {
        match ev {
            Ev::Arrival(id) => {
                self.agent(id).begin_visit();
                self.inside.insert(id);
                self.rec.entered += 1;
                let out = self.step(id, CustomerEvent::Entered)?;
                self.follow(id, out)
            }
            Ev::Timer { customer, token, timer } => {
                if self.agents[customer as usize].token != token {
                    return Ok(());
                }
                match timer {
                    Timer::BrowseDone => {
                        let out = self.step(customer, CustomerEvent::BrowseDone)?;
                        self.follow(customer, out)
                    }
                    Timer::Patience => {
                        let now = self.now();
                        self.cal.schedule(now, Ev::RenegeCommit { customer, token })
                    }
                    Timer::ServiceDone => self.service_done(customer),
                }
            }
            Ev::RenegeCommit { customer, token } => {
                if self.agents[customer as usize].token != token {
                    return Ok(());
                }
                if self.queues.renege(customer).is_none() {
                    return Err(ModelError::Invariant(format!("customer {customer} reneged while not queued")));
                }
                let out = self.step(customer, CustomerEvent::PatienceExpired)?;
                self.follow(customer, out)
            }
            Ev::Closing => {
                self.closing = true;
                let ids: Vec<_> = self.inside.iter().copied().collect();
                for id in ids {
                    let state = self.agents[id as usize].state;
                    if matches!(
                        state,
                        CustomerState::Browsing | CustomerState::QueueNormalHelp | CustomerState::QueueExpertHelp
                    ) {
                        self.queues.quick_exit(id);
                        let out = self.step(id, CustomerEvent::ClosingTime)?;
                        self.follow(id, out)?;
                    }
                }
                if self.inside.is_empty() {
                    self.rec.emptied_after_close = Some(0.0);
                }
                Ok(())
            }
            Ev::GraceEnd => {
                let ids: Vec<_> = self.inside.iter().copied().collect();
                self.rec.grace_evictions += ids.len() as u64;
                for id in ids {
                    self.queues.quick_exit(id);
                    if let Some(idx) = self.agent(id).serving_staff.take() {
                        self.staff[idx].member.release();
                        self.staff[idx].serving = None;
                    }
                    let out = self.step(id, CustomerEvent::GraceExpired)?;
                    self.follow(id, out)?;
                }
                Ok(())
            }
        }
    }

    fn service_done(&mut self, id: CustomerId) -> Result<(), ModelError> {
        let idx = self
            .agent(id)
            .serving_staff
            .take()
            .ok_or_else(|| ModelError::Invariant(format!("customer {id} finished service without a server")))?;
        self.staff[idx].member.release();
        self.staff[idx].serving = None;
        let event = match self.agents[id as usize].state {
            CustomerState::Paying => CustomerEvent::Paid,
            CustomerState::RefundProcessing => CustomerEvent::RefundDecided,
            _ => CustomerEvent::ServiceDone,
        };
        let out = self.step(id, event)?;
        self.follow(id, out)?;
        if !self.staff[idx].member.busy {
            self.offer(idx)?;
        }
        Ok(())
    }

    fn follow(&mut self, id: CustomerId, out: StepOutcome) -> Result<(), ModelError> {
        match out.followup {
            Followup::None => Ok(()),
            Followup::Schedule { after, timer } => {
                let token = self.agents[id as usize].token;
                let at = self.now() + after;
                self.cal.schedule(
                    at,
                    Ev::Timer {
                        customer: id,
                        token,
                        timer,
                    },
                )
            }
            Followup::Request(kind) => self.request(id, kind),
            Followup::Exit(reason) => {
                self.exit(id, reason);
                Ok(())
            }
        }
    }

    fn free_server(&self, kind: ServiceKind) -> Option<usize> {
        preferred_roles(kind)
            .iter()
            .find_map(|&role| self.staff.iter().position(|s| s.duty == role && !s.member.busy))
    }

    fn request(&mut self, id: CustomerId, kind: ServiceKind) -> Result<(), ModelError> {
        if let Some(idx) = self.free_server(kind) {
            return self.start_service(id, idx, kind, true);
        }
        let out = self.step(id, CustomerEvent::ServiceUnavailable)?;
        let Followup::Schedule { after, .. } = out.followup else {
            return Err(ModelError::Invariant(format!("customer {id} queued without patience")));
        };
        let now = self.now();
        self.queues.enqueue(kind, id, now, after)?;
        self.follow(id, out)
    }

    fn start_service(&mut self, id: CustomerId, idx: usize, kind: ServiceKind, immediate: bool) -> Result<(), ModelError> {
        let out = self.step(id, CustomerEvent::ServiceStarted { immediate })?;
        let Followup::Schedule { after, .. } = out.followup else {
            return Err(ModelError::Invariant(format!("service for customer {id} has no duration")));
        };
        let now = self.now();
        staff_serve(&mut self.staff[idx].member, id, kind, now, after)
            .map_err(|e| ModelError::Invariant(format!("staff {idx} refused customer {id}: {e}")))?;
        self.staff[idx].serving = Some(id);
        self.agent(id).serving_staff = Some(idx);
        self.follow(id, out)
    }

    /// Offers a free staff member to the queues their duty covers.
    fn offer(&mut self, idx: usize) -> Result<(), ModelError> {
        let duty = self.staff[idx].duty;
        for &kind in duty.service_order() {
            let now = self.now();
            let d = self.queues.dispatch(kind, duty, now);
            for r in d.reneged {
                let out = self.step(r, CustomerEvent::PatienceExpired)?;
                self.follow(r, out)?;
            }
            if let Some(w) = d.served {
                return self.start_service(w.customer, idx, kind, false);
            }
        }
        Ok(())
    }

    fn exit(&mut self, id: CustomerId, reason: ExitReason) {
        self.inside.remove(&id);
        record_visit_end(self.rec, &mut self.agents[id as usize], reason);
        if self.closing && self.inside.is_empty() && self.rec.emptied_after_close.is_none() {
            self.rec.emptied_after_close = Some(self.now() - self.inputs.opening.close);
        }
    }

    fn check(&self) -> Result<(), ModelError> {
        let fail = |m: String| Err(ModelError::Invariant(m));
        let mut served = 0;
        let mut queued = 0;
        for &id in &self.inside {
            let a = &self.agents[id as usize];
            if a.state.is_being_served() {
                served += 1;
                match a.serving_staff {
                    Some(idx) if self.staff[idx].serving == Some(id) => {}
                    _ => return fail(format!("customer {id} in {:?} without matching server", a.state)),
                }
            }
            if let Some(kind) = a.state.awaited_service() {
                queued += 1;
                if self.queues.queue_of(id) != Some(kind) {
                    return fail(format!("customer {id} in {:?} is not in that queue", a.state));
                }
            }
            if !a.state.is_inside() {
                return fail(format!("customer {id} counted inside in {:?}", a.state));
            }
        }
        let busy = self.staff.iter().filter(|s| s.member.busy).count();
        if busy != served {
            return fail(format!("{busy} busy staff but {served} customers being served"));
        }
        if queued != self.queues.total_waiting() {
            return fail(format!(
                "{queued} customers waiting but queues hold {}",
                self.queues.total_waiting()
            ));
        }
        for q in self.queues.queues() {
            if !q.is_balanced() {
                return fail(format!("{:?} queue counters unbalanced", q.kind));
            }
            if !q.is_empty() && self.free_server(q.kind).is_some() {
                return fail(format!("{:?} queue waits while a server is free", q.kind));
            }
        }
        let inside = self.rec.entered - self.rec.completed_visits();
        if inside != self.inside.len() as u64 {
            return fail(format!("occupancy {} but {inside} entered minus exited", self.inside.len()));
        }
        Ok(())
    }
}

/// Runs one trading day for the given arrivals (time, customer) and roster,
/// accumulating measures into `rec`.
pub fn simulate_day(
    inputs: DayInputs<'_>,
    agents: &mut [CustomerAgent],
    arrivals: &[(f64, CustomerId)],
    roster: &Roster,
    rng: &mut dyn UniformSource,
    rec: &mut DailyRecord,
) -> Result<(), ModelError> {
    let mut dept = Department {
        inputs,
        agents,
        rng,
        rec,
        cal: EventCalendar::new(0.0),
        queues: QueueSystem::new(),
        staff: roster
            .iter()
            .map(|s| OnDuty {
                member: StaffMember {
                    busy: false,
                    ..s.member.clone()
                },
                duty: s.duty,
                serving: None,
            })
            .collect(),
        inside: BTreeSet::new(),
        closing: false,
    };
    for &(t, id) in arrivals {
        dept.cal.schedule(t, Ev::Arrival(id))?;
    }
    let close = inputs.opening.close;
    dept.cal.schedule(close, Ev::Closing)?;
    dept.cal.schedule(close + inputs.grace_minutes, Ev::GraceEnd)?;
    while let Some((_, ev)) = dept.cal.pop() {
        dept.handle(ev)?;
        if inputs.check_invariants {
            dept.check()?;
        }
    }
    if !dept.inside.is_empty() {
        return Err(ModelError::Invariant(format!(
            "{} customers left inside overnight",
            dept.inside.len()
        )));
    }
    for kind in ServiceKind::ALL {
        let c = dept.queues.queue(kind).counters;
        dept.rec.queues[kind.index()] = QueueDayStats {
            entered: c.entered,
            reneged: c.reneged,
        };
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Staffing(#[from] StaffingError),
    #[error(transparent)]
    Population(#[from] PopulationError),
}

/// One replication of a scenario.
pub struct Simulation {
    scenario: Scenario,
    pop: PopulationState,
    staff_pool: StaffPool,
    rngs: RngStreams,
    clock: SimClock,
    records: Vec<DailyRecord>,
    check_invariants: bool,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Self {
        let pop = PopulationState::new(u64::from(scenario.main_pool_size), &scenario.customer_split);
        let staff_pool = StaffPool::for_requirements(&scenario.weekly_staffing());
        let rngs = RngStreams::new(scenario.seed);
        Self {
            scenario,
            pop,
            staff_pool,
            rngs,
            clock: SimClock::default(),
            records: Vec::new(),
            check_invariants: false,
        }
    }

    /// Verify queue, staff, occupancy and pool invariants after every event.
    pub fn with_invariant_checks(mut self, on: bool) -> Self {
        self.check_invariants = on;
        self
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn population(&self) -> &PopulationState {
        &self.pop
    }

    pub fn staff_pool(&self) -> &StaffPool {
        &self.staff_pool
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    pub fn records(&self) -> &[DailyRecord] {
        &self.records
    }

    /// Builds the daily pool, selects staff, simulates the day and releases
    /// customers back to the main pool.
    pub fn run_day(&mut self) -> Result<&DailyRecord, SimError> {
        let Simulation {
            scenario,
            pop,
            staff_pool,
            rngs,
            clock,
            records,
            check_invariants,
        } = self;
        let week_day = clock.week_day();
        let day = scenario.day_config(week_day);
        let known = scenario.core_demand(week_day);
        let wom = &scenario.wom;
        let delta = match wom.strategy {
            WomStrategy::None => 0,
            _ => additional_customers(pop.yesterday_satisfied, pop.yesterday_dissatisfied, wom),
        };
        match wom.strategy {
            WomStrategy::None | WomStrategy::StaticPool => pop.build_daily_pool_static(known, delta, &mut rngs.wom)?,
            WomStrategy::DynamicPool => {
                pop.build_daily_pool_dynamic(known, wom, &scenario.customer_split, delta, &mut rngs.wom)?;
            }
        }
        let roster = select_staff_for_day(staff_pool, &day.staffing, &mut rngs.staffing)?;
        let mut ids = pop.daily_pool().to_vec();
        ids.shuffle(&mut rngs.arrivals);
        let times = arrivals_for_day(&day, scenario.arrival_process, ids.len(), &mut rngs.arrivals);
        let arrivals: Vec<(f64, CustomerId)> = times.into_iter().zip(ids).collect();

        let mut rec = DailyRecord::new(clock.day_index, week_day as u8);
        rec.wom_delta = delta;
        let inputs = DayInputs {
            params: &scenario.behavior,
            opening: day.opening,
            grace_minutes: scenario.closing_grace_minutes,
            check_invariants: *check_invariants,
        };
        simulate_day(inputs, &mut pop.agents, &arrivals, &roster, &mut rngs.behavior, &mut rec)?;
        rec.pool_size = pop.pool_size();
        let (sat, dissat) = match wom.count_basis {
            CountBasis::PerVisit => (rec.epv[0], rec.epv[2]),
            CountBasis::Lifetime => (rec.ahd[0], rec.ahd[2]),
        };
        pop.end_of_day_release(sat, dissat);
        if *check_invariants {
            pop.check_conservation().map_err(ModelError::Invariant)?;
            if wom.strategy != WomStrategy::DynamicPool && pop.pool_size() != pop.static_pool_size {
                return Err(ModelError::Invariant("static main pool changed size".into()).into());
            }
        }
        clock.time_of_day = day.opening.close + scenario.closing_grace_minutes;
        records.push(rec);
        clock.next_day();
        Ok(records.last().expect("just pushed"))
    }

    /// Runs all configured weeks, stopping early if the department closes.
    pub fn run(mut self) -> Result<RunOutput, SimError> {
        let days = self.scenario.weeks * 7;
        let mut termination = None;
        while self.clock.day_index < days {
            match self.run_day() {
                Ok(_) => {}
                Err(SimError::Population(PopulationError::DepartmentClosed(why))) => {
                    termination = Some((self.clock.day_index + 1, why));
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(summarize(&self.scenario, self.records, &self.pop, termination))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::Contract;
    use crate::behavior::{CustomerType, ScriptedUniforms};
    use crate::population::WomParams;
    use crate::scenario::{Mode, Preset};
    use crate::staffing::RosterSlot;

    #[test]
    fn calendar_orders_by_time_then_insertion() {
        let mut c = EventCalendar::new(0.0);
        c.schedule(10.0, 'A').unwrap();
        c.schedule(10.0, 'B').unwrap();
        c.schedule(5.0, 'C').unwrap();
        assert_eq!(c.pop(), Some((5.0, 'C')));
        c.schedule(5.0, 'D').unwrap();
        c.schedule(20.0, 'E').unwrap();
        let order: Vec<char> = std::iter::from_fn(|| c.pop().map(|(_, e)| e)).collect();
        assert_eq!(order, vec!['D', 'A', 'B', 'E']);
    }

    #[test]
    fn calendar_rejects_the_past() {
        let mut c = EventCalendar::new(0.0);
        c.schedule(3.0, ()).unwrap();
        c.pop();
        assert_eq!(c.schedule(2.0, ()), Err(ModelError::ScheduleInPast { at: 2.0, now: 3.0 }));
        assert!(c.schedule(f64::NAN, ()).is_err());
    }

    #[test]
    fn clock_week_days() {
        let mut c = SimClock::default();
        for d in 0..15 {
            assert_eq!(c.week_day(), d % 7);
            c.next_day();
        }
    }

    fn roster(roles: &[Role]) -> Roster {
        roles
            .iter()
            .enumerate()
            .map(|(i, &r)| RosterSlot {
                member: StaffMember::new(i as u16, r, Contract::FullTime),
                duty: r,
            })
            .collect()
    }

    fn inputs(p: &BehaviorParams) -> DayInputs<'_> {
        DayInputs {
            params: p,
            opening: OpeningWindow::hm(9, 19),
            grace_minutes: 15.0,
            check_invariants: true,
        }
    }

    #[test]
    fn empty_day_has_zero_counts() {
        let p = Preset::Atv.scenario().behavior;
        let mut rec = DailyRecord::new(0, 1);
        let mut s = ScriptedUniforms::new(vec![]);
        simulate_day(inputs(&p), &mut [], &[], &roster(&[Role::Cashier]), &mut s, &mut rec).unwrap();
        assert_eq!(rec.entered + rec.transactions + rec.completed_visits(), 0);
        assert_eq!(rec.emptied_after_close, Some(0.0));
    }

    #[test]
    fn scripted_purchase() {
        let p = Preset::Atv.scenario().behavior;
        let mut agents = vec![CustomerAgent::new(0, CustomerType::ServiceSeeker)];
        // no refund, browse, no help, buy, pay
        let mut s = ScriptedUniforms::new(vec![0.999, 0.5, 0.999, 0.0, 0.5]);
        let mut rec = DailyRecord::new(0, 1);
        simulate_day(
            inputs(&p),
            &mut agents,
            &[(600.0, 0)],
            &roster(&[Role::Cashier]),
            &mut s,
            &mut rec,
        )
        .unwrap();
        assert_eq!(s.remaining(), 0);
        assert_eq!(
            (rec.entered, rec.transactions, rec.exit_count(ExitReason::AfterPurchase)),
            (1, 1, 1)
        );
        assert_eq!(agents[0].lifetime_score, 1);
        assert_eq!(rec.queues[ServiceKind::Pay.index()].entered, 0);
    }

    #[test]
    fn second_customer_queues_and_is_served_after_the_first() {
        let p = Preset::Atv.scenario().behavior;
        let mut agents = vec![
            CustomerAgent::new(0, CustomerType::ServiceSeeker),
            CustomerAgent::new(1, CustomerType::ServiceSeeker),
        ];
        // both: no refund, browse mode-ish, no help, buy; first pays immediately
        let mut s = ScriptedUniforms::new(vec![0.999, 0.5, 0.999, 0.5, 0.999, 0.0, 0.5, 0.999, 0.0, 0.5, 0.5]);
        let mut rec = DailyRecord::new(0, 1);
        simulate_day(
            inputs(&p),
            &mut agents,
            &[(600.0, 0), (600.0, 1)],
            &roster(&[Role::Cashier]),
            &mut s,
            &mut rec,
        )
        .unwrap();
        assert_eq!(s.remaining(), 0);
        assert_eq!(rec.transactions, 2);
        assert_eq!(rec.queues[ServiceKind::Pay.index()], QueueDayStats { entered: 1, reneged: 0 });
        // +1 for the one who never queued, 0 for the one who did
        let mut scores: Vec<_> = agents.iter().map(|a| a.lifetime_score).collect();
        scores.sort();
        assert_eq!(scores, vec![0, 1]);
    }

    #[test]
    fn browser_leaves_at_closing() {
        let p = Preset::Atv.scenario().behavior;
        let mut agents = vec![CustomerAgent::new(0, CustomerType::ServiceSeeker)];
        let mut s = ScriptedUniforms::new(vec![0.999, 0.99]);
        let mut rec = DailyRecord::new(0, 1);
        simulate_day(
            inputs(&p),
            &mut agents,
            &[(1139.0, 0)],
            &roster(&[Role::Cashier]),
            &mut s,
            &mut rec,
        )
        .unwrap();
        assert_eq!(rec.exit_count(ExitReason::BeforeFindingAnything), 1);
        assert_eq!(rec.emptied_after_close, Some(0.0));
    }

    #[test]
    fn payer_completes_after_closing() {
        let p = Preset::Atv.scenario().behavior;
        let mut agents = vec![CustomerAgent::new(0, CustomerType::ServiceSeeker)];
        // browse lasts about a minute, then a long payment crossing the close
        let mut s = ScriptedUniforms::new(vec![0.999, 0.0, 0.999, 0.0, 0.999]);
        let mut rec = DailyRecord::new(0, 1);
        simulate_day(
            inputs(&p),
            &mut agents,
            &[(1135.0, 0)],
            &roster(&[Role::Cashier]),
            &mut s,
            &mut rec,
        )
        .unwrap();
        assert_eq!(rec.transactions, 1);
        let t = rec.emptied_after_close.unwrap();
        assert!(t > 0.0 && t <= 15.0, "{t}");
    }

    #[test]
    fn grace_end_clears_the_department() {
        let p = Preset::Atv.scenario().behavior;
        let mut agents: Vec<_> = (0..40)
            .map(|i| CustomerAgent::new(i, CustomerType::SolutionDemander))
            .collect();
        let arrivals: Vec<_> = (0..40).map(|i| (1100.0 + f64::from(i), i)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut rec = DailyRecord::new(0, 1);
        simulate_day(
            inputs(&p),
            &mut agents,
            &arrivals,
            &roster(&[Role::Cashier, Role::NormalAdvisor]),
            &mut rng,
            &mut rec,
        )
        .unwrap();
        assert_eq!(rec.completed_visits(), 40);
        assert!(rec.emptied_after_close.unwrap() <= 15.0);
    }

    fn small(mode: Mode, strategy: WomStrategy, af: f64, cr: f64) -> Scenario {
        let mut s = Preset::Atv.scenario();
        s.mode = mode;
        s.weeks = 2;
        s.wom = WomParams {
            adoption_fraction: af,
            contact_rate: cr,
            strategy,
            ..WomParams::default()
        };
        s
    }

    #[test]
    fn invariants_hold_over_two_weeks() {
        for strategy in [WomStrategy::None, WomStrategy::StaticPool, WomStrategy::DynamicPool] {
            let sim = Simulation::new(small(Mode::Normal, strategy, 0.5, 2.0)).with_invariant_checks(true);
            let out = sim.run().unwrap();
            assert_eq!(out.records.len(), 14);
            for r in &out.records {
                assert_eq!(r.epv.iter().sum::<u64>(), r.completed_visits());
                assert_eq!(r.entered, r.completed_visits());
            }
        }
    }

    #[test]
    fn identical_seeds_identical_runs() {
        let a = Simulation::new(small(Mode::NoiseReduction, WomStrategy::DynamicPool, 0.5, 2.0))
            .run()
            .unwrap();
        let b = Simulation::new(small(Mode::NoiseReduction, WomStrategy::DynamicPool, 0.5, 2.0))
            .run()
            .unwrap();
        assert_eq!(a.records, b.records);
        let mut other = small(Mode::NoiseReduction, WomStrategy::DynamicPool, 0.5, 2.0);
        other.seed = 99;
        let c = Simulation::new(other).run().unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn overwhelming_negative_word_of_mouth_closes_the_department() {
        let mut s = small(Mode::NoiseReduction, WomStrategy::DynamicPool, 1.0, 50.0);
        s.behavior.weights.paid_without_queueing = -1;
        s.behavior.weights.exit_before_finding = -1;
        s.behavior.weights.help_completed = -1;
        s.behavior.weights.immediate_help = 0;
        s.behavior.weights.refund_granted = -1;
        let out = Simulation::new(s).run().unwrap();
        assert!(out.summary.terminated);
        assert_eq!(out.summary.last_day, 2);
        assert_eq!(out.records.len(), 1);
    }
}
