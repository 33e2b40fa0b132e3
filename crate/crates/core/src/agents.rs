//! Customer and staff agents.
//!
//! The customer is the active party: [`customer_statechart_step`] advances one
//! customer by one event and tells the engine what to do next (arm a timer,
//! request a service, or leave). Staff members are passive servers that are
//! claimed by [`staff_serve`] and released when the customer moves on.

use serde::{Deserialize, Serialize};

use crate::behavior::{
    bernoulli, correct_threshold, correct_triangular, sample_triangular, CustomerType, CustomerTypeProfile, DelaySense,
    TriangularParams, UniformSource,
};
use crate::queues::ServiceKind;

pub type CustomerId = u32;
pub type StaffId = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    Purchase,
    Refund,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    AfterPurchase,
    BeforeNormalHelp,
    BeforeExpertHelp,
    WhileWaitingToPay,
    BeforeFindingAnything,
    RefundOnly,
}

impl ExitReason {
    pub const ALL: [ExitReason; 6] = [
        ExitReason::AfterPurchase,
        ExitReason::BeforeNormalHelp,
        ExitReason::BeforeExpertHelp,
        ExitReason::WhileWaitingToPay,
        ExitReason::BeforeFindingAnything,
        ExitReason::RefundOnly,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn column(self) -> &'static str {
        match self {
            ExitReason::AfterPurchase => "exit_after_purchase",
            ExitReason::BeforeNormalHelp => "exit_before_normal_help",
            ExitReason::BeforeExpertHelp => "exit_before_expert_help",
            ExitReason::WhileWaitingToPay => "exit_while_waiting_to_pay",
            ExitReason::BeforeFindingAnything => "exit_before_finding_anything",
            ExitReason::RefundOnly => "exit_refund_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CustomerState {
    InPool,
    Entering,
    Browsing,
    QueueNormalHelp,
    GettingNormalHelp,
    QueueExpertHelp,
    GettingExpertHelp,
    QueuePay,
    Paying,
    QueueRefund,
    RefundProcessing,
    Exited(ExitReason),
}

impl CustomerState {
    /// The service a customer in a request/queue state is waiting for.
    pub fn awaited_service(self) -> Option<ServiceKind> {
        match self {
            CustomerState::QueueNormalHelp => Some(ServiceKind::NormalHelp),
            CustomerState::QueueExpertHelp => Some(ServiceKind::ExpertHelp),
            CustomerState::QueuePay => Some(ServiceKind::Pay),
            CustomerState::QueueRefund => Some(ServiceKind::Refund),
            _ => None,
        }
    }

    /// States in which a staff member is held.
    pub fn is_being_served(self) -> bool {
        matches!(
            self,
            CustomerState::GettingNormalHelp
                | CustomerState::GettingExpertHelp
                | CustomerState::Paying
                | CustomerState::RefundProcessing
        )
    }

    pub fn is_inside(self) -> bool {
        !matches!(self, CustomerState::InPool | CustomerState::Exited(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Satisfaction {
    Satisfied,
    Neutral,
    Dissatisfied,
}

impl Satisfaction {
    pub fn index(self) -> usize {
        match self {
            Satisfaction::Satisfied => 0,
            Satisfaction::Neutral => 1,
            Satisfaction::Dissatisfied => 2,
        }
    }
}

pub fn classify_visit(score: i64) -> Satisfaction {
    match score.signum() {
        1 => Satisfaction::Satisfied,
        0 => Satisfaction::Neutral,
        _ => Satisfaction::Dissatisfied,
    }
}

#[derive(Debug, Clone)]
pub struct CustomerAgent {
    pub id: CustomerId,
    pub profile: CustomerTypeProfile,
    /// Sum of all completed visit scores plus any word-of-mouth credit.
    pub lifetime_score: i64,
    pub visit_score: i64,
    pub visits_made: u32,
    pub state: CustomerState,
    pub goal: Goal,
    /// False once the customer has been permanently removed from the population.
    pub alive: bool,
    queued_at_till: bool,
    /// Bumped on every transition; timers armed under an older token are stale.
    pub(crate) token: u32,
    pub(crate) serving_staff: Option<usize>,
}

impl CustomerAgent {
    pub fn new(id: CustomerId, customer_type: CustomerType) -> Self {
        Self::with_profile(id, customer_type.profile())
    }

    pub fn with_profile(id: CustomerId, profile: CustomerTypeProfile) -> Self {
        Self {
            id,
            profile,
            lifetime_score: 0,
            visit_score: 0,
            visits_made: 0,
            state: CustomerState::InPool,
            goal: Goal::Purchase,
            alive: true,
            queued_at_till: false,
            token: 0,
            serving_staff: None,
        }
    }

    /// A customer attracted by positive word of mouth. The credit is an
    /// attitude towards the shop, so it seeds the lifetime score only; every
    /// visit, the first included, is scored from zero.
    pub fn word_of_mouth_recruit(id: CustomerId, customer_type: CustomerType, credit: i64) -> Self {
        let mut agent = Self::new(id, customer_type);
        agent.lifetime_score = credit;
        agent
    }

    pub fn customer_type(&self) -> CustomerType {
        self.profile.customer_type
    }

    pub fn begin_visit(&mut self) {
        self.visits_made += 1;
        self.visit_score = 0;
        self.queued_at_till = false;
        self.goal = Goal::Purchase;
        self.state = CustomerState::Entering;
        self.serving_staff = None;
        self.bump();
    }

    /// Zeroes a positive score (negative word of mouth on a loyal customer).
    pub fn neutralize(&mut self) {
        self.lifetime_score = 0;
    }

    pub(crate) fn bump(&mut self) {
        self.token = self.token.wrapping_add(1);
    }
}

/// Transitions that carry a satisfaction weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightEvent {
    ImmediateHelp,
    HelpCompleted,
    RenegeQueue,
    RenegePayQueue,
    PaidWithoutQueueing,
    PaidAfterQueueing,
    RefundGranted,
    RefundDenied,
    ExitBeforeFinding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatisfactionWeights {
    pub immediate_help: i32,
    pub help_completed: i32,
    pub renege_any_queue: i32,
    /// Overrides `renege_any_queue` for the till; `null` means no override.
    pub renege_pay_queue: Option<i32>,
    pub paid_without_queueing: i32,
    pub paid_after_queueing: i32,
    pub refund_granted: i32,
    pub refund_denied: i32,
    pub exit_before_finding: i32,
}

impl Default for SatisfactionWeights {
    fn default() -> Self {
        Self {
            immediate_help: 2,
            help_completed: 4,
            renege_any_queue: -2,
            renege_pay_queue: Some(-3),
            paid_without_queueing: 1,
            paid_after_queueing: 0,
            refund_granted: 2,
            refund_denied: -3,
            exit_before_finding: 0,
        }
    }
}

impl SatisfactionWeights {
    pub fn weight(&self, event: WeightEvent) -> i32 {
        match event {
            WeightEvent::ImmediateHelp => self.immediate_help,
            WeightEvent::HelpCompleted => self.help_completed,
            WeightEvent::RenegeQueue => self.renege_any_queue,
            WeightEvent::RenegePayQueue => self.renege_pay_queue.unwrap_or(self.renege_any_queue),
            WeightEvent::PaidWithoutQueueing => self.paid_without_queueing,
            WeightEvent::PaidAfterQueueing => self.paid_after_queueing,
            WeightEvent::RefundGranted => self.refund_granted,
            WeightEvent::RefundDenied => self.refund_denied,
            WeightEvent::ExitBeforeFinding => self.exit_before_finding,
        }
    }
}

/// Decision probabilities, delay distributions and weights driving customers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorParams {
    pub p_buy_after_browse: f64,
    pub p_requires_help: f64,
    pub p_buy_after_help: f64,
    pub p_refund_goal: f64,
    pub p_escalate: f64,
    pub p_refund_grant: f64,
    pub p_refund_to_purchase: f64,
    pub browse: TriangularParams,
    pub normal_help: TriangularParams,
    pub expert_help: TriangularParams,
    pub patience: TriangularParams,
    pub payment: TriangularParams,
    pub refund_processing: TriangularParams,
    /// Apply the likelihood correction to queue patience.
    pub correct_delays: bool,
    pub weights: SatisfactionWeights,
}

impl BehaviorParams {
    pub fn probabilities(&self) -> [(&'static str, f64); 7] {
        [
            ("p_buy_after_browse", self.p_buy_after_browse),
            ("p_requires_help", self.p_requires_help),
            ("p_buy_after_help", self.p_buy_after_help),
            ("p_refund_goal", self.p_refund_goal),
            ("p_escalate", self.p_escalate),
            ("p_refund_grant", self.p_refund_grant),
            ("p_refund_to_purchase", self.p_refund_to_purchase),
        ]
    }

    fn patience_for(&self, profile: &CustomerTypeProfile) -> TriangularParams {
        if self.correct_delays {
            correct_triangular(self.patience, profile.likelihood_wait, DelaySense::LongerIsFavorable)
        } else {
            self.patience
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CustomerEvent {
    Entered,
    BrowseDone,
    /// The engine found no free compatible server.
    ServiceUnavailable,
    ServiceStarted {
        immediate: bool,
    },
    ServiceDone,
    Paid,
    RefundDecided,
    PatienceExpired,
    ClosingTime,
    /// End of the closing grace window: anyone still inside leaves now.
    GraceExpired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timer {
    BrowseDone,
    ServiceDone,
    Patience,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Followup {
    None,
    Schedule { after: f64, timer: Timer },
    Request(ServiceKind),
    Exit(ExitReason),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub new_state: CustomerState,
    pub delta: i32,
    pub weights: [Option<WeightEvent>; 2],
    pub followup: Followup,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("customer {customer}: event {event:?} is not defined in state {state:?}")]
    UnexpectedEvent {
        customer: CustomerId,
        state: CustomerState,
        event: CustomerEvent,
    },
    #[error("event scheduled in the past (at {at}, now {now})")]
    ScheduleInPast { at: f64, now: f64 },
    #[error("customer {0} enqueued twice")]
    DoubleEnqueue(CustomerId),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Whether the department is past closing time (no new service blocks open).
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub params: &'a BehaviorParams,
    pub closing: bool,
}

struct Outcome {
    state: CustomerState,
    weights: [Option<WeightEvent>; 2],
    followup: Followup,
}

impl Outcome {
    fn new(state: CustomerState, followup: Followup) -> Self {
        Self {
            state,
            weights: [None, None],
            followup,
        }
    }

    fn weighted(mut self, w: WeightEvent) -> Self {
        let slot = self
            .weights
            .iter_mut()
            .find(|s| s.is_none())
            .expect("at most two weights per step");
        *slot = Some(w);
        self
    }

    fn exit(reason: ExitReason) -> Self {
        Self::new(CustomerState::Exited(reason), Followup::Exit(reason))
    }
}

/// Advances `agent` by one event, applying the satisfaction delta to its
/// visit score. All randomness is drawn from `rng`.
pub fn customer_statechart_step(
    agent: &mut CustomerAgent,
    event: CustomerEvent,
    ctx: StepContext<'_>,
    rng: &mut dyn UniformSource,
) -> Result<StepOutcome, ModelError> {
    use CustomerEvent as E;
    use CustomerState as S;
    let p = ctx.params;
    let profile = agent.profile;

    let buy_decision = |rng: &mut dyn UniformSource, threshold: f64| -> Outcome {
        if bernoulli(correct_threshold(threshold, profile.likelihood_buy), rng) {
            Outcome::new(S::QueuePay, Followup::Request(ServiceKind::Pay))
        } else {
            Outcome::exit(ExitReason::BeforeFindingAnything).weighted(WeightEvent::ExitBeforeFinding)
        }
    };
    let browse = |rng: &mut dyn UniformSource| -> Outcome {
        Outcome::new(
            S::Browsing,
            Followup::Schedule {
                after: sample_triangular(&p.browse, rng),
                timer: Timer::BrowseDone,
            },
        )
    };
    let start_service = |rng: &mut dyn UniformSource, state: S, dist: &TriangularParams| -> Outcome {
        Outcome::new(
            state,
            Followup::Schedule {
                after: sample_triangular(dist, rng),
                timer: Timer::ServiceDone,
            },
        )
    };

    let outcome = match (agent.state, event) {
        (S::Entering, E::Entered) => {
            if bernoulli(correct_threshold(p.p_refund_goal, profile.likelihood_ask_refund), rng) {
                agent.goal = Goal::Refund;
                Outcome::new(S::QueueRefund, Followup::Request(ServiceKind::Refund))
            } else {
                agent.goal = Goal::Purchase;
                browse(rng)
            }
        }
        (S::Browsing, E::BrowseDone) => {
            if bernoulli(correct_threshold(p.p_requires_help, profile.likelihood_ask_help), rng) {
                Outcome::new(S::QueueNormalHelp, Followup::Request(ServiceKind::NormalHelp))
            } else {
                buy_decision(rng, p.p_buy_after_browse)
            }
        }
        (state, E::ServiceUnavailable) if state.awaited_service().is_some() => {
            if state == S::QueuePay {
                agent.queued_at_till = true;
            }
            Outcome::new(
                state,
                Followup::Schedule {
                    after: sample_triangular(&p.patience_for(&profile), rng),
                    timer: Timer::Patience,
                },
            )
        }
        (S::QueueNormalHelp, E::ServiceStarted { immediate }) => {
            let o = start_service(rng, S::GettingNormalHelp, &p.normal_help);
            if immediate {
                o.weighted(WeightEvent::ImmediateHelp)
            } else {
                o
            }
        }
        (S::QueueExpertHelp, E::ServiceStarted { immediate }) => {
            let o = start_service(rng, S::GettingExpertHelp, &p.expert_help);
            if immediate {
                o.weighted(WeightEvent::ImmediateHelp)
            } else {
                o
            }
        }
        (S::QueuePay, E::ServiceStarted { .. }) => start_service(rng, S::Paying, &p.payment),
        (S::QueueRefund, E::ServiceStarted { .. }) => start_service(rng, S::RefundProcessing, &p.refund_processing),
        (S::GettingNormalHelp, E::ServiceDone) => {
            if !ctx.closing && bernoulli(p.p_escalate, rng) {
                Outcome::new(S::QueueExpertHelp, Followup::Request(ServiceKind::ExpertHelp)).weighted(WeightEvent::HelpCompleted)
            } else {
                buy_decision(rng, p.p_buy_after_help).weighted(WeightEvent::HelpCompleted)
            }
        }
        (S::GettingExpertHelp, E::ServiceDone) => buy_decision(rng, p.p_buy_after_help).weighted(WeightEvent::HelpCompleted),
        (S::Paying, E::Paid) => {
            let w = if agent.queued_at_till {
                WeightEvent::PaidAfterQueueing
            } else {
                WeightEvent::PaidWithoutQueueing
            };
            Outcome::exit(ExitReason::AfterPurchase).weighted(w)
        }
        (S::RefundProcessing, E::RefundDecided) => {
            if bernoulli(p.p_refund_grant, rng) {
                if !ctx.closing && bernoulli(p.p_refund_to_purchase, rng) {
                    agent.goal = Goal::Purchase;
                    browse(rng).weighted(WeightEvent::RefundGranted)
                } else {
                    Outcome::exit(ExitReason::RefundOnly).weighted(WeightEvent::RefundGranted)
                }
            } else {
                Outcome::exit(ExitReason::RefundOnly).weighted(WeightEvent::RefundDenied)
            }
        }
        (S::QueueNormalHelp, E::PatienceExpired) => {
            Outcome::exit(ExitReason::BeforeNormalHelp).weighted(WeightEvent::RenegeQueue)
        }
        (S::QueueExpertHelp, E::PatienceExpired) => {
            Outcome::exit(ExitReason::BeforeExpertHelp).weighted(WeightEvent::RenegeQueue)
        }
        (S::QueuePay, E::PatienceExpired) => Outcome::exit(ExitReason::WhileWaitingToPay).weighted(WeightEvent::RenegePayQueue),
        (S::QueueRefund, E::PatienceExpired) => Outcome::exit(ExitReason::RefundOnly).weighted(WeightEvent::RenegeQueue),
        // Quick exit: browsers and help seekers leave on the spot; anyone
        // paying, being served or dealing with a refund carries on.
        (S::Browsing, E::ClosingTime) => Outcome::exit(ExitReason::BeforeFindingAnything),
        (S::QueueNormalHelp, E::ClosingTime) => Outcome::exit(ExitReason::BeforeNormalHelp),
        (S::QueueExpertHelp, E::ClosingTime) => Outcome::exit(ExitReason::BeforeExpertHelp),
        (
            state
            @ (S::GettingNormalHelp | S::GettingExpertHelp | S::QueuePay | S::Paying | S::QueueRefund | S::RefundProcessing),
            E::ClosingTime,
        ) => Outcome::new(state, Followup::None),
        (S::GettingNormalHelp | S::GettingExpertHelp, E::GraceExpired) => Outcome::exit(ExitReason::BeforeFindingAnything),
        (S::QueuePay, E::GraceExpired) => Outcome::exit(ExitReason::WhileWaitingToPay),
        (S::Paying, E::GraceExpired) => {
            let w = if agent.queued_at_till {
                WeightEvent::PaidAfterQueueing
            } else {
                WeightEvent::PaidWithoutQueueing
            };
            Outcome::exit(ExitReason::AfterPurchase).weighted(w)
        }
        (S::QueueRefund | S::RefundProcessing, E::GraceExpired) => Outcome::exit(ExitReason::RefundOnly),
        (state, event) => {
            return Err(ModelError::UnexpectedEvent {
                customer: agent.id,
                state,
                event,
            })
        }
    };

    let delta: i32 = outcome.weights.iter().flatten().map(|w| p.weights.weight(*w)).sum();
    agent.visit_score += i64::from(delta);
    agent.state = outcome.state;
    agent.bump();
    Ok(StepOutcome {
        new_state: outcome.state,
        delta,
        weights: outcome.weights,
        followup: outcome.followup,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Cashier,
    NormalAdvisor,
    ExpertAdvisor,
    GenericPartTimer,
}

impl Role {
    pub const FIXED: [Role; 3] = [Role::Cashier, Role::NormalAdvisor, Role::ExpertAdvisor];

    pub fn can_serve(self, kind: ServiceKind) -> bool {
        match self {
            Role::GenericPartTimer => true,
            Role::Cashier => matches!(kind, ServiceKind::Pay | ServiceKind::Refund),
            Role::NormalAdvisor => kind == ServiceKind::NormalHelp,
            Role::ExpertAdvisor => matches!(kind, ServiceKind::NormalHelp | ServiceKind::ExpertHelp),
        }
    }

    /// Queues a freed staff member looks at, in order.
    pub fn service_order(self) -> &'static [ServiceKind] {
        use ServiceKind::*;
        match self {
            Role::Cashier => &[Pay, Refund],
            Role::NormalAdvisor => &[NormalHelp],
            Role::ExpertAdvisor => &[ExpertHelp, NormalHelp],
            Role::GenericPartTimer => &[Pay, Refund, ExpertHelp, NormalHelp],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contract {
    FullTime,
    PartTime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaffMember {
    pub id: StaffId,
    pub role: Role,
    pub contract: Contract,
    pub busy: bool,
}

impl StaffMember {
    pub fn new(id: StaffId, role: Role, contract: Contract) -> Self {
        Self {
            id,
            role,
            contract,
            busy: false,
        }
    }

    pub fn release(&mut self) {
        self.busy = false;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceCompletion {
    pub staff: StaffId,
    pub customer: CustomerId,
    pub kind: ServiceKind,
    pub at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ServeRefused {
    #[error("staff member is busy")]
    Busy,
    #[error("staff role cannot provide this service")]
    Incompatible,
}

/// Claims `staff` for `customer` until `now + duration`.
pub fn staff_serve(
    staff: &mut StaffMember,
    customer: CustomerId,
    kind: ServiceKind,
    now: f64,
    duration: f64,
) -> Result<ServiceCompletion, ServeRefused> {
    if staff.busy {
        return Err(ServeRefused::Busy);
    }
    if !staff.role.can_serve(kind) {
        return Err(ServeRefused::Incompatible);
    }
    staff.busy = true;
    Ok(ServiceCompletion {
        staff: staff.id,
        customer,
        kind,
        at: now + duration,
    })
}
