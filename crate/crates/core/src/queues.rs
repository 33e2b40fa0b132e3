//! The department's queueing system: one FIFO line per service kind, with
//! patience deadlines and renege accounting.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::agents::{CustomerId, ModelError, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceKind {
    Pay,
    NormalHelp,
    ExpertHelp,
    Refund,
}

impl ServiceKind {
    /// Column order of the monitored queues in daily output.
    pub const ALL: [ServiceKind; 4] = [
        ServiceKind::Pay,
        ServiceKind::NormalHelp,
        ServiceKind::ExpertHelp,
        ServiceKind::Refund,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn column_prefix(self) -> &'static str {
        match self {
            ServiceKind::Pay => "q_cashier",
            ServiceKind::NormalHelp => "q_normal",
            ServiceKind::ExpertHelp => "q_expert",
            ServiceKind::Refund => "q_refund",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waiting {
    pub customer: CustomerId,
    pub enqueued_at: f64,
    pub deadline: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueCounters {
    pub entered: u64,
    pub reneged: u64,
    pub served: u64,
    pub quick_exited: u64,
}

#[derive(Debug, Clone)]
pub struct ServiceQueue {
    pub kind: ServiceKind,
    waiting: VecDeque<Waiting>,
    pub counters: QueueCounters,
}

impl ServiceQueue {
    pub fn new(kind: ServiceKind) -> Self {
        Self {
            kind,
            waiting: VecDeque::new(),
            counters: QueueCounters::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.waiting.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waiting.is_empty()
    }

    pub fn waiting(&self) -> impl Iterator<Item = &Waiting> {
        self.waiting.iter()
    }

    fn remove(&mut self, customer: CustomerId) -> Option<Waiting> {
        let pos = self.waiting.iter().position(|w| w.customer == customer)?;
        self.waiting.remove(pos)
    }

    /// `entered == served + reneged + waiting + quick_exited`
    pub fn is_balanced(&self) -> bool {
        let c = &self.counters;
        c.entered == c.served + c.reneged + self.waiting.len() as u64 + c.quick_exited
    }
}

/// Result of offering a free server to a queue.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dispatch {
    pub served: Option<Waiting>,
    /// Customers whose deadline had already passed; removed as reneges.
    pub reneged: Vec<CustomerId>,
}

/// All four monitored queues. A customer is in at most one of them.
#[derive(Debug, Clone)]
pub struct QueueSystem {
    queues: [ServiceQueue; 4],
    membership: HashMap<CustomerId, ServiceKind>,
}

impl Default for QueueSystem {
    fn default() -> Self {
        Self::new()
    }
}

impl QueueSystem {
    pub fn new() -> Self {
        Self {
            queues: ServiceKind::ALL.map(ServiceQueue::new),
            membership: HashMap::new(),
        }
    }

    pub fn queue(&self, kind: ServiceKind) -> &ServiceQueue {
        &self.queues[kind.index()]
    }

    pub fn queues(&self) -> &[ServiceQueue; 4] {
        &self.queues
    }

    pub fn queue_of(&self, customer: CustomerId) -> Option<ServiceKind> {
        self.membership.get(&customer).copied()
    }

    pub fn total_waiting(&self) -> usize {
        self.membership.len()
    }

    /// Adds a customer to the back of `kind`'s line and returns the patience
    /// deadline. The caller arms the patience timer.
    pub fn enqueue(&mut self, kind: ServiceKind, customer: CustomerId, now: f64, patience: f64) -> Result<f64, ModelError> {
        if self.membership.contains_key(&customer) {
            return Err(ModelError::DoubleEnqueue(customer));
        }
        let deadline = now + patience;
        let q = &mut self.queues[kind.index()];
        q.waiting.push_back(Waiting {
            customer,
            enqueued_at: now,
            deadline,
        });
        q.counters.entered += 1;
        self.membership.insert(customer, kind);
        Ok(deadline)
    }

    /// Removes a customer who lost patience.
    pub fn renege(&mut self, customer: CustomerId) -> Option<ServiceKind> {
        let kind = self.membership.remove(&customer)?;
        let q = &mut self.queues[kind.index()];
        q.remove(customer).expect("membership and queue contents agree");
        q.counters.reneged += 1;
        Some(kind)
    }

    /// Removes a customer sent home at closing time.
    pub fn quick_exit(&mut self, customer: CustomerId) -> Option<ServiceKind> {
        let kind = self.membership.remove(&customer)?;
        let q = &mut self.queues[kind.index()];
        q.remove(customer).expect("membership and queue contents agree");
        q.counters.quick_exited += 1;
        Some(kind)
    }

    /// Pairs the head of `kind`'s line with a free server of role `role`.
    ///
    /// Waiting customers whose deadline is strictly before `now` renege first.
    /// A deadline equal to `now` still gets served.
    pub fn dispatch(&mut self, kind: ServiceKind, role: Role, now: f64) -> Dispatch {
        let mut out = Dispatch::default();
        if !role.can_serve(kind) {
            return out;
        }
        let q = &mut self.queues[kind.index()];
        while let Some(head) = q.waiting.pop_front() {
            self.membership.remove(&head.customer);
            if head.deadline < now {
                q.counters.reneged += 1;
                out.reneged.push(head.customer);
            } else {
                q.counters.served += 1;
                out.served = Some(head);
                break;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fifo_service_order() {
        let mut qs = QueueSystem::new();
        qs.enqueue(ServiceKind::Pay, 1, 0.0, 10.0).unwrap();
        qs.enqueue(ServiceKind::Pay, 2, 1.0, 10.0).unwrap();
        assert_eq!(qs.dispatch(ServiceKind::Pay, Role::Cashier, 2.0).served.unwrap().customer, 1);
        assert_eq!(qs.dispatch(ServiceKind::Pay, Role::Cashier, 3.0).served.unwrap().customer, 2);
        assert!(qs.dispatch(ServiceKind::Pay, Role::Cashier, 4.0).served.is_none());
        assert!(qs.queue(ServiceKind::Pay).is_balanced());
    }

    #[test]
    fn double_enqueue_rejected() {
        let mut qs = QueueSystem::new();
        qs.enqueue(ServiceKind::NormalHelp, 4, 0.0, 5.0).unwrap();
        assert_eq!(qs.enqueue(ServiceKind::Pay, 4, 0.0, 5.0), Err(ModelError::DoubleEnqueue(4)));
    }

    #[test]
    fn renege_counts() {
        let mut qs = QueueSystem::new();
        qs.enqueue(ServiceKind::ExpertHelp, 9, 0.0, 5.0).unwrap();
        assert_eq!(qs.renege(9), Some(ServiceKind::ExpertHelp));
        assert_eq!(qs.renege(9), None);
        let c = qs.queue(ServiceKind::ExpertHelp).counters;
        assert_eq!((c.entered, c.reneged), (1, 1));
    }

    #[test]
    fn expired_head_reneges_before_next_is_served() {
        let mut qs = QueueSystem::new();
        qs.enqueue(ServiceKind::Pay, 1, 0.0, 2.0).unwrap();
        qs.enqueue(ServiceKind::Pay, 2, 0.0, 9.0).unwrap();
        let d = qs.dispatch(ServiceKind::Pay, Role::Cashier, 3.0);
        assert_eq!(d.reneged, vec![1]);
        assert_eq!(d.served.unwrap().customer, 2);
        // deadline equal to now: service wins
        qs.enqueue(ServiceKind::Pay, 3, 3.0, 2.0).unwrap();
        let d = qs.dispatch(ServiceKind::Pay, Role::Cashier, 5.0);
        assert!(d.reneged.is_empty());
        assert_eq!(d.served.unwrap().customer, 3);
    }

    #[test]
    fn role_gates_dispatch() {
        let mut qs = QueueSystem::new();
        qs.enqueue(ServiceKind::ExpertHelp, 1, 0.0, 5.0).unwrap();
        assert!(qs
            .dispatch(ServiceKind::ExpertHelp, Role::NormalAdvisor, 1.0)
            .served
            .is_none());
        assert_eq!(
            qs.dispatch(ServiceKind::ExpertHelp, Role::GenericPartTimer, 1.0)
                .served
                .unwrap()
                .customer,
            1
        );
        assert!(qs
            .dispatch(ServiceKind::ExpertHelp, Role::GenericPartTimer, 1.0)
            .served
            .is_none());
    }

    #[derive(Debug, Clone)]
    enum Op {
        Enqueue(u8, u32, f64),
        Renege(u32),
        Quick(u32),
        Dispatch(u8, f64),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (0u8..4, 0u32..12, 0.0f64..20.0).prop_map(|(k, c, p)| Op::Enqueue(k, c, p)),
            (0u32..12).prop_map(Op::Renege),
            (0u32..12).prop_map(Op::Quick),
            (0u8..4, 0.0f64..5.0).prop_map(|(k, dt)| Op::Dispatch(k, dt)),
        ]
    }

    proptest! {
        #[test]
        fn accounting_and_no_service_after_renege(ops in proptest::collection::vec(op(), 1..200)) {
            let mut qs = QueueSystem::new();
            let mut now = 0.0;
            let mut gone: std::collections::HashSet<u32> = Default::default();
            for op in ops {
                match op {
                    Op::Enqueue(k, c, p) => {
                        if qs.enqueue(ServiceKind::ALL[k as usize], c, now, p).is_ok() {
                            gone.remove(&c);
                        }
                    }
                    Op::Renege(c) => { if qs.renege(c).is_some() { gone.insert(c); } }
                    Op::Quick(c) => { qs.quick_exit(c); }
                    Op::Dispatch(k, dt) => {
                        now += dt;
                        let d = qs.dispatch(ServiceKind::ALL[k as usize], Role::GenericPartTimer, now);
                        for r in &d.reneged { gone.insert(*r); }
                        if let Some(w) = d.served {
                            prop_assert!(!gone.contains(&w.customer));
                            prop_assert!(w.deadline >= now);
                        }
                    }
                }
                let waiting: usize = qs.queues().iter().map(|q| q.len()).sum();
                prop_assert_eq!(waiting, qs.total_waiting());
                for q in qs.queues() {
                    prop_assert!(q.is_balanced());
                }
            }
        }
    }
}
