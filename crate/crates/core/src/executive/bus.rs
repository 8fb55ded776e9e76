use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Envelope, Message};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BusConfig {
    pub latency_ticks: u64,
    pub drop_probability: f64,
    /// Ticks before an undelivered reliable envelope is sent again.
    pub retransmit_ticks: u64,
}

impl Default for BusConfig {
    fn default() -> Self {
        BusConfig {
            latency_ticks: 2,
            drop_probability: 0.0,
            retransmit_ticks: 10,
        }
    }
}

/// Half-open tick interval during which an agent can neither send nor receive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dropout {
    pub agent: String,
    pub from_tick: u64,
    pub to_tick: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BusStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub retransmitted: u64,
    pub duplicates: u64,
    pub malformed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BusEvent {
    Delivered { envelope: Envelope, attempt: u32 },
    Dropped { msg_id: u64, to: String, attempt: u32, will_retry: bool },
}

#[derive(Debug, Clone)]
struct InFlight {
    due: u64,
    order: u64,
    wire: String,
    to: String,
    from: String,
    msg_id: u64,
    reliable: bool,
    attempt: u32,
}

/// In-process broker with fixed latency, seeded loss and link-level
/// retransmission of reliable envelopes. Envelopes travel as JSON text.
#[derive(Debug, Clone)]
pub struct Bus {
    pub config: BusConfig,
    rng: ChaCha8Rng,
    queue: Vec<InFlight>,
    next_order: u64,
    next_msg_id: u64,
    pub dropouts: Vec<Dropout>,
    pub stats: BusStats,
}

impl Bus {
    pub fn new(config: BusConfig, seed: u64) -> Self {
        Bus {
            config,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0xB005_0000_0000_0001),
            queue: Vec::new(),
            next_order: 0,
            next_msg_id: 1,
            dropouts: Vec::new(),
            stats: BusStats::default(),
        }
    }

    pub fn next_msg_id(&mut self) -> u64 {
        let id = self.next_msg_id;
        self.next_msg_id += 1;
        id
    }

    fn silenced(&self, agent: &str, tick: u64) -> bool {
        self.dropouts
            .iter()
            .any(|d| d.agent == agent && (d.from_tick..d.to_tick).contains(&tick))
    }

    /// Queues an envelope sent at `tick`; assigns a message id if it has none.
    pub fn send(&mut self, mut env: Envelope, tick: u64) -> u64 {
        if env.msg_id == 0 {
            env.msg_id = self.next_msg_id();
        }
        self.stats.sent += 1;
        let wire = serde_json::to_string(&env).expect("envelope serialises");
        let order = self.next_order;
        self.next_order += 1;
        self.queue.push(InFlight {
            due: tick + self.config.latency_ticks.max(1),
            order,
            wire,
            to: env.to.clone(),
            from: env.from.clone(),
            msg_id: env.msg_id,
            reliable: env.reliable,
            attempt: 1,
        });
        env.msg_id
    }

    /// Everything due at or before `tick`, in send order.
    pub fn deliver(&mut self, tick: u64) -> Vec<BusEvent> {
        let (mut due, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.queue).into_iter().partition(|m| m.due <= tick);
        self.queue = rest;
        due.sort_by_key(|m| (m.due, m.order));
        let mut out = Vec::new();
        for m in due {
            let lost = self.rng.random::<f64>() < self.config.drop_probability
                || self.silenced(&m.from, tick)
                || (m.to != super::BROADCAST && self.silenced(&m.to, tick));
            if lost {
                self.stats.dropped += 1;
                out.push(BusEvent::Dropped {
                    msg_id: m.msg_id,
                    to: m.to.clone(),
                    attempt: m.attempt,
                    will_retry: m.reliable,
                });
                if m.reliable {
                    self.stats.retransmitted += 1;
                    let order = self.next_order;
                    self.next_order += 1;
                    self.queue.push(InFlight {
                        due: tick + self.config.retransmit_ticks.max(1),
                        order,
                        attempt: m.attempt + 1,
                        ..m
                    });
                }
                continue;
            }
            match serde_json::from_str::<Envelope>(&m.wire) {
                Ok(envelope) => {
                    self.stats.delivered += 1;
                    // a lost acknowledgement makes the sender retransmit a duplicate
                    if m.reliable && self.rng.random::<f64>() < self.config.drop_probability {
                        self.stats.duplicates += 1;
                        let order = self.next_order;
                        self.next_order += 1;
                        self.queue.push(InFlight {
                            due: tick + self.config.retransmit_ticks.max(1),
                            order,
                            attempt: m.attempt + 1,
                            ..m.clone()
                        });
                    }
                    out.push(BusEvent::Delivered {
                        envelope,
                        attempt: m.attempt,
                    });
                }
                Err(_) => self.stats.malformed += 1,
            }
        }
        out
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    /// Injects raw wire text, for exercising malformed-message handling.
    pub fn send_raw(&mut self, from: &str, to: &str, wire: String, tick: u64) {
        let order = self.next_order;
        self.next_order += 1;
        self.stats.sent += 1;
        self.queue.push(InFlight {
            due: tick + self.config.latency_ticks.max(1),
            order,
            wire,
            to: to.to_string(),
            from: from.to_string(),
            msg_id: 0,
            reliable: false,
            attempt: 1,
        });
    }
}

/// Receiver-side de-duplication of reliable envelopes and goals.
#[derive(Debug, Clone, Default)]
pub struct Dedupe {
    seen_msgs: std::collections::BTreeSet<u64>,
    seen_goals: std::collections::BTreeSet<String>,
}

impl Dedupe {
    /// True the first time an envelope (by msg id, and by goal id for goals) is seen.
    pub fn first_time(&mut self, env: &Envelope) -> bool {
        if env.reliable && !self.seen_msgs.insert(env.msg_id) {
            return false;
        }
        if let Message::Goal(g) = &env.message {
            return self.seen_goals.insert(g.goal_id.clone());
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executive::{ObservationKind, ObservationMsg};

    fn env(reliable: bool) -> Envelope {
        Envelope {
            msg_id: 0,
            from: "a".into(),
            to: "b".into(),
            reliable,
            message: Message::Observation(ObservationMsg {
                source: "a".into(),
                tick: 0,
                kind: ObservationKind::Heartbeat,
                payload: serde_json::Value::Null,
            }),
        }
    }

    #[test]
    fn latency_applies() {
        let mut bus = Bus::new(BusConfig::default(), 1);
        bus.send(env(false), 10);
        assert!(bus.deliver(11).is_empty());
        assert_eq!(bus.deliver(12).len(), 1);
    }

    #[test]
    fn reliable_survives_heavy_loss() {
        let mut bus = Bus::new(
            BusConfig {
                drop_probability: 0.8,
                ..Default::default()
            },
            7,
        );
        bus.send(env(true), 0);
        let mut got = false;
        for t in 1..2000 {
            if bus.deliver(t).iter().any(|e| matches!(e, BusEvent::Delivered { .. })) {
                got = true;
                break;
            }
        }
        assert!(got);
    }

    #[test]
    fn dropout_silences_agent() {
        let mut bus = Bus::new(BusConfig::default(), 1);
        bus.dropouts.push(Dropout {
            agent: "a".into(),
            from_tick: 0,
            to_tick: 100,
        });
        bus.send(env(false), 5);
        assert!(matches!(bus.deliver(7)[0], BusEvent::Dropped { .. }));
    }

    #[test]
    fn malformed_counted() {
        let mut bus = Bus::new(BusConfig::default(), 1);
        bus.send_raw("a", "b", "{not json".into(), 0);
        assert!(bus.deliver(5).is_empty());
        assert_eq!(bus.stats.malformed, 1);
    }

    #[test]
    fn dedupe_by_goal_id() {
        use crate::executive::{AutonomyLevel, GoalKind, GoalMsg};
        let g = |id: u64| Envelope {
            msg_id: id,
            from: "c".into(),
            to: "l".into(),
            reliable: true,
            message: Message::Goal(GoalMsg {
                goal_id: "g1".into(),
                issuer: "c".into(),
                target: "l".into(),
                level: AutonomyLevel::E4,
                kind: GoalKind::ReturnToBase,
                params: Default::default(),
                priority: 0,
            }),
        };
        let mut d = Dedupe::default();
        assert!(d.first_time(&g(1)));
        assert!(!d.first_time(&g(1)));
        assert!(!d.first_time(&g(2)));
    }
}
