use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscalationPhase {
    Nominal,
    AlertSent,
    ControlNotified,
}

impl EscalationPhase {
    pub const ALL: [EscalationPhase; 3] = [
        EscalationPhase::Nominal,
        EscalationPhase::AlertSent,
        EscalationPhase::ControlNotified,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmergencyKind {
    AstronautFall,
    DeviationDetected,
    CommsLost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EscalationEvent {
    Emergency { kind: EmergencyKind },
    ReplyOk,
    ReplyHelp,
    /// Clock advance; fires the acknowledgement timeout.
    Tick,
    /// Operator reset.
    Reset,
}

impl EscalationEvent {
    pub const ALL: [EscalationEvent; 7] = [
        EscalationEvent::Emergency {
            kind: EmergencyKind::AstronautFall,
        },
        EscalationEvent::Emergency {
            kind: EmergencyKind::DeviationDetected,
        },
        EscalationEvent::Emergency {
            kind: EmergencyKind::CommsLost,
        },
        EscalationEvent::ReplyOk,
        EscalationEvent::ReplyHelp,
        EscalationEvent::Tick,
        EscalationEvent::Reset,
    ];
}

/// Side effect requested by a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum EscalationAction {
    AlertAstronaut { cause: EmergencyKind },
    NotifyControl { cause: EmergencyKind, help: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EscalationState {
    pub phase: EscalationPhase,
    pub subject: String,
    pub alert_tick: Option<u64>,
    pub cause: Option<EmergencyKind>,
    pub ack_timeout_ticks: u64,
}

impl EscalationState {
    pub fn new(subject: impl Into<String>, ack_timeout_ticks: u64) -> Self {
        EscalationState {
            phase: EscalationPhase::Nominal,
            subject: subject.into(),
            alert_tick: None,
            cause: None,
            ack_timeout_ticks,
        }
    }
}

/// Total transition function. Every (phase, event) pair has an outcome;
/// unlisted pairs keep the state.
pub fn escalate(
    state: &EscalationState,
    event: EscalationEvent,
    tick: u64,
) -> (EscalationState, Option<EscalationAction>) {
    use EscalationEvent as E;
    use EscalationPhase as P;
    let mut next = state.clone();
    let cause = state.cause.unwrap_or(EmergencyKind::AstronautFall);
    let action = match (state.phase, event) {
        (P::Nominal, E::Emergency { kind }) => {
            next.phase = P::AlertSent;
            next.alert_tick = Some(tick);
            next.cause = Some(kind);
            Some(EscalationAction::AlertAstronaut { cause: kind })
        }
        (P::AlertSent, E::ReplyOk) | (P::AlertSent, E::Reset) => {
            next.phase = P::Nominal;
            next.alert_tick = None;
            next.cause = None;
            None
        }
        (P::AlertSent, E::ReplyHelp) => {
            next.phase = P::ControlNotified;
            Some(EscalationAction::NotifyControl { cause, help: true })
        }
        (P::AlertSent, E::Tick) => {
            let since = state.alert_tick.unwrap_or(tick);
            if tick.saturating_sub(since) >= state.ack_timeout_ticks {
                next.phase = P::ControlNotified;
                Some(EscalationAction::NotifyControl { cause, help: false })
            } else {
                None
            }
        }
        (P::ControlNotified, E::Reset) => {
            next.phase = P::Nominal;
            next.alert_tick = None;
            next.cause = None;
            None
        }
        (P::Nominal, E::ReplyOk | E::ReplyHelp | E::Tick | E::Reset)
        | (P::AlertSent, E::Emergency { .. })
        | (P::ControlNotified, E::Emergency { .. } | E::ReplyOk | E::ReplyHelp | E::Tick) => None,
    };
    (next, action)
}
