use super::compile::{attr_value, ActionDef, CompiledContract, Cond, DateArg, Value};
use crate::diagnostic::{codes, Diagnostic};
use chrono::{NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObligationState {
    Created,
    InEffect,
    Suspended,
    Fulfilled,
    Violated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PowerState {
    Created,
    InEffect,
    Exerted,
    Expired,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContractState {
    InEffect,
    Fulfilled,
    Terminated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintState {
    Holding,
    Broken,
}

macro_rules! display_debug {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Debug::fmt(self, f)
            }
        }
    )*};
}
display_debug!(ObligationState, PowerState, ContractState, ConstraintState);

/// Three-valued truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    fn and(self, o: Truth) -> Truth {
        match (self, o) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }
    }

    fn or(self, o: Truth) -> Truth {
        match (self, o) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::False, Truth::False) => Truth::False,
            _ => Truth::Unknown,
        }
    }

    fn not(self) -> Truth {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }
}

pub const TIME_FORMAT: &str = "%Y-%m-%dT%H:%M";

/// Timestamps are kept at minute granularity.
pub fn parse_time(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    let t = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, TIME_FORMAT))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M"))
        .ok()
        .or_else(|| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
        })?;
    t.with_second(0)
}

pub fn format_time(t: NaiveDateTime) -> String {
    t.format(TIME_FORMAT).to_string()
}

pub(crate) mod minute {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &chrono::NaiveDateTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_time(*t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<chrono::NaiveDateTime, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_time(&s).ok_or_else(|| D::Error::custom(format!("bad timestamp `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventOccurrence {
    pub event: String,
    #[serde(with = "minute")]
    pub at: NaiveDateTime,
    pub attributes: BTreeMap<String, serde_json::Value>,
    #[serde(skip)]
    values: Vec<Value>,
    #[serde(skip)]
    index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transition {
    pub kind: &'static str,
    pub entity: String,
    pub from: String,
    pub to: String,
    pub reason: String,
}

/// Transitions caused by one operation, in the order they happened.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TransitionReport {
    #[serde(with = "minute")]
    pub at: NaiveDateTime,
    pub transitions: Vec<Transition>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Deadline {
    pub obligation: String,
    #[serde(with = "minute")]
    pub due: NaiveDateTime,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StatusSnapshot {
    pub contract: ContractState,
    #[serde(with = "minute")]
    pub clock: NaiveDateTime,
    pub obligations: BTreeMap<String, ObligationState>,
    pub powers: BTreeMap<String, PowerState>,
    pub constraints: BTreeMap<String, ConstraintState>,
    pub pending_deadlines: Vec<Deadline>,
    pub events_recorded: usize,
}

/// A running contract. All operations take `&mut self`; the caller provides
/// single-writer access.
#[derive(Clone, Debug)]
pub struct ContractInstance {
    contract: Arc<CompiledContract>,
    clock: NaiveDateTime,
    log: Vec<EventOccurrence>,
    /// `None` for imposable obligations not yet imposed.
    obligations: Vec<Option<ObligationState>>,
    powers: Vec<PowerState>,
    constraints: Vec<ConstraintState>,
    state: ContractState,
    opening: TransitionReport,
}

fn err(code: &str, message: String) -> Vec<Diagnostic> {
    vec![Diagnostic::unlocated(code, message)]
}

impl ContractInstance {
    /// Starts the contract at `start`; triggers that already hold take
    /// effect immediately (see [`Self::opening`]).
    pub fn new(contract: Arc<CompiledContract>, start: NaiveDateTime) -> Self {
        let obligations = contract
            .obligations
            .iter()
            .map(|o| o.imposed_by.is_none().then_some(ObligationState::Created))
            .collect();
        let clock = start.with_second(0).unwrap_or(start);
        let mut inst = ContractInstance {
            clock,
            log: Vec::new(),
            obligations,
            powers: vec![PowerState::Created; contract.powers.len()],
            constraints: vec![ConstraintState::Holding; contract.constraints.len()],
            state: ContractState::InEffect,
            contract,
            opening: TransitionReport { at: clock, transitions: Vec::new() },
        };
        let mut report = TransitionReport { at: clock, transitions: Vec::new() };
        inst.settle(&mut report);
        inst.opening = report;
        inst
    }

    /// Transitions that happened when the contract started.
    pub fn opening(&self) -> &TransitionReport {
        &self.opening
    }

    pub fn contract(&self) -> &Arc<CompiledContract> {
        &self.contract
    }

    pub fn clock(&self) -> NaiveDateTime {
        self.clock
    }

    pub fn state(&self) -> ContractState {
        self.state
    }

    pub fn log(&self) -> &[EventOccurrence] {
        &self.log
    }

    pub fn obligation_state(&self, id: &str) -> Option<ObligationState> {
        let i = self.contract.obligations.iter().position(|o| o.id == id)?;
        self.obligations[i]
    }

    pub fn power_state(&self, id: &str) -> Option<PowerState> {
        self.contract.power_index(id).map(|i| self.powers[i])
    }

    fn advance(&mut self, at: NaiveDateTime) -> Result<NaiveDateTime, Vec<Diagnostic>> {
        let at = at.with_second(0).unwrap_or(at);
        if at < self.clock {
            return Err(err(
                codes::TIME_REGRESSION,
                format!(
                    "time {} is before the current clock {}",
                    format_time(at),
                    format_time(self.clock)
                ),
            ));
        }
        Ok(at)
    }

    /// Records an event occurrence and settles every state machine.
    pub fn submit_event(
        &mut self,
        event: &str,
        at: NaiveDateTime,
        attributes: &serde_json::Map<String, serde_json::Value>,
    ) -> Result<TransitionReport, Vec<Diagnostic>> {
        let index = self
            .contract
            .event_index(event)
            .ok_or_else(|| err(codes::UNKNOWN_EVENT, format!("no event named `{event}`")))?;
        let def = &self.contract.events[index];
        let mut values = Vec::with_capacity(def.attributes.len());
        let mut problems = Vec::new();
        for (name, kind) in &def.attributes {
            match attributes.get(name).map(|v| attr_value(*kind, v)) {
                Some(Some(v)) => values.push(v),
                Some(None) => problems.push(format!("`{name}` must be a {}", kind.keyword())),
                None => problems.push(format!("`{name}` is missing")),
            }
        }
        for key in attributes.keys() {
            if !def.attributes.iter().any(|(n, _)| n == key) {
                problems.push(format!("`{key}` is not an attribute of {}", def.type_name));
            }
        }
        if !problems.is_empty() {
            return Err(err(
                codes::BAD_ATTRIBUTES,
                format!("event `{event}`: {}", problems.join("; ")),
            ));
        }
        let at = self.advance(at)?;

        self.clock = at;
        let mut report = TransitionReport { at, transitions: Vec::new() };
        if self.state == ContractState::InEffect {
            for (k, (first, then)) in self.contract.constraints.iter().enumerate() {
                if *then == index
                    && self.constraints[k] == ConstraintState::Holding
                    && !self.log.iter().any(|o| o.index == *first)
                {
                    self.constraints[k] = ConstraintState::Broken;
                    report.transitions.push(Transition {
                        kind: "constraint",
                        entity: self.constraint_name(k),
                        from: ConstraintState::Holding.to_string(),
                        to: ConstraintState::Broken.to_string(),
                        reason: format!(
                            "`{event}` happened before `{}`",
                            self.contract.events[*first].id
                        ),
                    });
                }
            }
        }
        self.log.push(EventOccurrence {
            event: event.to_owned(),
            at,
            attributes: attributes.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            values,
            index,
        });
        self.settle(&mut report);
        Ok(report)
    }

    /// Advances the clock and settles deadlines.
    pub fn tick(&mut self, at: NaiveDateTime) -> Result<TransitionReport, Vec<Diagnostic>> {
        let at = self.advance(at)?;
        self.clock = at;
        let mut report = TransitionReport { at, transitions: Vec::new() };
        self.settle(&mut report);
        Ok(report)
    }

    /// Exercises a power that is in effect.
    pub fn exert(&mut self, power: &str) -> Result<TransitionReport, Vec<Diagnostic>> {
        let i = self
            .contract
            .power_index(power)
            .ok_or_else(|| err(codes::UNKNOWN_POWER, format!("no power named `{power}`")))?;
        if self.powers[i] != PowerState::InEffect || self.state != ContractState::InEffect {
            return Err(err(
                codes::POWER_NOT_IN_EFFECT,
                format!("power `{power}` is {}, not InEffect", self.powers[i]),
            ));
        }
        let mut report = TransitionReport { at: self.clock, transitions: Vec::new() };
        self.set_power(i, PowerState::Exerted, "exerted".into(), &mut report);
        let reason = format!("exercise of `{power}`");
        match self.contract.powers[i].action.clone() {
            ActionDef::Suspend(targets) => {
                for o in targets {
                    if self.obligations[o] == Some(ObligationState::InEffect) {
                        self.set_obligation(o, ObligationState::Suspended, reason.clone(), &mut report);
                    }
                }
            }
            ActionDef::Resume(targets) => {
                for o in targets {
                    if self.obligations[o] == Some(ObligationState::Suspended) {
                        self.set_obligation(o, ObligationState::InEffect, reason.clone(), &mut report);
                    }
                }
            }
            ActionDef::Impose(o) => {
                if self.obligations[o].is_none() {
                    report.transitions.push(Transition {
                        kind: "obligation",
                        entity: self.contract.obligations[o].id.clone(),
                        from: "None".into(),
                        to: ObligationState::InEffect.to_string(),
                        reason: reason.clone(),
                    });
                    self.obligations[o] = Some(ObligationState::InEffect);
                }
            }
            ActionDef::Terminate => {
                for p in 0..self.powers.len() {
                    if self.powers[p] == PowerState::InEffect {
                        self.set_power(p, PowerState::Expired, "contract terminated".into(), &mut report);
                    }
                }
                self.set_contract(ContractState::Terminated, reason, &mut report);
            }
        }
        self.settle(&mut report);
        Ok(report)
    }

    pub fn status(&self) -> StatusSnapshot {
        let c = &self.contract;
        let mut pending: Vec<Deadline> = c
            .obligations
            .iter()
            .zip(&self.obligations)
            .filter(|(_, s)| **s == Some(ObligationState::InEffect))
            .filter_map(|(o, _)| {
                self.deadline(&o.consequent).map(|due| Deadline {
                    obligation: o.id.clone(),
                    due,
                })
            })
            .collect();
        pending.sort_by(|a, b| (a.due, &a.obligation).cmp(&(b.due, &b.obligation)));
        StatusSnapshot {
            contract: self.state,
            clock: self.clock,
            obligations: c
                .obligations
                .iter()
                .zip(&self.obligations)
                .filter_map(|(o, s)| s.map(|s| (o.id.clone(), s)))
                .collect(),
            powers: c
                .powers
                .iter()
                .zip(&self.powers)
                .map(|(p, s)| (p.id.clone(), *s))
                .collect(),
            constraints: (0..c.constraints.len())
                .map(|k| (self.constraint_name(k), self.constraints[k]))
                .collect(),
            pending_deadlines: if self.state == ContractState::InEffect { pending } else { Vec::new() },
            events_recorded: self.log.len(),
        }
    }

    fn constraint_name(&self, k: usize) -> String {
        let (a, b) = self.contract.constraints[k];
        format!("Precedes({}, {})", self.contract.events[a].id, self.contract.events[b].id)
    }

    fn first_occurrence(&self, event: usize) -> Option<NaiveDateTime> {
        self.log.iter().find(|o| o.index == event).map(|o| o.at)
    }

    /// Earliest instant at which some window in `c` closes, if known.
    fn deadline(&self, c: &Cond) -> Option<NaiveDateTime> {
        match c {
            Cond::Before(_, d) => Some(d.start()),
            Cond::Within(_, _, z) => Some(z.after()),
            Cond::WithinOf { anchor, span, .. } => self
                .first_occurrence(*anchor)
                .map(|t| span.add_to(t) + chrono::TimeDelta::minutes(1)),
            Cond::And(a, b) | Cond::Or(a, b) => match (self.deadline(a), self.deadline(b)) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            },
            Cond::Not(a) => self.deadline(a),
            _ => None,
        }
    }

    fn occurs(&self, event: usize, pred: impl Fn(&EventOccurrence) -> bool) -> bool {
        self.log.iter().any(|o| o.index == event && pred(o))
    }

    /// Evaluates a condition over the whole log at the current clock.
    pub(crate) fn eval(&self, c: &Cond) -> Truth {
        let known = |b: bool| if b { Truth::True } else { Truth::Unknown };
        match c {
            Cond::True => Truth::True,
            Cond::False => Truth::False,
            Cond::And(a, b) => self.eval(a).and(self.eval(b)),
            Cond::Or(a, b) => self.eval(a).or(self.eval(b)),
            Cond::Not(a) => self.eval(a).not(),
            Cond::Happens(e) => known(self.occurs(*e, |_| true)),
            Cond::Before(e, d) => {
                let end = d.start();
                if self.occurs(*e, |o| o.at < end) {
                    Truth::True
                } else if self.clock >= end {
                    Truth::False
                } else {
                    Truth::Unknown
                }
            }
            Cond::After(e, d) => {
                let start = d.after();
                known(self.occurs(*e, |o| o.at >= start))
            }
            Cond::Within(e, a, z) => {
                let (start, end) = (DateArg::start(a), z.after());
                if self.occurs(*e, |o| o.at >= start && o.at < end) {
                    Truth::True
                } else if self.clock >= end {
                    Truth::False
                } else {
                    Truth::Unknown
                }
            }
            Cond::WithinOf { event, anchor, span } => {
                let Some(ta) = self.first_occurrence(*anchor) else {
                    return Truth::Unknown;
                };
                let end = span.add_to(ta);
                if self.occurs(*event, |o| o.at >= ta && o.at <= end) {
                    Truth::True
                } else if self.clock > end {
                    Truth::False
                } else {
                    Truth::Unknown
                }
            }
            Cond::Violated(o) => match self.obligations[*o] {
                Some(ObligationState::Violated) => Truth::True,
                Some(ObligationState::Fulfilled) => Truth::False,
                _ => Truth::Unknown,
            },
            Cond::Fulfilled(o) => match self.obligations[*o] {
                Some(ObligationState::Fulfilled) => Truth::True,
                Some(ObligationState::Violated) => Truth::False,
                _ => Truth::Unknown,
            },
            Cond::Compare { event, attr, op, value } => known(self.occurs(*event, |o| {
                o.values[*attr]
                    .compare(&value.value)
                    .is_some_and(|ord| op.holds(ord))
            })),
        }
    }

    fn set_obligation(&mut self, i: usize, to: ObligationState, reason: String, r: &mut TransitionReport) {
        let from = self.obligations[i].expect("instantiated");
        self.obligations[i] = Some(to);
        r.transitions.push(Transition {
            kind: "obligation",
            entity: self.contract.obligations[i].id.clone(),
            from: from.to_string(),
            to: to.to_string(),
            reason,
        });
    }

    fn set_power(&mut self, i: usize, to: PowerState, reason: String, r: &mut TransitionReport) {
        let from = self.powers[i];
        self.powers[i] = to;
        r.transitions.push(Transition {
            kind: "power",
            entity: self.contract.powers[i].id.clone(),
            from: from.to_string(),
            to: to.to_string(),
            reason,
        });
    }

    fn set_contract(&mut self, to: ContractState, reason: String, r: &mut TransitionReport) {
        let from = self.state;
        self.state = to;
        r.transitions.push(Transition {
            kind: "contract",
            entity: self.contract.name.clone(),
            from: from.to_string(),
            to: to.to_string(),
            reason,
        });
    }

    /// Runs every state machine to a fixpoint at the current clock.
    fn settle(&mut self, r: &mut TransitionReport) {
        if self.state != ContractState::InEffect {
            return;
        }
        let contract = Arc::clone(&self.contract);
        loop {
            let mut changed = false;
            for (i, o) in contract.obligations.iter().enumerate() {
                if self.obligations[i] == Some(ObligationState::Created)
                    && self.eval(&o.trigger) == Truth::True
                {
                    self.set_obligation(i, ObligationState::InEffect, "trigger holds".into(), r);
                    changed = true;
                }
                if self.obligations[i] == Some(ObligationState::InEffect) {
                    let (to, why) = match self.eval(&o.consequent) {
                        Truth::True => (ObligationState::Fulfilled, "consequent satisfied"),
                        Truth::False => (ObligationState::Violated, "consequent can no longer be satisfied"),
                        Truth::Unknown => continue,
                    };
                    self.set_obligation(i, to, why.into(), r);
                    changed = true;
                }
            }
            for (i, p) in contract.powers.iter().enumerate() {
                if self.powers[i] == PowerState::Created && self.eval(&p.trigger) == Truth::True {
                    self.set_power(i, PowerState::InEffect, "trigger holds".into(), r);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let all_fulfilled = self
            .obligations
            .iter()
            .flatten()
            .all(|s| *s == ObligationState::Fulfilled);
        let powers_idle = !self.powers.contains(&PowerState::InEffect);
        if all_fulfilled && powers_idle {
            self.set_contract(
                ContractState::Fulfilled,
                "every obligation fulfilled and no power in effect".into(),
                r,
            );
        }
    }
}
