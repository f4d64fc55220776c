//! Lowering a validated spec plus parameter values into an executable
//! contract: names become indices, parameter references become values.

use crate::codegen::manifest::{self, Manifest};
use crate::diagnostic::{codes, Diagnostic};
use crate::lang::{self, AttrKind, CmpOp, Expr, ParamKind, PowerAction, Proposition, SymboleoSpec, TimePoint};
use chrono::{Months, NaiveDate, NaiveDateTime, TimeDelta};
use std::collections::BTreeMap;
use std::sync::Arc;

/// A runtime value of an attribute or parameter.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Number(f64),
    Str(String),
    Date(NaiveDate),
}

impl Value {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Number(n) => serde_json::json!(n),
            Value::Str(s) => serde_json::json!(s),
            Value::Date(d) => serde_json::json!(d.format("%Y-%m-%d").to_string()),
        }
    }

    pub fn compare(&self, other: &Value) -> Option<std::cmp::Ordering> {
        match (self, other) {
            (Value::Number(a), Value::Number(b)) => a.partial_cmp(b),
            (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
            (Value::Date(a), Value::Date(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }
}

/// Reads a JSON value as an attribute of the given kind.
pub fn attr_value(kind: AttrKind, v: &serde_json::Value) -> Option<Value> {
    match kind {
        AttrKind::Number => v.as_f64().map(Value::Number),
        AttrKind::String => v.as_str().map(|s| Value::Str(s.to_owned())),
        AttrKind::Date => v
            .as_str()
            .and_then(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok())
            .map(Value::Date),
    }
}

/// Reads a JSON value as a parameter of the given kind. Numbers may also be
/// given as numeric strings.
pub fn param_value(kind: ParamKind, v: &serde_json::Value) -> Option<Value> {
    match kind {
        ParamKind::Date => attr_value(AttrKind::Date, v),
        ParamKind::Number | ParamKind::Money | ParamKind::Percentage => v
            .as_f64()
            .or_else(|| {
                v.as_str()
                    .map(|s| s.trim().trim_end_matches('%').trim())
                    .and_then(|s| s.parse().ok())
            })
            .filter(|n: &f64| n.is_finite())
            .map(Value::Number),
        ParamKind::Party | ParamKind::String => v
            .as_str()
            .filter(|s| !s.trim().is_empty())
            .map(|s| Value::Str(s.to_owned())),
    }
}

/// A date argument: its value and, when it came from a parameter, the
/// parameter's name.
#[derive(Clone, Debug, PartialEq)]
pub struct DateArg {
    pub date: NaiveDate,
    pub param: Option<String>,
}

impl DateArg {
    /// Start of the day.
    pub fn start(&self) -> NaiveDateTime {
        self.date.and_hms_opt(0, 0, 0).unwrap()
    }

    /// Start of the following day: the first instant after the date.
    pub fn after(&self) -> NaiveDateTime {
        self.start() + TimeDelta::days(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueArg {
    pub value: Value,
    pub param: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub magnitude: u32,
    pub unit: lang::TimeUnit,
}

impl Span {
    /// `t + span`, clamping month arithmetic to the end of the month.
    pub fn add_to(self, t: NaiveDateTime) -> NaiveDateTime {
        match self.unit {
            lang::TimeUnit::Days => t + TimeDelta::days(self.magnitude.into()),
            lang::TimeUnit::Weeks => t + TimeDelta::weeks(self.magnitude.into()),
            lang::TimeUnit::Months => t
                .checked_add_months(Months::new(self.magnitude))
                .unwrap_or(NaiveDateTime::MAX),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cond {
    True,
    False,
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
    Happens(usize),
    Before(usize, DateArg),
    After(usize, DateArg),
    Within(usize, DateArg, DateArg),
    WithinOf { event: usize, anchor: usize, span: Span },
    Violated(usize),
    Fulfilled(usize),
    Compare { event: usize, attr: usize, op: CmpOp, value: ValueArg },
}

#[derive(Clone, Debug)]
pub struct EventDef {
    pub id: String,
    pub type_name: String,
    pub attributes: Vec<(String, AttrKind)>,
}

#[derive(Clone, Debug)]
pub struct ObligationDef {
    pub id: String,
    pub debtor: String,
    pub creditor: String,
    pub trigger: Cond,
    pub consequent: Cond,
    /// Power that imposes it; `None` for declared obligations.
    pub imposed_by: Option<String>,
}

#[derive(Clone, Debug)]
pub enum ActionDef {
    Suspend(Vec<usize>),
    Resume(Vec<usize>),
    Terminate,
    Impose(usize),
}

#[derive(Clone, Debug)]
pub struct PowerDef {
    pub id: String,
    pub holder: String,
    pub counterparty: String,
    pub trigger: Cond,
    pub action: ActionDef,
}

/// An executable contract: a spec with its parameter values bound.
#[derive(Debug)]
pub struct CompiledContract {
    pub name: String,
    pub params: BTreeMap<String, Value>,
    pub events: Vec<EventDef>,
    pub obligations: Vec<ObligationDef>,
    pub powers: Vec<PowerDef>,
    /// (first, then) event indices.
    pub constraints: Vec<(usize, usize)>,
    /// Static structure reported by `describe`.
    structure: Manifest,
}

fn bad_param(message: String) -> Diagnostic {
    Diagnostic::unlocated(codes::BAD_PARAMETER_VALUE, message)
}

struct Lowering<'a> {
    spec: &'a SymboleoSpec,
    params: &'a BTreeMap<String, Value>,
    events: &'a [EventDef],
    obligations: Vec<&'a str>,
}

impl Lowering<'_> {
    fn event(&self, id: &lang::Ident) -> usize {
        self.events.iter().position(|e| e.id == id.name).expect("validated event")
    }

    fn obligation(&self, id: &lang::Ident) -> usize {
        self.obligations.iter().position(|o| *o == id.name).expect("validated obligation")
    }

    fn date(&self, t: &TimePoint) -> DateArg {
        match t {
            TimePoint::Date(d) => DateArg { date: *d, param: None },
            TimePoint::Param(p) => match &self.params[&p.name] {
                Value::Date(d) => DateArg {
                    date: *d,
                    param: Some(p.name.clone()),
                },
                _ => unreachable!("validated as Date"),
            },
        }
    }

    fn value(&self, e: &Expr) -> ValueArg {
        match e {
            Expr::Param(p) => ValueArg {
                value: self.params[&p.name].clone(),
                param: Some(p.name.clone()),
            },
            Expr::Number(n) => ValueArg { value: Value::Number(*n), param: None },
            Expr::Str(s) => ValueArg { value: Value::Str(s.clone()), param: None },
            Expr::Date(d) => ValueArg { value: Value::Date(*d), param: None },
        }
    }

    fn cond(&self, p: &Proposition) -> Cond {
        let b = |p: &Proposition| Box::new(self.cond(p));
        match p {
            Proposition::True => Cond::True,
            Proposition::False => Cond::False,
            Proposition::And(l, r) => Cond::And(b(l), b(r)),
            Proposition::Or(l, r) => Cond::Or(b(l), b(r)),
            Proposition::Not(a) => Cond::Not(b(a)),
            Proposition::Happens(e) => Cond::Happens(self.event(e)),
            Proposition::HappensBefore(e, t) => Cond::Before(self.event(e), self.date(t)),
            Proposition::HappensAfter(e, t) => Cond::After(self.event(e), self.date(t)),
            Proposition::HappensWithin(e, lang::Interval::Absolute(a, z)) => {
                Cond::Within(self.event(e), self.date(a), self.date(z))
            }
            Proposition::HappensWithin(e, lang::Interval::RelativeTo(a, d)) => Cond::WithinOf {
                event: self.event(e),
                anchor: self.event(a),
                span: Span {
                    magnitude: d.magnitude,
                    unit: d.unit,
                },
            },
            Proposition::Violated(o) => Cond::Violated(self.obligation(o)),
            Proposition::Fulfilled(o) => Cond::Fulfilled(self.obligation(o)),
            Proposition::AttrCmp { event, attr, op, value } => {
                let ev = self.event(event);
                let attr = self.events[ev]
                    .attributes
                    .iter()
                    .position(|(n, _)| *n == attr.name)
                    .expect("validated attribute");
                Cond::Compare {
                    event: ev,
                    attr,
                    op: *op,
                    value: self.value(value),
                }
            }
        }
    }
}

impl CompiledContract {
    /// Binds parameter values to a validated spec. Values must cover every
    /// parameter with the right kind (E801); extra keys are ignored.
    pub fn compile(
        spec: &SymboleoSpec,
        values: &serde_json::Map<String, serde_json::Value>,
    ) -> Result<Arc<Self>, Vec<Diagnostic>> {
        let mut params = BTreeMap::new();
        let mut errors = Vec::new();
        for p in &spec.parameters {
            let kind = p.ty.kind();
            match values.get(p.name.as_str()) {
                None => errors.push(bad_param(format!("no value for parameter `{}`", p.name))),
                Some(v) => match param_value(kind, v) {
                    Some(v) => {
                        params.insert(p.name.name.clone(), v);
                    }
                    None => errors.push(bad_param(format!(
                        "`{v}` is not a valid {kind} for parameter `{}`",
                        p.name
                    ))),
                },
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        let events: Vec<EventDef> = spec
            .event_bindings()
            .map(|b| EventDef {
                id: b.name.name.clone(),
                type_name: b.ty.name.clone(),
                attributes: spec
                    .decl(b.ty.as_str())
                    .map(|d| d.attributes.iter().map(|a| (a.name.name.clone(), a.kind)).collect())
                    .unwrap_or_default(),
            })
            .collect();

        let structure = manifest::build(spec);
        let lower = Lowering {
            spec,
            params: &params,
            events: &events,
            obligations: structure.obligations.iter().map(|o| o.id.as_str()).collect(),
        };
        let obligations = spec
            .obligations
            .iter()
            .map(|o| (o, None))
            .chain(spec.powers.iter().filter_map(|p| match &p.action {
                PowerAction::Impose(o) => Some((o.as_ref(), Some(p.id.name.clone()))),
                _ => None,
            }))
            .map(|(o, imposed_by)| ObligationDef {
                id: o.id.name.clone(),
                debtor: o.debtor.name.clone(),
                creditor: o.creditor.name.clone(),
                trigger: lower.cond(&o.trigger),
                consequent: lower.cond(&o.consequent),
                imposed_by,
            })
            .collect();
        let powers = lower
            .spec
            .powers
            .iter()
            .map(|p| PowerDef {
                id: p.id.name.clone(),
                holder: p.holder.name.clone(),
                counterparty: p.counterparty.name.clone(),
                trigger: lower.cond(&p.trigger),
                action: match &p.action {
                    PowerAction::Suspend(v) => ActionDef::Suspend(v.iter().map(|o| lower.obligation(o)).collect()),
                    PowerAction::Resume(v) => ActionDef::Resume(v.iter().map(|o| lower.obligation(o)).collect()),
                    PowerAction::Terminate => ActionDef::Terminate,
                    PowerAction::Impose(o) => ActionDef::Impose(lower.obligation(&o.id)),
                },
            })
            .collect();
        let constraints = spec
            .constraints
            .iter()
            .map(|c| (lower.event(&c.first), lower.event(&c.then)))
            .collect();

        Ok(Arc::new(CompiledContract {
            name: spec.name.name.clone(),
            params,
            events,
            obligations,
            powers,
            constraints,
            structure,
        }))
    }

    pub fn event_index(&self, id: &str) -> Option<usize> {
        self.events.iter().position(|e| e.id == id)
    }

    pub fn power_index(&self, id: &str) -> Option<usize> {
        self.powers.iter().position(|p| p.id == id)
    }

    /// The state machine this runtime executes, in manifest form. Dynamic
    /// parts (propositions, actions) are rebuilt from the compiled form.
    pub fn describe(&self) -> Manifest {
        let mut m = self.structure.clone();
        for (mo, o) in m.obligations.iter_mut().zip(&self.obligations) {
            mo.id = o.id.clone();
            mo.debtor = o.debtor.clone();
            mo.creditor = o.creditor.clone();
            mo.trigger = self.prop(&o.trigger);
            mo.consequent = self.prop(&o.consequent);
            mo.imposed_by = o.imposed_by.clone();
        }
        for (mp, p) in m.powers.iter_mut().zip(&self.powers) {
            mp.id = p.id.clone();
            mp.holder = p.holder.clone();
            mp.counterparty = p.counterparty.clone();
            mp.trigger = self.prop(&p.trigger);
            let ids = |v: &[usize]| v.iter().map(|i| self.obligations[*i].id.clone()).collect();
            mp.action = match &p.action {
                ActionDef::Suspend(v) => manifest::Action::Suspend { obligations: ids(v) },
                ActionDef::Resume(v) => manifest::Action::Resume { obligations: ids(v) },
                ActionDef::Terminate => manifest::Action::Terminate,
                ActionDef::Impose(i) => manifest::Action::Impose {
                    obligation: self.obligations[*i].id.clone(),
                },
            };
        }
        m.events = self
            .events
            .iter()
            .map(|e| manifest::ManifestEvent {
                id: e.id.clone(),
                type_name: e.type_name.clone(),
                attributes: e
                    .attributes
                    .iter()
                    .map(|(n, k)| manifest::ManifestAttribute {
                        name: n.clone(),
                        kind: *k,
                    })
                    .collect(),
            })
            .collect();
        m.constraints = self
            .constraints
            .iter()
            .map(|(a, b)| manifest::ManifestConstraint {
                first: self.events[*a].id.clone(),
                then: self.events[*b].id.clone(),
            })
            .collect();
        m
    }

    fn prop(&self, c: &Cond) -> manifest::Prop {
        use manifest::{Prop, Time, Window};
        let b = |c: &Cond| Box::new(self.prop(c));
        let ev = |i: &usize| self.events[*i].id.clone();
        let time = |d: &DateArg| match &d.param {
            Some(p) => Time::Param(p.clone()),
            None => Time::Date(d.date),
        };
        match c {
            Cond::True => Prop::True,
            Cond::False => Prop::False,
            Cond::And(l, r) => Prop::And { left: b(l), right: b(r) },
            Cond::Or(l, r) => Prop::Or { left: b(l), right: b(r) },
            Cond::Not(a) => Prop::Not { arg: b(a) },
            Cond::Happens(e) => Prop::Happens { event: ev(e) },
            Cond::Before(e, d) => Prop::HappensBefore { event: ev(e), time: time(d) },
            Cond::After(e, d) => Prop::HappensAfter { event: ev(e), time: time(d) },
            Cond::Within(e, a, z) => Prop::HappensWithin {
                event: ev(e),
                window: Window::Absolute { start: time(a), end: time(z) },
            },
            Cond::WithinOf { event, anchor, span } => Prop::HappensWithin {
                event: ev(event),
                window: Window::Relative {
                    anchor: ev(anchor),
                    magnitude: span.magnitude,
                    unit: span.unit,
                },
            },
            Cond::Violated(o) => Prop::Violated { obligation: self.obligations[*o].id.clone() },
            Cond::Fulfilled(o) => Prop::Fulfilled { obligation: self.obligations[*o].id.clone() },
            Cond::Compare { event, attr, op, value } => Prop::Compare {
                event: ev(event),
                attribute: self.events[*event].attributes[*attr].0.clone(),
                cmp: *op,
                value: match (&value.param, &value.value) {
                    (Some(p), _) => manifest::Value::Param(p.clone()),
                    (None, Value::Number(n)) => manifest::Value::Number(*n),
                    (None, Value::Str(s)) => manifest::Value::String(s.clone()),
                    (None, Value::Date(d)) => manifest::Value::Date(*d),
                },
            },
        }
    }
}
