//! The state-machine manifest: a language-neutral description of what the
//! generated contract does. The runtime describes itself in the same shape,
//! which is how generated code and runtime are checked against each other.

use crate::lang::{self, AttrKind, CmpOp, Expr, ParamKind, PowerAction, Proposition, SymboleoSpec, TimePoint, TimeUnit};
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "symboleo.manifest/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub contract: String,
    pub parameters: Vec<ManifestParameter>,
    pub roles: Vec<String>,
    pub parties: Vec<ManifestParty>,
    pub assets: Vec<ManifestAsset>,
    pub events: Vec<ManifestEvent>,
    pub obligations: Vec<ManifestObligation>,
    pub powers: Vec<ManifestPower>,
    pub constraints: Vec<ManifestConstraint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestParameter {
    pub name: String,
    pub kind: ParamKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestParty {
    pub name: String,
    pub role: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestAttribute {
    pub name: String,
    pub kind: AttrKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestAsset {
    pub id: String,
    #[serde(rename = "type")]
    pub type_name: String,
    pub attributes: Vec<ManifestAttribute>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEvent {
    pub id: String,
    #[serde(rename = "type")]
    pub type_name: String,
    pub attributes: Vec<ManifestAttribute>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestObligation {
    pub id: String,
    pub debtor: String,
    pub creditor: String,
    pub trigger: Prop,
    pub consequent: Prop,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imposed_by: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestPower {
    pub id: String,
    pub holder: String,
    pub counterparty: String,
    pub trigger: Prop,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestConstraint {
    pub first: String,
    pub then: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Time {
    Date(chrono::NaiveDate),
    Param(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Number(f64),
    String(String),
    Date(chrono::NaiveDate),
    Param(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Window {
    Absolute { start: Time, end: Time },
    Relative { anchor: String, magnitude: u32, unit: TimeUnit },
}

/// Compiled proposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Prop {
    True,
    False,
    And { left: Box<Prop>, right: Box<Prop> },
    Or { left: Box<Prop>, right: Box<Prop> },
    Not { arg: Box<Prop> },
    Happens { event: String },
    HappensBefore { event: String, time: Time },
    HappensAfter { event: String, time: Time },
    HappensWithin { event: String, window: Window },
    Violated { obligation: String },
    Fulfilled { obligation: String },
    Compare { event: String, attribute: String, cmp: CmpOp, value: Value },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Action {
    Suspend { obligations: Vec<String> },
    Resume { obligations: Vec<String> },
    Terminate,
    Impose { obligation: String },
}

pub fn time(t: &TimePoint) -> Time {
    match t {
        TimePoint::Date(d) => Time::Date(*d),
        TimePoint::Param(p) => Time::Param(p.name.clone()),
    }
}

pub fn value(e: &Expr) -> Value {
    match e {
        Expr::Param(p) => Value::Param(p.name.clone()),
        Expr::Number(n) => Value::Number(*n),
        Expr::Str(s) => Value::String(s.clone()),
        Expr::Date(d) => Value::Date(*d),
    }
}

pub fn prop(p: &Proposition) -> Prop {
    let b = |p: &Proposition| Box::new(prop(p));
    match p {
        Proposition::True => Prop::True,
        Proposition::False => Prop::False,
        Proposition::And(l, r) => Prop::And { left: b(l), right: b(r) },
        Proposition::Or(l, r) => Prop::Or { left: b(l), right: b(r) },
        Proposition::Not(a) => Prop::Not { arg: b(a) },
        Proposition::Happens(e) => Prop::Happens { event: e.name.clone() },
        Proposition::HappensBefore(e, t) => Prop::HappensBefore {
            event: e.name.clone(),
            time: time(t),
        },
        Proposition::HappensAfter(e, t) => Prop::HappensAfter {
            event: e.name.clone(),
            time: time(t),
        },
        Proposition::HappensWithin(e, i) => Prop::HappensWithin {
            event: e.name.clone(),
            window: match i {
                lang::Interval::Absolute(a, z) => Window::Absolute {
                    start: time(a),
                    end: time(z),
                },
                lang::Interval::RelativeTo(a, d) => Window::Relative {
                    anchor: a.name.clone(),
                    magnitude: d.magnitude,
                    unit: d.unit,
                },
            },
        },
        Proposition::Violated(o) => Prop::Violated { obligation: o.name.clone() },
        Proposition::Fulfilled(o) => Prop::Fulfilled { obligation: o.name.clone() },
        Proposition::AttrCmp { event, attr, op, value: v } => Prop::Compare {
            event: event.name.clone(),
            attribute: attr.name.clone(),
            cmp: *op,
            value: value(v),
        },
    }
}

fn attributes(spec: &SymboleoSpec, ty: &str) -> Vec<ManifestAttribute> {
    spec.decl(ty)
        .map(|d| {
            d.attributes
                .iter()
                .map(|a| ManifestAttribute {
                    name: a.name.name.clone(),
                    kind: a.kind,
                })
                .collect()
        })
        .unwrap_or_default()
}

/// Manifest of a validated spec.
pub fn build(spec: &SymboleoSpec) -> Manifest {
    let bindings_of = |cat| {
        spec.bindings
            .iter()
            .filter(move |b| spec.binding_category(b.name.as_str()) == Some(cat))
    };
    let mut obligations: Vec<ManifestObligation> = spec
        .obligations
        .iter()
        .map(|o| obligation(o, None))
        .collect();
    for p in &spec.powers {
        if let PowerAction::Impose(o) = &p.action {
            obligations.push(obligation(o, Some(p.id.name.clone())));
        }
    }
    Manifest {
        schema: SCHEMA.to_owned(),
        contract: spec.name.name.clone(),
        parameters: spec
            .parameters
            .iter()
            .map(|p| ManifestParameter {
                name: p.name.name.clone(),
                kind: p.ty.kind(),
                role: match &p.ty {
                    lang::ParamType::Role(r) => Some(r.name.clone()),
                    _ => None,
                },
            })
            .collect(),
        roles: spec
            .decls_of(lang::Category::Role)
            .map(|d| d.name.name.clone())
            .collect(),
        parties: spec
            .parties()
            .iter()
            .map(|p| ManifestParty {
                name: p.name.to_owned(),
                role: p.role.to_owned(),
            })
            .collect(),
        assets: bindings_of(lang::Category::Asset)
            .map(|b| ManifestAsset {
                id: b.name.name.clone(),
                type_name: b.ty.name.clone(),
                attributes: attributes(spec, b.ty.as_str()),
            })
            .collect(),
        events: bindings_of(lang::Category::Event)
            .map(|b| ManifestEvent {
                id: b.name.name.clone(),
                type_name: b.ty.name.clone(),
                attributes: attributes(spec, b.ty.as_str()),
            })
            .collect(),
        obligations,
        powers: spec
            .powers
            .iter()
            .map(|p| ManifestPower {
                id: p.id.name.clone(),
                holder: p.holder.name.clone(),
                counterparty: p.counterparty.name.clone(),
                trigger: prop(&p.trigger),
                action: match &p.action {
                    PowerAction::Suspend(v) => Action::Suspend {
                        obligations: v.iter().map(|i| i.name.clone()).collect(),
                    },
                    PowerAction::Resume(v) => Action::Resume {
                        obligations: v.iter().map(|i| i.name.clone()).collect(),
                    },
                    PowerAction::Terminate => Action::Terminate,
                    PowerAction::Impose(o) => Action::Impose {
                        obligation: o.id.name.clone(),
                    },
                },
            })
            .collect(),
        constraints: spec
            .constraints
            .iter()
            .map(|c| ManifestConstraint {
                first: c.first.name.clone(),
                then: c.then.name.clone(),
            })
            .collect(),
    }
}

fn obligation(o: &lang::Obligation, imposed_by: Option<String>) -> ManifestObligation {
    ManifestObligation {
        id: o.id.name.clone(),
        debtor: o.debtor.name.clone(),
        creditor: o.creditor.name.clone(),
        trigger: prop(&o.trigger),
        consequent: prop(&o.consequent),
        imposed_by,
    }
}
