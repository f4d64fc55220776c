//! Syntax tree of the core contract dialect.

use crate::diagnostic::Span;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::fmt;

/// An identifier with its source location. Equality compares the text only.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            span: Span::default(),
        }
    }

    pub fn spanned(name: impl Into<String>, span: Span) -> Self {
        Self {
            name: name.into(),
            span,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl PartialEq<str> for Ident {
    fn eq(&self, other: &str) -> bool {
        self.name == other
    }
}

impl PartialEq<&str> for Ident {
    fn eq(&self, other: &&str) -> bool {
        self.name == *other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParamKind {
    Date,
    Party,
    Number,
    Money,
    Percentage,
    String,
}

impl ParamKind {
    pub const ALL: [ParamKind; 6] = [
        ParamKind::Date,
        ParamKind::Party,
        ParamKind::Number,
        ParamKind::Money,
        ParamKind::Percentage,
        ParamKind::String,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            ParamKind::Date => "Date",
            ParamKind::Party => "Party",
            ParamKind::Number => "Number",
            ParamKind::Money => "Money",
            ParamKind::Percentage => "Percentage",
            ParamKind::String => "String",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, ParamKind::Number | ParamKind::Money | ParamKind::Percentage)
    }
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Declared type of a contract parameter: a builtin kind or a Role type,
/// the latter denoting a party playing that role.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ParamType {
    Kind(ParamKind),
    Role(Ident),
}

impl ParamType {
    pub fn kind(&self) -> ParamKind {
        match self {
            ParamType::Kind(k) => *k,
            ParamType::Role(_) => ParamKind::Party,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Parameter {
    pub name: Ident,
    pub ty: ParamType,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Role,
    Asset,
    Event,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Role, Category::Asset, Category::Event];

    pub fn keyword(self) -> &'static str {
        match self {
            Category::Role => "Role",
            Category::Asset => "Asset",
            Category::Event => "Event",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.keyword() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttrKind {
    Number,
    Date,
    String,
}

impl AttrKind {
    pub const ALL: [AttrKind; 3] = [AttrKind::Number, AttrKind::Date, AttrKind::String];

    pub fn keyword(self) -> &'static str {
        match self {
            AttrKind::Number => "Number",
            AttrKind::Date => "Date",
            AttrKind::String => "String",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }

    /// Whether a parameter of `kind` may flow into an attribute of this kind.
    pub fn accepts(self, kind: ParamKind) -> bool {
        match self {
            AttrKind::Number => kind.is_numeric(),
            AttrKind::Date => kind == ParamKind::Date,
            AttrKind::String => matches!(kind, ParamKind::String | ParamKind::Party),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Attribute {
    pub name: Ident,
    pub kind: AttrKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DomainDecl {
    pub name: Ident,
    pub category: Category,
    pub attributes: Vec<Attribute>,
    pub span: Span,
}

impl DomainDecl {
    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

/// Who does what to whom: lets controlled-language event phrases find an
/// existing event binding.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EventSignature {
    pub subject: Ident,
    pub verb: Ident,
    pub object: Option<Ident>,
}

/// A literal or parameter reference.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Param(Ident),
    Number(f64),
    Str(String),
    Date(NaiveDate),
}

impl Eq for Expr {}

impl std::hash::Hash for Expr {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Expr::Param(p) => p.hash(state),
            Expr::Number(n) => n.to_bits().hash(state),
            Expr::Str(s) => s.hash(state),
            Expr::Date(d) => d.hash(state),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub attr: Ident,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Binding {
    pub name: Ident,
    pub ty: Ident,
    pub signature: Option<EventSignature>,
    pub assignments: Vec<Assignment>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TimePoint {
    Date(NaiveDate),
    Param(Ident),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Days,
    Weeks,
    Months,
}

impl TimeUnit {
    pub const ALL: [TimeUnit; 3] = [TimeUnit::Days, TimeUnit::Weeks, TimeUnit::Months];

    pub fn plural(self) -> &'static str {
        match self {
            TimeUnit::Days => "days",
            TimeUnit::Weeks => "weeks",
            TimeUnit::Months => "months",
        }
    }

    pub fn singular(self) -> &'static str {
        match self {
            TimeUnit::Days => "day",
            TimeUnit::Weeks => "week",
            TimeUnit::Months => "month",
        }
    }

    pub fn parse(word: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|u| u.plural() == word || u.singular() == word)
    }

    pub fn label(self, magnitude: u32) -> &'static str {
        if magnitude == 1 {
            self.singular()
        } else {
            self.plural()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Duration {
    pub magnitude: u32,
    pub unit: TimeUnit,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Interval {
    Absolute(TimePoint, TimePoint),
    RelativeTo(Ident, Duration),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Eq => ord == Equal,
            CmpOp::Ge => ord != Less,
            CmpOp::Gt => ord == Greater,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Proposition {
    True,
    False,
    And(Box<Proposition>, Box<Proposition>),
    Or(Box<Proposition>, Box<Proposition>),
    Not(Box<Proposition>),
    Happens(Ident),
    HappensBefore(Ident, TimePoint),
    HappensAfter(Ident, TimePoint),
    HappensWithin(Ident, Interval),
    Violated(Ident),
    Fulfilled(Ident),
    AttrCmp {
        event: Ident,
        attr: Ident,
        op: CmpOp,
        value: Expr,
    },
}

impl Proposition {
    pub fn and(a: Proposition, b: Proposition) -> Self {
        Proposition::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Proposition, b: Proposition) -> Self {
        Proposition::Or(Box::new(a), Box::new(b))
    }

    pub fn negate(a: Proposition) -> Self {
        Proposition::Not(Box::new(a))
    }

    /// Visits every node, parents before children.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Proposition)) {
        f(self);
        match self {
            Proposition::And(a, b) | Proposition::Or(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Proposition::Not(a) => a.walk(f),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Obligation {
    pub id: Ident,
    pub debtor: Ident,
    pub creditor: Ident,
    pub trigger: Proposition,
    pub consequent: Proposition,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PowerAction {
    Suspend(Vec<Ident>),
    Resume(Vec<Ident>),
    Terminate,
    Impose(Box<Obligation>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Power {
    pub id: Ident,
    pub holder: Ident,
    pub counterparty: Ident,
    pub trigger: Proposition,
    pub action: PowerAction,
    pub span: Span,
}

/// Ordering constraint between two events: no occurrence of `then` may be
/// recorded before the first occurrence of `first`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub first: Ident,
    pub then: Ident,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SymboleoSpec {
    pub name: Ident,
    pub parameters: Vec<Parameter>,
    pub domain: Vec<DomainDecl>,
    pub bindings: Vec<Binding>,
    pub obligations: Vec<Obligation>,
    pub powers: Vec<Power>,
    pub constraints: Vec<Constraint>,
}

impl Default for Ident {
    fn default() -> Self {
        Ident::new("")
    }
}

impl SymboleoSpec {
    pub fn parameter(&self, name: &str) -> Option<&Parameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn decl(&self, name: &str) -> Option<&DomainDecl> {
        self.domain.iter().find(|d| d.name == name)
    }

    pub fn binding(&self, name: &str) -> Option<&Binding> {
        self.bindings.iter().find(|b| b.name == name)
    }

    pub fn binding_category(&self, name: &str) -> Option<Category> {
        self.binding(name)
            .and_then(|b| self.decl(b.ty.as_str()))
            .map(|d| d.category)
    }

    pub fn obligation(&self, id: &str) -> Option<&Obligation> {
        self.obligations.iter().find(|o| o.id == id)
    }

    pub fn obligation_mut(&mut self, id: &str) -> Option<&mut Obligation> {
        self.obligations.iter_mut().find(|o| o.id == id)
    }

    pub fn power(&self, id: &str) -> Option<&Power> {
        self.powers.iter().find(|p| p.id == id)
    }

    /// Obligations declared directly plus those that powers may impose.
    pub fn all_obligations(&self) -> impl Iterator<Item = &Obligation> {
        self.obligations.iter().chain(self.powers.iter().filter_map(|p| {
            match &p.action {
                PowerAction::Impose(o) => Some(o.as_ref()),
                _ => None,
            }
        }))
    }

    /// Parties are Role-typed parameters and bindings of a Role type.
    pub fn party(&self, name: &str) -> Option<Party<'_>> {
        if let Some(p) = self.parameter(name) {
            if let ParamType::Role(role) = &p.ty {
                return Some(Party {
                    name: &p.name.name,
                    role: &role.name,
                });
            }
            if p.ty.kind() == ParamKind::Party {
                return Some(Party {
                    name: &p.name.name,
                    role: &p.name.name,
                });
            }
            return None;
        }
        let b = self.binding(name)?;
        let d = self.decl(b.ty.as_str())?;
        (d.category == Category::Role).then_some(Party {
            name: &b.name.name,
            role: &d.name.name,
        })
    }

    /// All parties in declaration order (parameters first).
    pub fn parties(&self) -> Vec<Party<'_>> {
        self.parameters
            .iter()
            .map(|p| p.name.as_str())
            .chain(self.bindings.iter().map(|b| b.name.as_str()))
            .filter_map(|n| self.party(n))
            .collect()
    }

    pub fn event_bindings(&self) -> impl Iterator<Item = &Binding> {
        self.bindings
            .iter()
            .filter(|b| self.binding_category(b.name.as_str()) == Some(Category::Event))
    }

    pub fn decls_of(&self, category: Category) -> impl Iterator<Item = &DomainDecl> {
        self.domain.iter().filter(move |d| d.category == category)
    }
}

/// A resolved party: its name and the role type it plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Party<'a> {
    pub name: &'a str,
    pub role: &'a str,
}
