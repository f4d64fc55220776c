//! Semantic checks over a parsed spec.

use super::ast::*;
use crate::diagnostic::{codes, sort, Diagnostic, Span};
use std::collections::HashMap;

/// Returns every invariant violation, ordered by range then code. The list is
/// empty exactly when the spec is well formed.
pub fn validate(spec: &SymboleoSpec) -> Vec<Diagnostic> {
    let mut v = Validator {
        spec,
        diags: Vec::new(),
    };
    v.run();
    let mut diags = v.diags;
    sort(&mut diags);
    diags
}

struct Validator<'a> {
    spec: &'a SymboleoSpec,
    diags: Vec<Diagnostic>,
}

fn duplicates<'a>(
    items: impl IntoIterator<Item = &'a Ident>,
    what: &str,
    diags: &mut Vec<Diagnostic>,
) {
    let mut seen: HashMap<&str, Span> = HashMap::new();
    for id in items {
        if seen.contains_key(id.as_str()) {
            diags.push(Diagnostic::error(
                codes::DUPLICATE_ID,
                id.span,
                format!("duplicate {what} `{}`", id.name),
            ));
        } else {
            seen.insert(id.as_str(), id.span);
        }
    }
}

impl<'a> Validator<'a> {
    fn err(&mut self, code: &str, span: Span, msg: String) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    fn run(&mut self) {
        let s = self.spec;
        duplicates(s.parameters.iter().map(|p| &p.name), "parameter", &mut self.diags);
        duplicates(s.domain.iter().map(|d| &d.name), "domain type", &mut self.diags);
        // bindings share a namespace with parameters: both may name parties
        duplicates(
            s.parameters.iter().map(|p| &p.name).chain(s.bindings.iter().map(|b| &b.name)),
            "name",
            &mut self.diags,
        );
        // parameter-only duplicates were already reported; drop the repeats
        self.dedupe_param_duplicates();
        duplicates(
            s.all_obligations()
                .map(|o| &o.id)
                .chain(s.powers.iter().map(|p| &p.id)),
            "obligation or power id",
            &mut self.diags,
        );

        for d in &s.domain {
            duplicates(d.attributes.iter().map(|a| &a.name), "attribute", &mut self.diags);
        }
        for p in &s.parameters {
            if let ParamType::Role(role) = &p.ty {
                match s.decl(role.as_str()) {
                    None => self.err(
                        codes::UNRESOLVED,
                        role.span,
                        format!("unresolved type `{}` for parameter `{}`", role, p.name),
                    ),
                    Some(d) if d.category != Category::Role => self.err(
                        codes::KIND_MISMATCH,
                        role.span,
                        format!(
                            "parameter `{}` must have a Role type or builtin kind, `{}` is an {}",
                            p.name,
                            role,
                            d.category.keyword()
                        ),
                    ),
                    Some(_) => {}
                }
            }
        }
        for b in &s.bindings {
            self.binding(b);
        }
        for o in &s.obligations {
            self.obligation(o);
        }
        for p in &s.powers {
            self.power(p);
        }
        for c in &s.constraints {
            self.event_ref(&c.first);
            self.event_ref(&c.then);
        }
    }

    fn dedupe_param_duplicates(&mut self) {
        // A parameter declared twice is reported by both the parameter and the
        // shared-name pass; keep one diagnostic per location.
        let mut seen = std::collections::HashSet::new();
        self.diags
            .retain(|d| seen.insert((d.code.clone(), d.range)));
    }

    fn binding(&mut self, b: &Binding) {
        let s = self.spec;
        let Some(decl) = s.decl(b.ty.as_str()) else {
            self.err(
                codes::UNRESOLVED,
                b.ty.span,
                format!("unresolved type `{}` for binding `{}`", b.ty, b.name),
            );
            return;
        };
        if let Some(sig) = &b.signature {
            if decl.category != Category::Event {
                self.err(
                    codes::KIND_MISMATCH,
                    b.name.span,
                    format!("only event bindings carry a signature; `{}` is an {}", b.name, decl.category.keyword()),
                );
            }
            self.party_ref(&sig.subject);
            if let Some(obj) = &sig.object {
                if s.party(obj.as_str()).is_none() {
                    match s.binding_category(obj.as_str()) {
                        Some(Category::Asset) => {}
                        Some(other) => self.err(
                            codes::KIND_MISMATCH,
                            obj.span,
                            format!("event object `{obj}` must be a party or asset, found {}", other.keyword()),
                        ),
                        None => self.err(
                            codes::UNRESOLVED,
                            obj.span,
                            format!("unresolved party or asset `{obj}`"),
                        ),
                    }
                }
            }
        }
        duplicates(b.assignments.iter().map(|a| &a.attr), "assignment", &mut self.diags);
        for a in &b.assignments {
            let Some(attr) = decl.attribute(a.attr.as_str()) else {
                self.err(
                    codes::UNRESOLVED,
                    a.attr.span,
                    format!("type `{}` has no attribute `{}`", decl.name, a.attr),
                );
                continue;
            };
            self.expr_against(&a.value, attr.kind, a.attr.span);
        }
    }

    /// Checks that `e` can be stored in (or compared with) an attribute of `kind`.
    fn expr_against(&mut self, e: &Expr, kind: AttrKind, at: Span) {
        let ok = match e {
            Expr::Param(p) => match self.spec.parameter(p.as_str()) {
                None => {
                    self.err(codes::UNRESOLVED, p.span, format!("unresolved parameter `{p}`"));
                    return;
                }
                Some(param) => kind.accepts(param.ty.kind()),
            },
            Expr::Number(_) => kind == AttrKind::Number,
            Expr::Str(_) => kind == AttrKind::String,
            Expr::Date(_) => kind == AttrKind::Date,
        };
        if !ok {
            let span = match e {
                Expr::Param(p) => p.span,
                _ => at,
            };
            self.err(
                codes::KIND_MISMATCH,
                span,
                format!(
                    "`{}` is not compatible with a {} attribute",
                    super::printer::expr(e),
                    kind.keyword()
                ),
            );
        }
    }

    fn party_ref(&mut self, id: &Ident) -> bool {
        let s = self.spec;
        if s.party(id.as_str()).is_some() {
            return true;
        }
        if s.parameter(id.as_str()).is_some() || s.binding(id.as_str()).is_some() {
            self.err(
                codes::KIND_MISMATCH,
                id.span,
                format!("`{id}` is not a party (expected a Role-typed parameter or binding)"),
            );
        } else {
            self.err(codes::UNRESOLVED, id.span, format!("unresolved party `{id}`"));
        }
        false
    }

    fn parties(&mut self, a: &Ident, b: &Ident, roles: &str) {
        let ok_a = self.party_ref(a);
        let ok_b = self.party_ref(b);
        if ok_a && ok_b && a == b {
            self.err(
                codes::SAME_PARTY,
                b.span,
                format!("{roles} must be different parties, both are `{a}`"),
            );
        }
    }

    fn obligation(&mut self, o: &Obligation) {
        self.parties(&o.debtor, &o.creditor, "debtor and creditor");
        self.prop(&o.trigger);
        self.prop(&o.consequent);
    }

    fn power(&mut self, p: &Power) {
        self.parties(&p.holder, &p.counterparty, "holder and counterparty");
        self.prop(&p.trigger);
        match &p.action {
            PowerAction::Suspend(ids) | PowerAction::Resume(ids) => {
                for id in ids {
                    self.obligation_ref(id);
                }
            }
            PowerAction::Terminate => {}
            PowerAction::Impose(o) => self.obligation(o),
        }
    }

    fn obligation_ref(&mut self, id: &Ident) {
        if !self.spec.all_obligations().any(|o| o.id == *id) {
            self.err(
                codes::UNRESOLVED,
                id.span,
                format!("unresolved obligation `{id}`"),
            );
        }
    }

    fn event_ref(&mut self, id: &Ident) -> Option<&'a DomainDecl> {
        let s = self.spec;
        let Some(b) = s.binding(id.as_str()) else {
            self.err(codes::UNRESOLVED, id.span, format!("unresolved event `{id}`"));
            return None;
        };
        let decl = s.decl(b.ty.as_str())?;
        if decl.category != Category::Event {
            self.err(
                codes::KIND_MISMATCH,
                id.span,
                format!("`{id}` is an {}, not an event", decl.category.keyword()),
            );
            return None;
        }
        Some(decl)
    }

    fn time_point(&mut self, t: &TimePoint) {
        if let TimePoint::Param(p) = t {
            match self.spec.parameter(p.as_str()) {
                None => self.err(codes::UNRESOLVED, p.span, format!("unresolved parameter `{p}`")),
                Some(param) if param.ty.kind() != ParamKind::Date => self.err(
                    codes::KIND_MISMATCH,
                    p.span,
                    format!("time point `{p}` must be a Date parameter, found {}", param.ty.kind()),
                ),
                Some(_) => {}
            }
        }
    }

    fn prop(&mut self, p: &Proposition) {
        match p {
            Proposition::True | Proposition::False => {}
            Proposition::And(a, b) | Proposition::Or(a, b) => {
                self.prop(a);
                self.prop(b);
            }
            Proposition::Not(a) => self.prop(a),
            Proposition::Happens(e) => {
                self.event_ref(e);
            }
            Proposition::HappensBefore(e, t) | Proposition::HappensAfter(e, t) => {
                self.event_ref(e);
                self.time_point(t);
            }
            Proposition::HappensWithin(e, interval) => {
                self.event_ref(e);
                match interval {
                    Interval::Absolute(a, b) => {
                        self.time_point(a);
                        self.time_point(b);
                        if let (TimePoint::Date(x), TimePoint::Date(y)) = (a, b) {
                            if x > y {
                                self.err(
                                    codes::INVERTED_INTERVAL,
                                    e.span,
                                    format!("interval starts {x} after it ends {y}"),
                                );
                            } else if x == y {
                                self.diags.push(Diagnostic::warning(
                                    codes::EMPTY_INTERVAL,
                                    e.span,
                                    format!("interval starts and ends on {x}"),
                                ));
                            }
                        }
                    }
                    Interval::RelativeTo(anchor, d) => {
                        self.event_ref(anchor);
                        if d.magnitude < 1 {
                            self.err(
                                codes::BAD_DURATION,
                                anchor.span,
                                "relative window duration must be at least 1".to_owned(),
                            );
                        }
                    }
                }
            }
            Proposition::Violated(o) | Proposition::Fulfilled(o) => self.obligation_ref(o),
            Proposition::AttrCmp {
                event,
                attr,
                op,
                value,
            } => {
                let Some(decl) = self.event_ref(event) else { return };
                let Some(a) = decl.attribute(attr.as_str()) else {
                    let msg = format!("event `{event}` ({}) has no attribute `{attr}`", decl.name);
                    self.err(codes::UNRESOLVED, attr.span, msg);
                    return;
                };
                let kind = a.kind;
                if kind == AttrKind::String && *op != CmpOp::Eq {
                    self.err(
                        codes::KIND_MISMATCH,
                        attr.span,
                        format!("String attribute `{attr}` only supports `=`"),
                    );
                }
                self.expr_against(value, kind, attr.span);
            }
        }
    }
}
