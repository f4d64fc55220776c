//! Controlled-natural-language refinement of template slots.
//!
//! A refinement is one line of the restricted grammar in [`syntax`],
//! attached to a slot `[Pk]` of a template. Applying it rewrites both the
//! slot's obligation in the spec and the slot's clause text.

mod resolve;
pub mod syntax;

pub use resolve::{resolve, ResolvedEvent};
pub use syntax::{gerund, parse, split_directive, stem, CnlForm, DateRef, EventPhrase};

use crate::diagnostic::{codes, has_errors, Diagnostic};
use crate::lang::{
    self, Constraint, Duration, Ident, Interval, ParamKind, ParamType, Parameter, Proposition,
    TimePoint,
};
use crate::loc::{self, DiffStat};
use crate::template::{SlotFill, TemplateParam, TemplatePair};
use resolve::sorted_insert;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CnlRefinement {
    pub slot: String,
    #[serde(flatten)]
    pub form: CnlForm,
    pub text: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementResult {
    pub refinement: CnlRefinement,
    /// Canonical text of the refined spec.
    pub refined_spec: String,
    pub refined_template_text: String,
    pub spec_delta: DiffStat,
    pub resolved_events: Vec<ResolvedEvent>,
    pub added_parameters: Vec<String>,
    #[serde(skip)]
    pub pair: TemplatePair,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Choice {
    pub form: &'static str,
    pub template: &'static str,
    pub available: bool,
}

/// Menu data for one slot: the grammar's top-level forms and the
/// vocabulary that event phrases can use.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SlotOptions {
    pub slot: String,
    pub obligation: String,
    pub choices: Vec<Choice>,
    pub subjects: Vec<String>,
    pub verbs: Vec<String>,
    pub objects: Vec<String>,
    pub units: Vec<&'static str>,
    pub months: Vec<&'static str>,
}

fn slot_error(slot: &str) -> Diagnostic {
    Diagnostic::unlocated(codes::UNKNOWN_SLOT, format!("template has no slot `{slot}`"))
}

pub fn options(pair: &TemplatePair, slot: &str) -> Result<SlotOptions, Diagnostic> {
    let s = pair.template.slot(slot).ok_or_else(|| slot_error(slot))?;
    let fill = pair.fills.get(slot).cloned().unwrap_or_default();
    let trigger_true = pair
        .spec
        .obligation(&s.obligation)
        .is_some_and(|o| o.trigger == Proposition::True);
    let choices = syntax::FORMS
        .iter()
        .map(|&(form, template)| Choice {
            form,
            template,
            available: if form == "if" {
                fill.conditional.is_none() && trigger_true
            } else {
                fill.temporal.is_none()
            },
        })
        .collect();

    let mut subjects: Vec<String> = pair
        .spec
        .parties()
        .iter()
        .map(|p| p.role.to_owned())
        .collect();
    subjects.sort();
    subjects.dedup();
    let mut objects = subjects.clone();
    objects.extend(
        pair.spec
            .bindings
            .iter()
            .filter(|b| pair.spec.binding_category(b.name.as_str()) == Some(lang::Category::Asset))
            .map(|b| b.name.name.clone()),
    );
    objects.sort();
    objects.dedup();
    let mut verbs: Vec<String> = pair.template.verbs.iter().map(|v| gerund(v)).collect();
    verbs.sort();
    verbs.dedup();

    Ok(SlotOptions {
        slot: slot.to_owned(),
        obligation: s.obligation.clone(),
        choices,
        subjects,
        verbs,
        objects,
        units: lang::TimeUnit::ALL.iter().map(|u| u.plural()).collect(),
        months: syntax::MONTHS.to_vec(),
    })
}

/// Parses a refinement for a slot without applying it.
pub fn parse_refinement(pair: &TemplatePair, slot: &str, text: &str) -> Result<CnlRefinement, Diagnostic> {
    pair.template.slot(slot).ok_or_else(|| slot_error(slot))?;
    let form = parse(text)?;
    Ok(CnlRefinement {
        slot: slot.to_owned(),
        text: form.surface(false),
        form,
    })
}

/// Turns a date reference into a time point, creating a Date parameter (in
/// both spec and template) for a placeholder that does not exist yet.
fn time_point(
    pair: &mut TemplatePair,
    date: &DateRef,
    added: &mut Vec<String>,
) -> Result<TimePoint, Diagnostic> {
    let name = match date {
        DateRef::Date(d) => return Ok(TimePoint::Date(*d)),
        DateRef::Placeholder(n) => n,
    };
    let not_date = |what: &str| {
        Diagnostic::unlocated(
            codes::UNRESOLVABLE_PHRASE,
            format!("placeholder `[{name}]` names {what} parameter that is not a Date"),
        )
    };
    let spec_name = match pair.template.param(name) {
        Some(tp) if tp.kind != ParamKind::Date => return Err(not_date("a template")),
        Some(_) => pair.param_map[name].clone(),
        None => {
            sorted_insert(
                &mut pair.template.parameters,
                TemplateParam {
                    name: name.clone(),
                    kind: ParamKind::Date,
                },
                |p| p.name.clone(),
            );
            pair.param_map.insert(name.clone(), name.clone());
            name.clone()
        }
    };
    match pair.spec.parameter(&spec_name) {
        Some(p) if p.ty.kind() != ParamKind::Date => return Err(not_date("a spec")),
        Some(_) => {}
        None => {
            sorted_insert(
                &mut pair.spec.parameters,
                Parameter {
                    name: Ident::new(spec_name.clone()),
                    ty: ParamType::Kind(ParamKind::Date),
                    span: Default::default(),
                },
                |p| p.name.name.clone(),
            );
            added.push(spec_name.clone());
        }
    }
    Ok(TimePoint::Param(Ident::new(spec_name)))
}

/// Applies one refinement to a slot. The input pair is left untouched; the
/// result carries the refined pair.
pub fn apply(pair: &TemplatePair, slot: &str, text: &str) -> Result<RefinementResult, Vec<Diagnostic>> {
    let refinement = parse_refinement(pair, slot, text).map_err(|d| vec![d])?;
    let obligation_id = pair.template.slot(slot).unwrap().obligation.clone();
    let fill = pair.fills.get(slot).cloned().unwrap_or_default();
    let form = &refinement.form;

    let already = if form.is_temporal() {
        fill.temporal.as_ref()
    } else {
        fill.conditional.as_ref()
    };
    if let Some(prev) = already {
        return Err(vec![Diagnostic::unlocated(
            codes::SLOT_ALREADY_REFINED,
            format!(
                "slot `{slot}` already has a {} refinement (`{prev}`)",
                if form.is_temporal() { "temporal" } else { "conditional" }
            ),
        )]);
    }

    let obligation = pair.spec.obligation(&obligation_id).ok_or_else(|| {
        vec![Diagnostic::unlocated(
            codes::SLOT_MISSING_OBLIGATION,
            format!("slot `{slot}` refers to unknown obligation `{obligation_id}`"),
        )]
    })?;
    if form.is_temporal() && !matches!(obligation.consequent, Proposition::Happens(_)) {
        return Err(vec![Diagnostic::unlocated(
            codes::RULE_INAPPLICABLE,
            format!(
                "a temporal refinement needs `{obligation_id}` to have a consequent of the form Happens(e), not `{}`",
                lang::print_proposition(&obligation.consequent)
            ),
        )]);
    }
    if !form.is_temporal() && obligation.trigger != Proposition::True {
        return Err(vec![Diagnostic::unlocated(
            codes::TRIGGER_NOT_TRUE,
            format!(
                "a conditional refinement needs `{obligation_id}` to have trigger `true`, not `{}`",
                lang::print_proposition(&obligation.trigger)
            ),
        )]);
    }
    let event = match &obligation.consequent {
        Proposition::Happens(e) => Some(e.clone()),
        _ => None,
    };

    let mut next = pair.clone();
    let mut resolved = Vec::new();
    let mut added = Vec::new();
    let one = |d: Diagnostic| vec![d];

    let rewritten = match form {
        CnlForm::Before { date } => {
            let tp = time_point(&mut next, date, &mut added).map_err(one)?;
            Proposition::HappensBefore(event.unwrap(), tp)
        }
        CnlForm::After { date } => {
            let tp = time_point(&mut next, date, &mut added).map_err(one)?;
            Proposition::HappensAfter(event.unwrap(), tp)
        }
        CnlForm::Between { start, end } => {
            let a = time_point(&mut next, start, &mut added).map_err(one)?;
            let b = time_point(&mut next, end, &mut added).map_err(one)?;
            Proposition::HappensWithin(event.unwrap(), Interval::Absolute(a, b))
        }
        CnlForm::Within { magnitude, unit, phrase } => {
            let r = resolve(&mut next.spec, &next.template.verbs, phrase).map_err(one)?;
            let anchor = Ident::new(r.event.clone());
            let event = event.unwrap();
            resolved.push(r);
            if anchor != event {
                let c = Constraint {
                    first: anchor.clone(),
                    then: event.clone(),
                    span: Default::default(),
                };
                if !next.spec.constraints.contains(&c) {
                    sorted_insert(&mut next.spec.constraints, c, |c| {
                        format!("{} {}", c.first, c.then)
                    });
                }
            }
            Proposition::HappensWithin(
                event,
                Interval::RelativeTo(
                    anchor,
                    Duration {
                        magnitude: *magnitude,
                        unit: *unit,
                    },
                ),
            )
        }
        CnlForm::If { phrase } => {
            let r = resolve(&mut next.spec, &next.template.verbs, phrase).map_err(one)?;
            let trigger = Proposition::Happens(Ident::new(r.event.clone()));
            resolved.push(r);
            next.spec.obligation_mut(&obligation_id).unwrap().trigger = trigger;
            next.spec.obligation(&obligation_id).unwrap().consequent.clone()
        }
    };
    next.spec.obligation_mut(&obligation_id).unwrap().consequent = rewritten;

    let fill = next.fills.entry(slot.to_owned()).or_insert_with(SlotFill::default);
    if form.is_temporal() {
        fill.temporal = Some(form.surface(true));
    } else {
        fill.conditional = Some(form.surface(true));
    }

    let base_text = lang::print(&pair.spec);
    let refined_text = lang::print(&next.spec);
    let (spec, diags) = lang::check(&refined_text);
    let Some(spec) = spec else {
        let mut out = vec![Diagnostic::unlocated(
            codes::INVALID_SPEC,
            format!("refinement of `{slot}` produced an invalid specification"),
        )];
        out.extend(diags.into_iter().filter(Diagnostic::is_error));
        return Err(out);
    };
    debug_assert!(!has_errors(&diags));
    next.spec = spec;

    Ok(RefinementResult {
        refined_template_text: next.refined_text(),
        spec_delta: loc::diff_lines(&base_text, &refined_text),
        refined_spec: refined_text,
        resolved_events: resolved,
        added_parameters: added,
        refinement,
        pair: next,
    })
}

/// Applies a `Pk: <refinement>` line.
pub fn apply_directive(pair: &TemplatePair, line: &str) -> Result<RefinementResult, Vec<Diagnostic>> {
    let (slot, text) = split_directive(line).ok_or_else(|| {
        vec![Diagnostic::unlocated(
            codes::BAD_REQUEST,
            format!("`{line}` is not of the form `Pk: <refinement>`"),
        )]
    })?;
    apply(pair, slot, text)
}

/// Applies every directive of a script in order. Blank lines and lines
/// starting with `#` are ignored. Errors name the failing line.
pub fn apply_script(pair: &TemplatePair, script: &str) -> Result<(TemplatePair, Vec<RefinementResult>), Vec<Diagnostic>> {
    let mut current = pair.clone();
    let mut results = Vec::new();
    for (i, line) in script.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let r = apply_directive(&current, line).map_err(|ds| {
            ds.into_iter()
                .map(|mut d| {
                    d.message = format!("line {}: {}", i + 1, d.message);
                    d
                })
                .collect::<Vec<_>>()
        })?;
        current = r.pair.clone();
        results.push(r);
    }
    Ok((current, results))
}
