//! Natural-language contract templates and their pairing with a formal
//! specification.
//!
//! Clause text carries `<name>` parameter placeholders and `[Pk]` slot
//! markers. A slot names the obligation it refines; a [`TemplatePair`] ties a
//! template to a spec through a total parameter map.

use crate::diagnostic::{codes, Diagnostic};
use crate::lang::{ParamKind, SymboleoSpec};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

fn default_verbs() -> Vec<String> {
    ["pay", "dispatch", "deliver", "inspect"].map(String::from).to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateParam {
    pub name: String,
    pub kind: ParamKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementSlot {
    pub id: String,
    /// Zero-based clause index.
    pub clause: usize,
    /// Character offset of the `[id]` marker inside the clause.
    pub anchor: usize,
    pub obligation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractTemplate {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preamble: Option<String>,
    pub clauses: Vec<String>,
    pub parameters: Vec<TemplateParam>,
    pub slots: Vec<RefinementSlot>,
    /// Verb lexicon for event phrases (stems).
    #[serde(default = "default_verbs")]
    pub verbs: Vec<String>,
}

/// Adjunct text attached to a slot by refinement.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotFill {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditional: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplatePair {
    pub template: ContractTemplate,
    #[serde(with = "spec_text")]
    pub spec: SymboleoSpec,
    /// Template parameter name -> spec parameter name.
    pub param_map: BTreeMap<String, String>,
    #[serde(default)]
    pub fills: BTreeMap<String, SlotFill>,
}

/// Specs travel as canonical text inside pair JSON.
mod spec_text {
    use crate::lang::{check, print, SymboleoSpec};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(spec: &SymboleoSpec, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&print(spec))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SymboleoSpec, D::Error> {
        let text = String::deserialize(d)?;
        match check(&text) {
            (Some(spec), _) => Ok(spec),
            (None, diags) => Err(D::Error::custom(format!(
                "embedded spec is invalid: {}",
                diags.first().map(|d| d.to_string()).unwrap_or_default()
            ))),
        }
    }
}

impl ContractTemplate {
    pub fn from_json(text: &str) -> Result<Self, Vec<Diagnostic>> {
        let tpl: ContractTemplate = serde_json::from_str(text).map_err(|e| {
            vec![Diagnostic::unlocated(
                codes::TEMPLATE_INVALID,
                format!("template JSON: {e}"),
            )]
        })?;
        let diags = tpl.check();
        if diags.is_empty() {
            Ok(tpl)
        } else {
            Err(diags)
        }
    }

    pub fn param(&self, name: &str) -> Option<&TemplateParam> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn slot(&self, id: &str) -> Option<&RefinementSlot> {
        self.slots.iter().find(|s| s.id == id)
    }

    /// Structural well-formedness: every placeholder is declared, every slot
    /// marker sits where its slot says, names are unique.
    pub fn check(&self) -> Vec<Diagnostic> {
        let bad = |m: String| Diagnostic::unlocated(codes::TEMPLATE_INVALID, m);
        let mut out = Vec::new();

        let mut seen = BTreeSet::new();
        for p in &self.parameters {
            if !seen.insert(p.name.as_str()) {
                out.push(bad(format!("parameter `{}` declared twice", p.name)));
            }
        }
        let texts = self.preamble.iter().chain(&self.clauses);
        for text in texts {
            for (_, name) in placeholders(text) {
                if self.param(name).is_none() {
                    out.push(bad(format!("placeholder `<{name}>` has no parameter")));
                }
            }
        }

        let mut seen = BTreeSet::new();
        for s in &self.slots {
            if !seen.insert(s.id.as_str()) {
                out.push(bad(format!("slot `{}` declared twice", s.id)));
                continue;
            }
            let Some(clause) = self.clauses.get(s.clause) else {
                out.push(bad(format!("slot `{}` refers to missing clause {}", s.id, s.clause)));
                continue;
            };
            let marker = format!("[{}]", s.id);
            let at = clause.char_indices().nth(s.anchor).map(|(b, _)| b);
            if at.map_or(true, |b| !clause[b..].starts_with(&marker)) {
                out.push(bad(format!(
                    "slot `{}` marker not found at offset {} of clause {}",
                    s.id, s.anchor, s.clause
                )));
            }
        }
        for (i, clause) in self.clauses.iter().enumerate() {
            for (_, id) in markers(clause) {
                if !self.slots.iter().any(|s| s.id == id && s.clause == i) {
                    out.push(bad(format!("marker `[{id}]` in clause {i} has no slot")));
                }
            }
        }
        out
    }
}

/// `<name>` occurrences as (byte offset, name).
pub fn placeholders(text: &str) -> Vec<(usize, &str)> {
    delimited(text, '<', '>', |n| {
        n.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
    })
}

/// `[Pk]` slot markers as (byte offset, id).
pub fn markers(text: &str) -> Vec<(usize, &str)> {
    delimited(text, '[', ']', |n| {
        n.len() > 1 && n.starts_with('P') && n[1..].chars().all(|c| c.is_ascii_digit())
    })
}

fn delimited(text: &str, open: char, close: char, ok: impl Fn(&str) -> bool) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut rest = 0;
    while let Some(i) = text[rest..].find(open) {
        let start = rest + i;
        let Some(j) = text[start + 1..].find(close) else { break };
        let name = &text[start + 1..start + 1 + j];
        if ok(name) {
            out.push((start, name));
            rest = start + j + 2;
        } else {
            rest = start + 1;
        }
    }
    out
}

/// Binds a template to a spec. The map must be total over template
/// parameters and kind-preserving; every slot must name a spec obligation.
pub fn bind(
    template: ContractTemplate,
    spec: SymboleoSpec,
    param_map: BTreeMap<String, String>,
) -> Result<TemplatePair, Vec<Diagnostic>> {
    let mut out = template.check();
    for p in &template.parameters {
        let Some(target) = param_map.get(&p.name) else {
            out.push(Diagnostic::unlocated(
                codes::UNMAPPED_PARAMETER,
                format!("template parameter `{}` is not mapped", p.name),
            ));
            continue;
        };
        match spec.parameter(target) {
            None => out.push(Diagnostic::unlocated(
                codes::UNMAPPED_PARAMETER,
                format!("`{}` maps to unknown spec parameter `{target}`", p.name),
            )),
            Some(sp) if sp.ty.kind() != p.kind => out.push(Diagnostic::unlocated(
                codes::PARAM_KIND_MISMATCH,
                format!(
                    "`{}` is {} but spec parameter `{target}` is {}",
                    p.name,
                    p.kind,
                    sp.ty.kind()
                ),
            )),
            Some(_) => {}
        }
    }
    for key in param_map.keys() {
        if template.param(key).is_none() {
            out.push(Diagnostic::unlocated(
                codes::UNMAPPED_PARAMETER,
                format!("map entry `{key}` is not a template parameter"),
            ));
        }
    }
    for s in &template.slots {
        if spec.obligation(&s.obligation).is_none() {
            out.push(Diagnostic::unlocated(
                codes::SLOT_MISSING_OBLIGATION,
                format!("slot `{}` refers to unknown obligation `{}`", s.id, s.obligation),
            ));
        }
    }
    if out.is_empty() {
        Ok(TemplatePair {
            template,
            spec,
            param_map,
            fills: BTreeMap::new(),
        })
    } else {
        Err(out)
    }
}

/// Identity map over template parameter names.
pub fn identity_map(template: &ContractTemplate) -> BTreeMap<String, String> {
    template
        .parameters
        .iter()
        .map(|p| (p.name.clone(), p.name.clone()))
        .collect()
}

/// Checks that a literal is acceptable for a parameter kind.
pub fn literal_fits(kind: ParamKind, value: &str) -> bool {
    let v = value.trim();
    match kind {
        ParamKind::Date => NaiveDate::parse_from_str(v, "%Y-%m-%d").is_ok(),
        ParamKind::Number | ParamKind::Money => v.parse::<f64>().is_ok_and(f64::is_finite),
        ParamKind::Percentage => v
            .strip_suffix('%')
            .unwrap_or(v)
            .trim_end()
            .parse::<f64>()
            .is_ok_and(f64::is_finite),
        ParamKind::Party | ParamKind::String => !v.is_empty(),
    }
}

impl TemplatePair {
    /// Clause text with fills applied; placeholders are kept.
    pub fn refined_text(&self) -> String {
        self.render(|name| format!("<{name}>"), true)
    }

    /// Concrete contract text. Unrefined slot markers are dropped.
    pub fn instantiate(&self, values: &BTreeMap<String, String>) -> Result<String, Vec<Diagnostic>> {
        let mut out = Vec::new();
        for p in &self.template.parameters {
            match values.get(&p.name) {
                None => out.push(Diagnostic::unlocated(
                    codes::MISSING_VALUE,
                    format!("no value for `{}`", p.name),
                )),
                Some(v) if !literal_fits(p.kind, v) => out.push(Diagnostic::unlocated(
                    codes::VALUE_KIND_MISMATCH,
                    format!("`{v}` is not a valid {} for `{}`", p.kind, p.name),
                )),
                Some(_) => {}
            }
        }
        if !out.is_empty() {
            return Err(out);
        }
        Ok(self.render(|name| values[name].clone(), false))
    }

    fn render(&self, value: impl Fn(&str) -> String, keep_markers: bool) -> String {
        let subst = |text: &str| -> String {
            let mut s = String::new();
            let mut last = 0;
            for (at, name) in placeholders(text) {
                s.push_str(&text[last..at]);
                if self.template.param(name).is_some() {
                    s.push_str(&value(name));
                } else {
                    s.push_str(&text[at..at + name.len() + 2]);
                }
                last = at + name.len() + 2;
            }
            s.push_str(&text[last..]);
            s
        };

        let mut out = String::new();
        if let Some(p) = &self.template.preamble {
            out.push_str(&subst(p));
            out.push_str("\n\n");
        }
        for (i, clause) in self.template.clauses.iter().enumerate() {
            let mut text = String::new();
            let mut last = 0;
            for (at, id) in markers(clause) {
                let before = &clause[last..at];
                let fill = self.fills.get(id);
                let adjunct: Vec<&str> = fill
                    .map(|f| f.temporal.iter().chain(&f.conditional).map(String::as_str).collect())
                    .unwrap_or_default();
                if !adjunct.is_empty() {
                    text.push_str(before);
                    text.push_str(&adjunct.join(" "));
                } else if keep_markers {
                    text.push_str(before);
                    text.push_str(&clause[at..at + id.len() + 2]);
                } else {
                    text.push_str(before.strip_suffix(' ').unwrap_or(before));
                }
                last = at + id.len() + 2;
            }
            text.push_str(&clause[last..]);
            out.push_str(&format!("{}. {}\n", i + 1, subst(&text)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::lang::check;

    fn pair() -> TemplatePair {
        let tpl = ContractTemplate::from_json(fixtures::TE_TEMPLATE).unwrap();
        let spec = check(fixtures::TE_SPEC).0.unwrap();
        let map = identity_map(&tpl);
        bind(tpl, spec, map).unwrap()
    }

    #[test]
    fn scanners_find_placeholders_and_markers() {
        let t = "pay <amount> to <x> [P2] by a<b [Q] [P]";
        assert_eq!(placeholders(t), vec![(4, "amount"), (16, "x")]);
        assert_eq!(markers(t), vec![(20, "P2")]);
    }

    #[test]
    fn fixture_binds_with_identity_map() {
        let p = pair();
        assert_eq!(p.template.slots.len(), 2);
        assert!(p.refined_text().contains("to the Buyer [P1]."));
    }

    #[test]
    fn missing_map_entry_is_reported() {
        let p = pair();
        let mut map = p.param_map.clone();
        map.remove("amount");
        let err = bind(p.template, p.spec, map).unwrap_err();
        assert_eq!(err.len(), 1);
        assert_eq!(err[0].code, codes::UNMAPPED_PARAMETER);
        assert!(err[0].message.contains("amount"));
    }

    #[test]
    fn kind_changing_map_is_rejected() {
        let p = pair();
        let mut map = p.param_map.clone();
        map.insert("amount".into(), "location".into());
        let err = bind(p.template, p.spec, map).unwrap_err();
        assert_eq!(err[0].code, codes::PARAM_KIND_MISMATCH);
    }

    #[test]
    fn slot_without_obligation_is_rejected() {
        let mut p = pair();
        p.template.slots[0].obligation = "O_nothing".into();
        let map = p.param_map.clone();
        let err = bind(p.template, p.spec, map).unwrap_err();
        assert_eq!(err[0].code, codes::SLOT_MISSING_OBLIGATION);
    }

    #[test]
    fn instantiation_checks_values() {
        let p = pair();
        let mut values: BTreeMap<String, String> = p
            .template
            .parameters
            .iter()
            .map(|t| (t.name.clone(), "1".to_owned()))
            .collect();
        values.insert("date".into(), "2024-01-01".into());
        let text = p.instantiate(&values).unwrap();
        assert!(text.contains("to the Buyer.\n"), "{text}");
        assert!(!text.contains('<'));

        values.insert("amount".into(), "lots".into());
        values.remove("date");
        let err = p.instantiate(&values).unwrap_err();
        let codes: Vec<_> = err.iter().map(|d| d.code.as_str()).collect();
        assert_eq!(codes, [codes::MISSING_VALUE, codes::VALUE_KIND_MISMATCH]);
    }

    #[test]
    fn misplaced_anchor_is_structural_error() {
        let mut tpl = ContractTemplate::from_json(fixtures::TE_TEMPLATE).unwrap();
        tpl.slots[0].anchor += 1;
        assert_eq!(tpl.check()[0].code, codes::TEMPLATE_INVALID);
    }

    #[test]
    fn pair_json_round_trips() {
        let p = pair();
        let json = serde_json::to_string(&p).unwrap();
        let back: TemplatePair = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }
}
