//! Maps event phrases (`Buyer paying Prosumer`) onto event bindings,
//! synthesising a fresh event type and binding when none matches.

use super::syntax::{stem, EventPhrase};
use crate::diagnostic::{codes, Diagnostic};
use crate::lang::{Binding, Category, DomainDecl, EventSignature, Ident, SymboleoSpec};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResolvedEvent {
    pub phrase: String,
    pub event: String,
    pub created: bool,
}

fn unresolvable(message: String) -> Diagnostic {
    Diagnostic::unlocated(codes::UNRESOLVABLE_PHRASE, message)
}

/// Matches a party by name or by role, ignoring case.
fn party(spec: &SymboleoSpec, word: &str) -> Result<Option<String>, Diagnostic> {
    let mut hits: Vec<&str> = spec
        .parties()
        .into_iter()
        .filter(|p| p.name.eq_ignore_ascii_case(word) || p.role.eq_ignore_ascii_case(word))
        .map(|p| p.name)
        .collect();
    hits.dedup();
    match hits.as_slice() {
        [] => Ok(None),
        [one] => Ok(Some((*one).to_owned())),
        _ => Err(unresolvable(format!(
            "`{word}` is ambiguous: it could be any of {}",
            hits.join(", ")
        ))),
    }
}

/// Matches an asset binding by its name or its type's name.
fn asset(spec: &SymboleoSpec, word: &str) -> Option<String> {
    let assets = || {
        spec.bindings
            .iter()
            .filter(|b| spec.binding_category(b.name.as_str()) == Some(Category::Asset))
    };
    assets()
        .find(|b| b.name.as_str().eq_ignore_ascii_case(word))
        .or_else(|| assets().find(|b| b.ty.as_str().eq_ignore_ascii_case(word)))
        .map(|b| b.name.name.clone())
}

fn pascal(s: &str) -> String {
    s.split('_')
        .filter(|p| !p.is_empty())
        .map(|p| {
            let mut cs = p.chars();
            let first = cs.next().unwrap().to_ascii_uppercase();
            std::iter::once(first).chain(cs).collect::<String>()
        })
        .collect()
}

fn name_taken(spec: &SymboleoSpec, name: &str) -> bool {
    spec.parameter(name).is_some()
        || spec.binding(name).is_some()
        || spec.decl(name).is_some()
        || spec.all_obligations().any(|o| o.id == name)
        || spec.power(name).is_some()
        || crate::lang::is_reserved(name)
}

fn fresh(spec: &SymboleoSpec, base: String) -> String {
    if !name_taken(spec, &base) {
        return base;
    }
    (2..)
        .map(|i| format!("{base}_{i}"))
        .find(|n| !name_taken(spec, n))
        .unwrap()
}

/// Inserts before the first element that sorts after `item`. Applied to a
/// common base list, insertions of distinct keys commute.
pub(crate) fn sorted_insert<T>(list: &mut Vec<T>, item: T, key: impl Fn(&T) -> String) {
    let k = key(&item);
    let at = list.iter().position(|x| key(x) > k).unwrap_or(list.len());
    list.insert(at, item);
}

pub fn resolve(
    spec: &mut SymboleoSpec,
    verbs: &[String],
    phrase: &EventPhrase,
) -> Result<ResolvedEvent, Diagnostic> {
    let subject = party(spec, &phrase.subject)?.ok_or_else(|| {
        unresolvable(format!("`{}` does not name a party of the contract", phrase.subject))
    })?;
    let verb = stem(&phrase.verb, verbs)
        .ok_or_else(|| unresolvable(format!("`{}` is not a known verb", phrase.verb)))?
        .to_owned();
    let object = match &phrase.object {
        None => None,
        Some(w) => Some(match party(spec, w)? {
            Some(p) => p,
            None => asset(spec, w).ok_or_else(|| {
                unresolvable(format!("`{w}` does not name a party or asset of the contract"))
            })?,
        }),
    };

    let matches = |b: &Binding| {
        b.signature.as_ref().is_some_and(|s| {
            s.subject == *subject.as_str()
                && s.verb == *verb.as_str()
                && s.object.as_ref().map(|o| o.name.as_str()) == object.as_deref()
        })
    };
    if let Some(b) = spec.event_bindings().find(|b| matches(b)) {
        return Ok(ResolvedEvent {
            phrase: phrase.to_string(),
            event: b.name.name.clone(),
            created: false,
        });
    }

    let mut parts = vec![verb.clone(), subject.clone()];
    parts.extend(object.clone());
    let decl_name = fresh(
        spec,
        format!("Evt{}", parts.iter().map(|p| pascal(p)).collect::<String>()),
    );
    let binding_name = fresh(
        spec,
        format!("evt_{}", parts.join("_").to_ascii_lowercase()),
    );
    sorted_insert(
        &mut spec.domain,
        DomainDecl {
            name: Ident::new(decl_name.clone()),
            category: Category::Event,
            attributes: Vec::new(),
            span: Default::default(),
        },
        |d| d.name.name.clone(),
    );
    sorted_insert(
        &mut spec.bindings,
        Binding {
            name: Ident::new(binding_name.clone()),
            ty: Ident::new(decl_name),
            signature: Some(EventSignature {
                subject: Ident::new(subject),
                verb: Ident::new(verb),
                object: object.map(Ident::new),
            }),
            assignments: Vec::new(),
            span: Default::default(),
        },
        |b| b.name.name.clone(),
    );
    Ok(ResolvedEvent {
        phrase: phrase.to_string(),
        event: binding_name,
        created: true,
    })
}
