//! Context-sensitive completion.
//!
//! Works on tokens rather than on a syntax tree so that it keeps working on
//! half-written, unparseable buffers: symbols are harvested from token
//! patterns and the grammatical position is recovered by scanning back from
//! the cursor to the innermost open call.

use super::ast::{AttrKind, Category, ParamKind};
use super::lexer::{is_ident_char, lex, Token, TokenKind};
use crate::diagnostic::Position;

const PROPOSITION_STARTERS: &[&str] = &[
    "Fulfilled",
    "Happens",
    "HappensAfter",
    "HappensBefore",
    "HappensWithin",
    "Violated",
    "false",
    "not",
    "true",
];

#[derive(Default, Debug)]
struct Symbols {
    /// (name, category, attributes)
    decls: Vec<(String, Category, Vec<String>)>,
    /// (name, declared type word)
    params: Vec<(String, String)>,
    /// (name, type)
    bindings: Vec<(String, String)>,
    obligations: Vec<String>,
}

impl Symbols {
    fn harvest(tokens: &[Token]) -> Self {
        let mut s = Symbols::default();
        let word = |i: usize| match tokens.get(i).map(|t| &t.kind) {
            Some(TokenKind::Ident(w)) => Some(w.as_str()),
            _ => None,
        };
        let is = |i: usize, k: &TokenKind| tokens.get(i).map(|t| &t.kind) == Some(k);
        let mut section = "";
        let mut i = 0;
        while i < tokens.len() {
            if let Some(w) = word(i) {
                match w {
                    "Domain" | "Declarations" | "Obligations" | "Powers" | "Constraints" => {
                        section = w;
                    }
                    "Contract" => {
                        section = "Contract";
                        // Contract Name ( p : T , ... )
                        let mut j = i + 3;
                        while j + 2 < tokens.len() && !is(j, &TokenKind::RParen) {
                            if let (Some(p), true, Some(t)) = (word(j), is(j + 1, &TokenKind::Colon), word(j + 2)) {
                                s.params.push((p.to_owned(), t.to_owned()));
                                j += 3;
                            } else {
                                j += 1;
                            }
                        }
                    }
                    _ => {}
                }
                let stmt_start = i == 0
                    || is(i - 1, &TokenKind::Semi)
                    || matches!(word(i - 1), Some("Domain" | "Declarations" | "Obligations" | "Powers"));
                match section {
                    "Domain" if stmt_start && word(i + 1) == Some("isA") => {
                        if let Some(cat) = word(i + 2).and_then(Category::from_keyword) {
                            let mut attrs = Vec::new();
                            let mut j = i + 3;
                            while j < tokens.len() && !is(j, &TokenKind::Semi) {
                                if is(j + 1, &TokenKind::Colon) {
                                    if let Some(a) = word(j) {
                                        attrs.push(a.to_owned());
                                    }
                                }
                                j += 1;
                            }
                            s.decls.push((w.to_owned(), cat, attrs));
                        }
                    }
                    "Declarations" if stmt_start && is(i + 1, &TokenKind::Colon) => {
                        if let Some(t) = word(i + 2) {
                            s.bindings.push((w.to_owned(), t.to_owned()));
                        }
                    }
                    "Obligations" if stmt_start && is(i + 1, &TokenKind::Colon) => {
                        s.obligations.push(w.to_owned());
                    }
                    "Powers" if w == "Impose" && is(i + 1, &TokenKind::LParen) && is(i + 3, &TokenKind::Colon) => {
                        if let Some(id) = word(i + 2) {
                            s.obligations.push(id.to_owned());
                        }
                    }
                    _ => {}
                }
            }
            i += 1;
        }
        s
    }

    fn category_of_type(&self, ty: &str) -> Option<Category> {
        self.decls.iter().find(|d| d.0 == ty).map(|d| d.1)
    }

    fn names_of(&self, cat: Category) -> Vec<String> {
        self.decls
            .iter()
            .filter(|d| d.1 == cat)
            .map(|d| d.0.clone())
            .collect()
    }

    fn bindings_of(&self, cat: Category) -> Vec<String> {
        self.bindings
            .iter()
            .filter(|b| self.category_of_type(&b.1) == Some(cat))
            .map(|b| b.0.clone())
            .collect()
    }

    fn parties(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .params
            .iter()
            .filter(|(_, t)| t == "Party" || self.category_of_type(t) == Some(Category::Role))
            .map(|(p, _)| p.clone())
            .collect();
        out.extend(self.bindings_of(Category::Role));
        out
    }

    fn params_of(&self, pred: impl Fn(&str) -> bool) -> Vec<String> {
        self.params
            .iter()
            .filter(|(_, t)| pred(t))
            .map(|(p, _)| p.clone())
            .collect()
    }

    fn events(&self) -> Vec<String> {
        self.bindings_of(Category::Event)
    }
}

fn owned(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| (*w).to_owned()).collect()
}

/// Returns the identifiers and keywords valid at `cursor`, filtered by the
/// partially typed word before it and sorted lexicographically. Never fails:
/// an unrecognised context yields an empty list.
pub fn complete(source: &str, cursor: Position) -> Vec<String> {
    let tokens = lex(source);
    let symbols = Symbols::harvest(&tokens);

    let prefix = word_prefix(source, cursor);
    // tokens strictly before the word being typed
    let ctx: Vec<&Token> = tokens
        .iter()
        .filter(|t| t.kind != TokenKind::Eof && t.span.end <= cursor)
        .filter(|t| !(prefix.is_some() && t.span.end == cursor && matches!(t.kind, TokenKind::Ident(_) | TokenKind::Number(_))))
        .collect();
    let prefix = prefix.unwrap_or_default();

    let mut out = candidates(&ctx, &symbols);
    out.retain(|c| c.starts_with(&prefix));
    out.sort();
    out.dedup();
    out
}

/// The identifier characters immediately before `cursor` on its line.
fn word_prefix(source: &str, cursor: Position) -> Option<String> {
    let line = source.split('\n').nth(cursor.line.checked_sub(1)? as usize)?;
    let upto: String = line.chars().take(cursor.col.saturating_sub(1) as usize).collect();
    let w: String = upto
        .chars()
        .rev()
        .take_while(|c| is_ident_char(*c))
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    (!w.is_empty()).then_some(w)
}

fn kind_word(t: &Token) -> Option<&str> {
    match &t.kind {
        TokenKind::Ident(w) => Some(w),
        _ => None,
    }
}

fn candidates(ctx: &[&Token], sy: &Symbols) -> Vec<String> {
    let Some(last) = ctx.last() else {
        return owned(&["Domain"]);
    };
    let section = ctx
        .iter()
        .rev()
        .filter_map(|t| kind_word(t))
        .find(|w| {
            matches!(
                *w,
                "Domain" | "endDomain" | "Contract" | "Declarations" | "Obligations" | "Powers" | "Constraints"
            )
        })
        .unwrap_or("");

    // attribute access: `evt.`
    if last.kind == TokenKind::Dot {
        if let Some(ev) = ctx.len().checked_sub(2).and_then(|i| kind_word(ctx[i])) {
            if let Some((_, ty)) = sy.bindings.iter().find(|b| b.0 == ev) {
                if let Some(d) = sy.decls.iter().find(|d| &d.0 == ty) {
                    return d.2.clone();
                }
            }
        }
        return Vec::new();
    }
    if matches!(
        last.kind,
        TokenKind::Lt | TokenKind::Le | TokenKind::Gt | TokenKind::Ge | TokenKind::EqSign | TokenKind::Assign
    ) {
        return sy.params.iter().map(|p| p.0.clone()).collect();
    }

    match section {
        "Domain" => {
            if kind_word(last) == Some("isA") {
                return Category::ALL.iter().map(|c| c.keyword().to_owned()).collect();
            }
            if last.kind == TokenKind::Colon {
                return AttrKind::ALL.iter().map(|k| k.keyword().to_owned()).collect();
            }
            if last.kind == TokenKind::Semi || kind_word(last) == Some("Domain") {
                return owned(&["endDomain"]);
            }
            return Vec::new();
        }
        "endDomain" => return owned(&["Contract"]),
        _ => {}
    }

    let call = enclosing_call(ctx);
    if section == "Contract" {
        if call.is_some() && last.kind == TokenKind::Colon {
            let mut out: Vec<String> = ParamKind::ALL.iter().map(|k| k.keyword().to_owned()).collect();
            out.extend(sy.names_of(Category::Role));
            return out;
        }
        if last.kind == TokenKind::RParen {
            return owned(&["Declarations"]);
        }
        return Vec::new();
    }

    if let Some((callee, arg, prop_ctx)) = call {
        let in_prop = |_: ()| {
            let mut out = owned(PROPOSITION_STARTERS);
            out.extend(sy.events());
            out
        };
        let boolean_op = matches!(kind_word(last), Some("and" | "or" | "not"));
        match (callee.as_str(), arg) {
            ("Happens" | "HappensBefore" | "HappensAfter" | "HappensWithin" | "RelativeTo" | "Precedes", 0) => {
                return sy.events()
            }
            ("HappensBefore" | "HappensAfter" | "Interval", _) => {
                return sy.params_of(|t| t == "Date")
            }
            ("HappensWithin", 1) => return owned(&["Interval", "RelativeTo"]),
            ("RelativeTo", 1) => {
                return if matches!(last.kind, TokenKind::Number(_)) {
                    owned(&["days", "months", "weeks"])
                } else {
                    Vec::new()
                }
            }
            ("Violated" | "Fulfilled" | "Suspend" | "Resume", _) => return sy.obligations.clone(),
            ("Obligation" | "Power", 0 | 1) => return sy.parties(),
            ("Obligation", 2 | 3) | ("Power", 2) => return in_prop(()),
            ("Power", 3) if !prop_ctx => return owned(&["Impose", "Resume", "Suspend", "Terminate"]),
            _ if prop_ctx || boolean_op => return in_prop(()),
            _ => {}
        }
        if section == "Declarations" {
            // signature: Type(subject, verb, object)
            return match arg {
                0 => sy.parties(),
                2 => {
                    let mut out = sy.parties();
                    out.extend(sy.bindings_of(Category::Asset));
                    out
                }
                _ => Vec::new(),
            };
        }
        return Vec::new();
    }

    let stmt_colon = last.kind == TokenKind::Colon;
    match section {
        "Declarations" if stmt_colon => sy.decls.iter().map(|d| d.0.clone()).collect(),
        "Declarations" if last.kind == TokenKind::Semi || kind_word(last) == Some("Declarations") => {
            owned(&["endDeclarations"])
        }
        "Obligations" if stmt_colon => owned(&["Obligation"]),
        "Obligations" if last.kind == TokenKind::Semi || kind_word(last) == Some("Obligations") => {
            owned(&["endObligations"])
        }
        "Powers" if stmt_colon => owned(&["Power"]),
        "Powers" if last.kind == TokenKind::Semi || kind_word(last) == Some("Powers") => owned(&["endPowers"]),
        "Constraints" if last.kind == TokenKind::Semi || kind_word(last) == Some("Constraints") => {
            owned(&["Precedes", "endConstraints"])
        }
        _ => match kind_word(last) {
            Some("endDeclarations") => owned(&["Obligations"]),
            Some("endObligations") => owned(&["Powers"]),
            Some("endPowers") => owned(&["Constraints", "endContract"]),
            Some("endConstraints") => owned(&["endContract"]),
            _ => Vec::new(),
        },
    }
}

/// Finds the innermost unclosed call before the cursor. Returns its callee,
/// the zero-based argument index at the cursor, and whether the cursor sits
/// inside a parenthesised sub-proposition of that argument.
fn enclosing_call(ctx: &[&Token]) -> Option<(String, usize, bool)> {
    let mut depth = 0usize;
    let mut commas = 0usize;
    let mut nested_prop = false;
    for (i, t) in ctx.iter().enumerate().rev() {
        match t.kind {
            TokenKind::RParen => depth += 1,
            TokenKind::LParen if depth > 0 => depth -= 1,
            TokenKind::LParen => {
                match i.checked_sub(1).and_then(|j| kind_word(ctx[j])) {
                    Some(w) if !matches!(w, "and" | "or" | "not") => {
                        return Some((w.to_owned(), commas, nested_prop));
                    }
                    _ => {
                        // grouping parenthesis inside a proposition
                        nested_prop = true;
                        commas = 0;
                    }
                }
            }
            TokenKind::Comma if depth == 0 => commas += 1,
            TokenKind::Semi if depth == 0 => return None,
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "Domain\n  Buyer isA Role;\n  Prosumer isA Role;\n  Dispatched isA Event with voltage: Number;\nendDomain\n\
Contract C(buyer: Buyer, prosumer: Prosumer, due: Date)\nDeclarations\n  evt_dispatch_energy: Dispatched;\n  evt_drop: Dispatched;\nendDeclarations\n\
Obligations\n  O1: Obligation(prosumer, buyer, true, Happens(evt_d";

    fn at_end(src: &str) -> Vec<String> {
        let line = src.split('\n').count() as u32;
        let col = src.split('\n').last().unwrap().chars().count() as u32 + 1;
        complete(src, Position::new(line, col))
    }

    #[test]
    fn event_position_filters_by_prefix() {
        assert_eq!(at_end(SRC), vec!["evt_dispatch_energy", "evt_drop"]);
        let stem = SRC.strip_suffix("evt_d").unwrap();
        assert_eq!(at_end(&format!("{stem}evt_di")), vec!["evt_dispatch_energy"]);
        assert!(at_end(&format!("{stem}zzz")).is_empty());
    }

    #[test]
    fn parameter_type_suggests_roles_and_kinds() {
        let src = "Domain\n  Buyer isA Role;\n  Prosumer isA Role;\nendDomain\nContract C(buyer: B";
        assert_eq!(at_end(src), vec!["Buyer"]);
        let src = "Domain\n  Buyer isA Role;\nendDomain\nContract C(x: ";
        assert_eq!(
            at_end(src),
            vec!["Buyer", "Date", "Money", "Number", "Party", "Percentage", "String"]
        );
    }

    #[test]
    fn attribute_access_and_parties() {
        let src = SRC.replace("Happens(evt_d", "evt_dispatch_energy.");
        assert_eq!(at_end(&src), vec!["voltage"]);
        let src = SRC.replace("prosumer, buyer, true, Happens(evt_d", "");
        assert_eq!(at_end(&src), vec!["buyer", "prosumer"]);
        let src = SRC.replace("true, Happens(evt_d", "(true and not (Vio");
        assert_eq!(at_end(&src), vec!["Violated"]);
    }

    #[test]
    fn unparseable_context_yields_nothing_rather_than_failing() {
        assert!(complete(")))(((", Position::new(1, 4)).is_empty());
        assert!(complete("", Position::new(7, 99)).len() <= 1);
    }
}
