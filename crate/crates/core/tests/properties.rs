//! Property suites: printer round trip, parser/completion totality,
//! refinement-language soundness, diff optimality, runtime semantics and
//! refinement algebra.

use chrono::{Duration as TimeDelta, NaiveDate, NaiveDateTime};
use proptest::prelude::*;
use std::collections::BTreeSet;
use symboleo::cnl;
use symboleo::diagnostic::{codes, Position};
use symboleo::fixtures;
use symboleo::lang::{self, *};
use symboleo::loc::{self, DiffStat};
use symboleo::runtime::{self, ContractState, ObligationState};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

// ---------------------------------------------------------------------------
// Spec generator
//
// Specs are built from a flat vector of random choices, so shrinking the
// vector shrinks the spec. Every choice respects the validator's rules, and
// the round-trip property asserts that this really holds.

struct Chooser {
    raw: Vec<u32>,
    at: usize,
}

impl Chooser {
    fn next(&mut self) -> u32 {
        let v = self.raw.get(self.at).copied().unwrap_or(0);
        self.at += 1;
        v
    }

    fn below(&mut self, n: usize) -> usize {
        if n == 0 {
            0
        } else {
            self.next() as usize % n
        }
    }

    fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    fn flip(&mut self) -> bool {
        self.below(2) == 1
    }

    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.below(xs.len())]
    }
}

struct Names(BTreeSet<String>);

impl Names {
    fn fresh(&mut self, c: &mut Chooser, upper: bool) -> String {
        const HEAD: &[u8] = b"abcdefghijklmnopqrstuvwxyz_";
        const TAIL: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
        loop {
            let mut s = String::new();
            let h = *c.pick(HEAD) as char;
            s.push(if upper { h.to_ascii_uppercase() } else { h });
            for _ in 0..c.range(0, 6) {
                s.push(*c.pick(TAIL) as char);
            }
            if !lang::is_reserved(&s) && self.0.insert(s.clone()) {
                return s;
            }
            // deterministic fallback when the choice stream is exhausted
            let n = self.0.len();
            let s = format!("{}{n}", if upper { "T" } else { "n" });
            if !lang::is_reserved(&s) && self.0.insert(s.clone()) {
                return s;
            }
        }
    }
}

fn id(s: &str) -> Ident {
    Ident::new(s)
}

fn date(c: &mut Chooser) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020 + c.below(8) as i32, 1, 1).unwrap() + TimeDelta::days(c.below(366) as i64)
}

fn number(c: &mut Chooser) -> f64 {
    let n = c.below(400_000) as f64 / 4.0;
    if c.below(5) == 0 {
        -n
    } else {
        n
    }
}

fn string(c: &mut Chooser) -> String {
    const CHARS: &[char] = &['a', 'Z', ' ', '7', '"', '\\', '\n', '\t', 'é', '—', ',', ';', '(', '/'];
    (0..c.range(0, 8)).map(|_| *c.pick(CHARS)).collect()
}

struct Ctx {
    params: Vec<Parameter>,
    domain: Vec<DomainDecl>,
    bindings: Vec<Binding>,
    obligation_ids: Vec<String>,
}

impl Ctx {
    fn parties(&self) -> Vec<String> {
        let role_decl = |t: &str| {
            self.domain
                .iter()
                .any(|d| d.name == t && d.category == Category::Role)
        };
        self.params
            .iter()
            .filter(|p| p.ty.kind() == ParamKind::Party)
            .map(|p| p.name.name.clone())
            .chain(
                self.bindings
                    .iter()
                    .filter(|b| role_decl(b.ty.as_str()))
                    .map(|b| b.name.name.clone()),
            )
            .collect()
    }

    fn decl(&self, name: &str) -> &DomainDecl {
        self.domain.iter().find(|d| d.name == name).unwrap()
    }

    fn events(&self) -> Vec<&Binding> {
        self.bindings
            .iter()
            .filter(|b| self.decl(b.ty.as_str()).category == Category::Event)
            .collect()
    }

    fn params_of(&self, pred: impl Fn(ParamKind) -> bool) -> Vec<String> {
        self.params
            .iter()
            .filter(|p| pred(p.ty.kind()))
            .map(|p| p.name.name.clone())
            .collect()
    }

    fn value_for(&self, c: &mut Chooser, kind: AttrKind) -> Expr {
        let ps = self.params_of(|k| kind.accepts(k));
        if !ps.is_empty() && c.flip() {
            return Expr::Param(id(c.pick(&ps)));
        }
        match kind {
            AttrKind::Number => Expr::Number(number(c)),
            AttrKind::Date => Expr::Date(date(c)),
            AttrKind::String => Expr::Str(string(c)),
        }
    }

    fn time_point(&self, c: &mut Chooser) -> TimePoint {
        let ps = self.params_of(|k| k == ParamKind::Date);
        if !ps.is_empty() && c.flip() {
            TimePoint::Param(id(c.pick(&ps)))
        } else {
            TimePoint::Date(date(c))
        }
    }

    fn prop(&self, c: &mut Chooser, depth: u32) -> Proposition {
        let events = self.events();
        let leaf_kinds = if events.is_empty() { 3 } else { 10 };
        let pick = if depth == 0 {
            c.below(leaf_kinds)
        } else {
            c.below(leaf_kinds + 3)
        };
        let event = |c: &mut Chooser| id(c.pick(&events).name.as_str());
        match pick {
            n if n == leaf_kinds => Proposition::negate(self.prop(c, depth - 1)),
            n if n == leaf_kinds + 1 => Proposition::and(self.prop(c, depth - 1), self.prop(c, depth - 1)),
            n if n == leaf_kinds + 2 => Proposition::or(self.prop(c, depth - 1), self.prop(c, depth - 1)),
            0 => Proposition::True,
            1 => Proposition::False,
            2 if self.obligation_ids.is_empty() => Proposition::True,
            2 => {
                let o = id(c.pick(&self.obligation_ids));
                if c.flip() {
                    Proposition::Violated(o)
                } else {
                    Proposition::Fulfilled(o)
                }
            }
            3 => Proposition::Happens(event(c)),
            4 => Proposition::HappensBefore(event(c), self.time_point(c)),
            5 => Proposition::HappensAfter(event(c), self.time_point(c)),
            6 => {
                let e = event(c);
                let (a, b) = (self.time_point(c), self.time_point(c));
                let (a, b) = match (a, b) {
                    (TimePoint::Date(x), TimePoint::Date(y)) => {
                        let (x, y) = (x.min(y), x.max(y) + TimeDelta::days(1));
                        (TimePoint::Date(x), TimePoint::Date(y))
                    }
                    other => other,
                };
                Proposition::HappensWithin(e, Interval::Absolute(a, b))
            }
            7 => Proposition::HappensWithin(
                event(c),
                Interval::RelativeTo(
                    event(c),
                    Duration {
                        magnitude: c.range(1, 40) as u32,
                        unit: *c.pick(&TimeUnit::ALL),
                    },
                ),
            ),
            8 | 9 => {
                let withattrs: Vec<(&Binding, &DomainDecl)> = events
                    .iter()
                    .map(|b| (*b, self.decl(b.ty.as_str())))
                    .filter(|(_, d)| !d.attributes.is_empty())
                    .collect();
                if withattrs.is_empty() {
                    return Proposition::Happens(event(c));
                }
                let (b, d) = *c.pick(&withattrs);
                let a = c.pick(&d.attributes).clone();
                let op = if a.kind == AttrKind::String {
                    CmpOp::Eq
                } else {
                    *c.pick(&[CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt])
                };
                Proposition::AttrCmp {
                    event: b.name.clone(),
                    attr: a.name.clone(),
                    op,
                    value: self.value_for(c, a.kind),
                }
            }
            _ => unreachable!(),
        }
    }

    fn obligation(&self, c: &mut Chooser, oid: &str) -> Obligation {
        let parties = self.parties();
        let i = c.below(parties.len());
        let j = (i + 1 + c.below(parties.len() - 1)) % parties.len();
        Obligation {
            id: id(oid),
            debtor: id(&parties[i]),
            creditor: id(&parties[j]),
            trigger: self.prop(c, 2),
            consequent: self.prop(c, 2),
            span: Default::default(),
        }
    }
}

fn build_spec(raw: Vec<u32>) -> SymboleoSpec {
    let c = &mut Chooser { raw, at: 0 };
    let names = &mut Names(BTreeSet::new());
    let mut ctx = Ctx {
        params: Vec::new(),
        domain: Vec::new(),
        bindings: Vec::new(),
        obligation_ids: Vec::new(),
    };
    let attributes = |c: &mut Chooser, names: &mut Names| -> Vec<Attribute> {
        (0..c.range(0, 3))
            .map(|_| Attribute {
                name: id(&names.fresh(c, false)),
                kind: *c.pick(&AttrKind::ALL),
            })
            .collect()
    };
    for category in [Category::Role, Category::Asset, Category::Event] {
        let lo = usize::from(category == Category::Role);
        for _ in 0..c.range(lo, 3) {
            let name = names.fresh(c, true);
            let attributes = if category == Category::Role { Vec::new() } else { attributes(c, names) };
            ctx.domain.push(DomainDecl {
                name: id(&name),
                category,
                attributes,
                span: Default::default(),
            });
        }
    }
    let roles: Vec<String> = ctx
        .domain
        .iter()
        .filter(|d| d.category == Category::Role)
        .map(|d| d.name.name.clone())
        .collect();
    // at least two parties, so debtor and creditor can differ
    for k in 0..c.range(2, 7) {
        let ty = if k < 2 || c.below(3) == 0 {
            if c.below(4) == 0 {
                ParamType::Kind(ParamKind::Party)
            } else {
                ParamType::Role(id(c.pick(&roles)))
            }
        } else {
            ParamType::Kind(*c.pick(&ParamKind::ALL))
        };
        ctx.params.push(Parameter {
            name: id(&names.fresh(c, false)),
            ty,
            span: Default::default(),
        });
    }
    let asset_names: Vec<String> = ctx
        .domain
        .iter()
        .filter(|d| d.category == Category::Asset)
        .map(|d| d.name.name.clone())
        .collect();
    let event_types: Vec<String> = ctx
        .domain
        .iter()
        .filter(|d| d.category == Category::Event)
        .map(|d| d.name.name.clone())
        .collect();
    for _ in 0..c.range(0, 2) {
        let name = names.fresh(c, false);
        ctx.bindings.push(Binding {
            name: id(&name),
            ty: id(c.pick(&roles)),
            signature: None,
            assignments: Vec::new(),
            span: Default::default(),
        });
    }
    let assign = |c: &mut Chooser, ctx: &Ctx, ty: &str| -> Vec<Assignment> {
        let d = ctx.decl(ty);
        let mut out = Vec::new();
        for a in &d.attributes {
            if c.flip() {
                out.push(Assignment {
                    attr: a.name.clone(),
                    value: ctx.value_for(c, a.kind),
                });
            }
        }
        out
    };
    if !asset_names.is_empty() {
        for _ in 0..c.range(0, 2) {
            let ty = c.pick(&asset_names).clone();
            let assignments = assign(c, &ctx, &ty);
            ctx.bindings.push(Binding {
                name: id(&names.fresh(c, false)),
                ty: id(&ty),
                signature: None,
                assignments,
                span: Default::default(),
            });
        }
    }
    for _ in 0..c.range(0, 4).min(4 * event_types.len()) {
        let ty = c.pick(&event_types).clone();
        let signature = if c.flip() {
            let parties = ctx.parties();
            let assets: Vec<String> = ctx
                .bindings
                .iter()
                .filter(|b| ctx.decl(b.ty.as_str()).category == Category::Asset)
                .map(|b| b.name.name.clone())
                .collect();
            let targets: Vec<String> = parties.iter().chain(&assets).cloned().collect();
            Some(EventSignature {
                subject: id(c.pick(&parties)),
                verb: id(&names.fresh(c, false)),
                object: c.flip().then(|| id(c.pick(&targets))),
            })
        } else {
            None
        };
        let assignments = assign(c, &ctx, &ty);
        ctx.bindings.push(Binding {
            name: id(&names.fresh(c, false)),
            ty: id(&ty),
            signature,
            assignments,
            span: Default::default(),
        });
    }
    let n_obl = c.range(0, 4);
    let n_pow = c.range(0, 3);
    ctx.obligation_ids = (0..n_obl).map(|_| names.fresh(c, false)).collect();
    let obligations = ctx
        .obligation_ids
        .clone()
        .iter()
        .map(|o| ctx.obligation(c, o))
        .collect();
    let mut powers = Vec::new();
    for _ in 0..n_pow {
        let pid = names.fresh(c, false);
        let parties = ctx.parties();
        let i = c.below(parties.len());
        let j = (i + 1 + c.below(parties.len() - 1)) % parties.len();
        let action = match c.below(4) {
            0 | 1 if !ctx.obligation_ids.is_empty() => {
                let targets: Vec<Ident> = (0..c.range(1, 2))
                    .map(|_| id(c.pick(&ctx.obligation_ids)))
                    .collect();
                if c.flip() {
                    PowerAction::Suspend(targets)
                } else {
                    PowerAction::Resume(targets)
                }
            }
            2 => {
                let oid = names.fresh(c, false);
                PowerAction::Impose(Box::new(ctx.obligation(c, &oid)))
            }
            _ => PowerAction::Terminate,
        };
        powers.push(Power {
            id: id(&pid),
            holder: id(&parties[i]),
            counterparty: id(&parties[j]),
            trigger: ctx.prop(c, 2),
            action,
            span: Default::default(),
        });
    }
    let events: Vec<String> = ctx.events().iter().map(|b| b.name.name.clone()).collect();
    let constraints = if events.is_empty() {
        Vec::new()
    } else {
        (0..c.range(0, 2))
            .map(|_| Constraint {
                first: id(c.pick(&events)),
                then: id(c.pick(&events)),
                span: Default::default(),
            })
            .collect()
    };
    SymboleoSpec {
        name: id(&names.fresh(c, true)),
        parameters: ctx.params,
        domain: ctx.domain,
        bindings: ctx.bindings,
        obligations,
        powers,
        constraints,
    }
}

fn arb_spec() -> impl Strategy<Value = SymboleoSpec> {
    prop::collection::vec(any::<u32>(), 300).prop_map(build_spec)
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn print_then_parse_is_identity(spec in arb_spec()) {
        let errors: Vec<_> = lang::validate(&spec).into_iter().filter(|d| d.is_error()).collect();
        prop_assert!(errors.is_empty(), "generator produced an invalid spec: {errors:?}");
        let text = lang::print(&spec);
        let (parsed, diags) = lang::parse(&text);
        prop_assert!(diags.is_empty(), "{diags:?}\n{text}");
        let parsed = parsed.unwrap();
        prop_assert_eq!(&parsed, &spec, "\n{}", text);
        prop_assert_eq!(lang::print(&parsed), text);
    }
}

// ---------------------------------------------------------------------------
// Totality: arbitrary input never panics the parser or completion.

fn mutate(base: &str, edits: &[(usize, u8, char)]) -> String {
    let mut chars: Vec<char> = base.chars().collect();
    for &(at, kind, ch) in edits {
        if chars.is_empty() {
            chars.push(ch);
            continue;
        }
        let at = at % chars.len();
        match kind % 3 {
            0 => {
                chars.remove(at);
            }
            1 => chars.insert(at, ch),
            _ => chars[at] = ch,
        }
    }
    chars.into_iter().collect()
}

proptest! {
    #![proptest_config(config(300))]

    #[test]
    fn parser_and_completion_are_total(
        edits in prop::collection::vec((any::<usize>(), any::<u8>(), any::<char>()), 0..12),
        noise in ".{0,80}",
        line in 1u32..40,
        col in 1u32..90,
    ) {
        for src in [mutate(fixtures::TE_SPEC, &edits), noise] {
            let (spec, diags) = lang::parse(&src);
            if spec.is_none() {
                prop_assert!(diags.iter().any(|d| d.code == codes::SYNTAX));
            }
            let _ = lang::check(&src);
            let _ = lang::complete(&src, Position::new(line, col));
        }
    }
}

// ---------------------------------------------------------------------------
// Refinement language: an independent recognizer over whitespace/comma
// tokens, compared with the real parser on generated and mutated strings.

mod oracle {
    use chrono::NaiveDate;

    const MONTHS: [&str; 12] = [
        "January", "February", "March", "April", "May", "June", "July", "August", "September",
        "October", "November", "December",
    ];
    const RESERVED: [&str; 7] = ["before", "after", "between", "within", "if", "of", "and"];
    const UNITS: [&str; 6] = ["day", "days", "week", "weeks", "month", "months"];

    fn words(s: &str) -> Vec<String> {
        s.replace(',', " , ").split_whitespace().map(str::to_owned).collect()
    }

    fn name(w: &str) -> bool {
        let b = w.as_bytes();
        !b.is_empty()
            && b[0].is_ascii_alphabetic()
            && b.iter().all(|c| c.is_ascii_alphanumeric() || *c == b'_')
            && !RESERVED.contains(&w)
    }

    fn gerund(w: &str) -> bool {
        w.len() >= 4 && w.ends_with("ing") && w.bytes().all(|c| c.is_ascii_lowercase())
    }

    /// Returns the date (None for a placeholder) and the words consumed.
    fn date(w: &[String]) -> Option<(Option<NaiveDate>, usize)> {
        if let Some(inner) = w.first()?.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            return name(inner).then_some((None, 1));
        }
        let [m, d, comma, y, ..] = w else { return None };
        let month = MONTHS.iter().position(|x| x == m)? as u32 + 1;
        let digits = |s: &str, n: &[usize]| n.contains(&s.len()) && s.bytes().all(|b| b.is_ascii_digit());
        if comma != "," || !digits(d, &[1, 2]) || !digits(y, &[4]) {
            return None;
        }
        let date = NaiveDate::from_ymd_opt(y.parse().ok()?, month, d.parse().ok()?)?;
        Some((Some(date), 4))
    }

    fn phrase(w: &[String]) -> bool {
        match w {
            [s, v] => name(s) && !gerund(s) && gerund(v),
            [s, v, o] => name(s) && !gerund(s) && gerund(v) && name(o),
            _ => false,
        }
    }

    pub fn accepts(text: &str) -> bool {
        let w = words(text);
        let Some(head) = w.first() else { return false };
        let rest = &w[1..];
        match head.as_str() {
            "before" | "after" => matches!(date(rest), Some((_, n)) if n == rest.len()),
            "between" => {
                let Some((a, n)) = date(rest) else { return false };
                if rest.get(n).map(String::as_str) != Some("and") {
                    return false;
                }
                let tail = &rest[n + 1..];
                match date(tail) {
                    Some((b, k)) if k == tail.len() => match (a, b) {
                        (Some(a), Some(b)) => a <= b,
                        _ => true,
                    },
                    _ => false,
                }
            }
            "within" => {
                let [n, unit, of, tail @ ..] = rest else { return false };
                n.bytes().all(|b| b.is_ascii_digit())
                    && !n.starts_with('0')
                    && n.parse::<u32>().is_ok()
                    && UNITS.contains(&unit.as_str())
                    && of == "of"
                    && phrase(tail)
            }
            "if" => phrase(rest),
            _ => false,
        }
    }
}

fn cnl_date() -> impl Strategy<Value = String> {
    prop_oneof![
        (2000i32..2100, 1u32..=12, 1u32..=28).prop_map(|(y, m, d)| {
            let date = NaiveDate::from_ymd_opt(y, m, d).unwrap();
            date.format("%B %-d, %Y").to_string()
        }),
        prop::sample::select(vec!["[START_DATE]", "[END_DATE]", "[due]", "[X1]"]).prop_map(String::from),
    ]
}

fn cnl_phrase() -> impl Strategy<Value = String> {
    (
        prop::sample::select(vec!["Buyer", "Prosumer", "energy", "Seller_2"]),
        prop::sample::select(vec!["paying", "dispatching", "inspecting", "shipping", "delivering"]),
        prop::option::of(prop::sample::select(vec!["Prosumer", "Buyer", "energy", "goods"])),
    )
        .prop_map(|(s, v, o)| match o {
            Some(o) => format!("{s} {v} {o}"),
            None => format!("{s} {v}"),
        })
}

fn cnl_sentence() -> impl Strategy<Value = String> {
    prop_oneof![
        cnl_date().prop_map(|d| format!("before {d}")),
        cnl_date().prop_map(|d| format!("after {d}")),
        (2000i32..2100, 1u32..=12, 1u32..=28, 0i64..400).prop_map(|(y, m, d, gap)| {
            let a = NaiveDate::from_ymd_opt(y, m, d).unwrap();
            let b = a + TimeDelta::days(gap);
            format!("between {} and {}", a.format("%B %-d, %Y"), b.format("%B %-d, %Y"))
        }),
        (
            1u32..1000,
            prop::sample::select(vec!["day", "days", "week", "weeks", "month", "months"]),
            cnl_phrase()
        )
            .prop_map(|(n, u, p)| format!("within {n} {u} of {p}")),
        cnl_phrase().prop_map(|p| format!("if {p}")),
    ]
}

fn word_mutation(s: &str, kind: u8, at: usize, word: &str) -> String {
    let mut w: Vec<String> = s.split(' ').map(str::to_owned).collect();
    let at = at % w.len();
    match kind % 5 {
        0 => {
            w.remove(at);
        }
        1 => w.insert(at, word.to_owned()),
        2 => w[at] = word.to_owned(),
        3 => {
            let other = (at + 1) % w.len();
            w.swap(at, other);
        }
        _ => {
            // character-level damage
            let mut cs: Vec<char> = w[at].chars().collect();
            if !cs.is_empty() {
                let i = word.len() % cs.len();
                cs[i] = word.chars().next().unwrap_or('x');
            }
            w[at] = cs.into_iter().collect();
        }
    }
    w.join(" ")
}

proptest! {
    #![proptest_config(config(500))]

    #[test]
    fn grammar_sentences_are_accepted(s in cnl_sentence()) {
        prop_assert!(oracle::accepts(&s), "oracle rejects {s}");
        let form = cnl::parse(&s);
        prop_assert!(form.is_ok(), "{s}: {form:?}");
        // canonical surface text parses back to the same form
        let form = form.unwrap();
        prop_assert_eq!(cnl::parse(&form.surface(false)).unwrap(), form);
    }

    #[test]
    fn parser_agrees_with_recognizer_on_mutations(
        s in cnl_sentence(),
        kind in any::<u8>(),
        at in any::<usize>(),
        word in prop::sample::select(vec![
            "of", "and", "before", "March", "31", "2024", ",", "0", "07", "weeks", "fortnight",
            "Paying", "paid", "ing", "x", "[bad name]", "[]", "February", "30", "Buyer", "inspecting", "12345",
        ]),
    ) {
        let m = word_mutation(&s, kind, at, word);
        let expected = oracle::accepts(&m);
        match cnl::parse(&m) {
            Ok(f) => prop_assert!(expected, "parser accepted {m:?} as {f:?}"),
            Err(d) => {
                prop_assert!(!expected, "parser rejected {m:?}: {}", d.message);
                prop_assert_eq!(d.code.as_str(), codes::NOT_IN_CNL);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Diff: optimality against exhaustive and dynamic-programming oracles.

/// Every alignment of `a` with `b`, scored as (matches, operations).
fn brute_force(a: &[u8], b: &[u8]) -> (usize, usize, usize) {
    fn go(a: &[u8], b: &[u8]) -> Vec<(usize, usize, usize)> {
        // (matches, substitutions, ops)
        let mut out = Vec::new();
        if a.is_empty() && b.is_empty() {
            return vec![(0, 0, 0)];
        }
        if !a.is_empty() {
            out.extend(go(&a[1..], b).into_iter().map(|(m, s, o)| (m, s, o + 1)));
        }
        if !b.is_empty() {
            out.extend(go(a, &b[1..]).into_iter().map(|(m, s, o)| (m, s, o + 1)));
        }
        if !a.is_empty() && !b.is_empty() {
            let eq = a[0] == b[0];
            out.extend(go(&a[1..], &b[1..]).into_iter().map(|(m, s, o)| {
                if eq {
                    (m + 1, s, o)
                } else {
                    (m, s + 1, o + 1)
                }
            }));
        }
        out
    }
    go(a, b)
        .into_iter()
        .max_by_key(|&(m, _, o)| (m, std::cmp::Reverse(o)))
        .unwrap()
}

/// Lexicographic DP: maximise matches, then minimise edit operations.
fn dp(a: &[u8], b: &[u8]) -> DiffStat {
    let (n, m) = (a.len(), b.len());
    // best[i][j] = (matches, -ops) for suffixes a[i..], b[j..]
    let mut best = vec![vec![(0i64, 0i64); m + 1]; n + 1];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            if i == n && j == m {
                continue;
            }
            let mut cands = Vec::new();
            if i < n {
                let (x, y) = best[i + 1][j];
                cands.push((x, y - 1));
            }
            if j < m {
                let (x, y) = best[i][j + 1];
                cands.push((x, y - 1));
            }
            if i < n && j < m {
                let (x, y) = best[i + 1][j + 1];
                cands.push(if a[i] == b[j] { (x + 1, y) } else { (x, y - 1) });
            }
            best[i][j] = cands.into_iter().max().unwrap();
        }
    }
    let (l, negops) = best[0][0];
    let (l, ops) = (l as usize, (-negops) as usize);
    let subs = n + m - 2 * l - ops;
    DiffStat {
        added: m - l - subs,
        modified: subs,
        deleted: n - l - subs,
    }
}

fn seq(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..4, 0..=max)
}

proptest! {
    #![proptest_config(config(500))]

    #[test]
    fn diff_matches_dynamic_programming_oracle(a in seq(50), b in seq(50)) {
        prop_assert_eq!(loc::diff(&a, &b), dp(&a, &b));
    }

    #[test]
    fn diff_matches_exhaustive_search_on_short_inputs(a in seq(6), b in seq(6)) {
        let (l, s, _) = brute_force(&a, &b);
        let expected = DiffStat {
            added: b.len() - l - s,
            modified: s,
            deleted: a.len() - l - s,
        };
        prop_assert_eq!(loc::diff(&a, &b), expected);
    }

    #[test]
    fn diff_is_symmetric(a in seq(30), b in seq(30)) {
        prop_assert_eq!(loc::diff(&a, &b), loc::diff(&b, &a).swapped());
    }

    #[test]
    fn line_diff_agrees_with_sequence_diff(a in seq(20), b in seq(20)) {
        let text = |v: &[u8]| v.iter().map(|x| format!("line {x}\n")).collect::<String>();
        prop_assert_eq!(loc::diff_lines(&text(&a), &text(&b)), loc::diff(&a, &b));
    }
}

// ---------------------------------------------------------------------------
// Runtime: small contracts checked against a declarative model over every
// submission order of up to four events.

#[derive(Clone, Copy, Debug)]
enum Goal {
    Happens,
    Before(u32),
    After(u32),
    Within(u32, u32),
}

fn day(d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 1, d).unwrap()
}

fn at(d: u32, h: u32) -> NaiveDateTime {
    day(d).and_hms_opt(h, 0, 0).unwrap()
}

const EVENTS: [&str; 3] = ["ea", "eb", "ec"];

#[derive(Clone, Debug)]
struct Clause {
    trigger: Option<usize>,
    event: usize,
    goal: Goal,
}

fn small_spec(clauses: &[Clause]) -> SymboleoSpec {
    let goal = |g: Goal, e: usize| {
        let e = EVENTS[e];
        match g {
            Goal::Happens => format!("Happens({e})"),
            Goal::Before(d) => format!("HappensBefore({e}, {})", day(d)),
            Goal::After(d) => format!("HappensAfter({e}, {})", day(d)),
            Goal::Within(a, b) => format!("HappensWithin({e}, Interval({}, {}))", day(a), day(b)),
        }
    };
    let obligations: String = clauses
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let trig = c.trigger.map_or("true".to_owned(), |t| format!("Happens({})", EVENTS[t]));
            format!("  o{i}: Obligation(x, y, {trig}, {});\n", goal(c.goal, c.event))
        })
        .collect();
    let src = format!(
        "Domain\n  P isA Role;\n  E isA Event;\nendDomain\nContract Small(x: P, y: P)\n\
         Declarations\n  ea: E;\n  eb: E;\n  ec: E;\nendDeclarations\n\
         Obligations\n{obligations}endObligations\nPowers\nendPowers\nendContract\n"
    );
    let (spec, d) = lang::check(&src);
    spec.unwrap_or_else(|| panic!("{d:?}\n{src}"))
}

/// Final obligation state given the accepted occurrences and final clock.
fn model(c: &Clause, log: &[(usize, NaiveDateTime)], clock: NaiveDateTime) -> ObligationState {
    let active = match c.trigger {
        None => true,
        Some(t) => log.iter().any(|(e, _)| *e == t),
    };
    if !active {
        return ObligationState::Created;
    }
    let times = log.iter().filter(|(e, _)| *e == c.event).map(|(_, t)| *t);
    let midnight = |d: u32| day(d).and_hms_opt(0, 0, 0).unwrap();
    let (satisfied, closes) = match c.goal {
        Goal::Happens => (times.count() > 0, None),
        Goal::Before(d) => (times.clone().any(|t| t < midnight(d)), Some(midnight(d))),
        Goal::After(d) => (times.clone().any(|t| t >= midnight(d + 1)), None),
        Goal::Within(a, b) => (
            times.clone().any(|t| t >= midnight(a) && t < midnight(b + 1)),
            Some(midnight(b + 1)),
        ),
    };
    if satisfied {
        ObligationState::Fulfilled
    } else if closes.is_some_and(|end| clock >= end) {
        ObligationState::Violated
    } else {
        ObligationState::InEffect
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn arb_goal() -> impl Strategy<Value = Goal> {
    prop_oneof![
        Just(Goal::Happens),
        (2u32..8).prop_map(Goal::Before),
        (1u32..7).prop_map(Goal::After),
        (1u32..7, 0u32..3).prop_map(|(a, w)| Goal::Within(a, a + w)),
    ]
}

fn arb_clause() -> impl Strategy<Value = Clause> {
    (prop::option::of(0usize..3), 0usize..3, arb_goal()).prop_map(|(trigger, event, goal)| Clause {
        trigger,
        event,
        goal,
    })
}

proptest! {
    #![proptest_config(config(150))]

    #[test]
    fn runtime_agrees_with_model_for_every_ordering(
        clauses in prop::collection::vec(arb_clause(), 1..=3),
        occurrences in prop::collection::vec((0usize..3, 1u32..8, 0u32..24), 0..=4),
        end in prop::option::of((1u32..10, 0u32..24)),
    ) {
        let spec = small_spec(&clauses);
        let params = serde_json::json!({"x": "X Ltd", "y": "Y Ltd"});
        let start = at(1, 0);
        for order in permutations(occurrences.len()) {
            let mut inst = runtime::instantiate(&spec, params.as_object().unwrap(), start).unwrap();
            let mut accepted = Vec::new();
            let mut clock = start;
            for &k in &order {
                let (e, d, h) = occurrences[k];
                let t = at(d, h);
                let r = inst.submit_event(EVENTS[e], t, &serde_json::Map::new());
                if t < clock {
                    let err = r.expect_err("time regression must be rejected");
                    prop_assert_eq!(err[0].code.as_str(), codes::TIME_REGRESSION);
                } else {
                    prop_assert!(r.is_ok());
                    clock = t;
                    accepted.push((e, t));
                }
            }
            if let Some((d, h)) = end {
                let t = at(d, h);
                if t >= clock {
                    inst.tick(t).unwrap();
                    clock = t;
                }
            }
            let expected: Vec<ObligationState> =
                clauses.iter().map(|c| model(c, &accepted, clock)).collect();
            let actual: Vec<ObligationState> = (0..clauses.len())
                .map(|i| inst.obligation_state(&format!("o{i}")).unwrap())
                .collect();
            prop_assert_eq!(&actual, &expected, "order {:?} log {:?}", order, accepted);
            let all_done = expected.iter().all(|s| *s == ObligationState::Fulfilled);
            prop_assert_eq!(inst.state() == ContractState::Fulfilled, all_done);
        }
    }
}

// ---------------------------------------------------------------------------
// Refinement algebra on the fixture pair.

fn slot_refinement() -> impl Strategy<Value = String> {
    let date = prop_oneof![
        (2024i32..2026, 1u32..=12, 1u32..=28)
            .prop_map(|(y, m, d)| NaiveDate::from_ymd_opt(y, m, d).unwrap().format("%B %-d, %Y").to_string()),
        prop::sample::select(vec!["[START_DATE]", "[END_DATE]", "[DUE_DATE]"]).prop_map(String::from),
    ];
    let phrase = (
        prop::sample::select(vec!["Buyer", "Prosumer"]),
        prop::sample::select(vec!["paying", "dispatching", "inspecting", "delivering"]),
        prop::option::of(prop::sample::select(vec!["Buyer", "Prosumer", "energy"])),
    )
        .prop_map(|(s, v, o)| match o {
            Some(o) => format!("{s} {v} {o}"),
            None => format!("{s} {v}"),
        });
    prop_oneof![
        date.clone().prop_map(|d| format!("before {d}")),
        date.clone().prop_map(|d| format!("after {d}")),
        (date.clone(), date).prop_map(|(a, b)| format!("between {a} and {b}")),
        (1u32..10, prop::sample::select(vec!["days", "weeks", "months"]), phrase.clone())
            .prop_map(|(n, u, p)| format!("within {n} {u} of {p}")),
        phrase.prop_map(|p| format!("if {p}")),
    ]
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn refinements_never_delete_lines_and_keep_specs_valid(r in slot_refinement(), slot in prop::sample::select(vec!["P1", "P2"])) {
        let pair = fixtures::te_pair();
        if let Ok(res) = cnl::apply(&pair, slot, &r) {
            prop_assert_eq!(res.spec_delta.deleted, 0, "{}", r);
            let (spec, diags) = lang::check(&res.refined_spec);
            prop_assert!(spec.is_some(), "{r}: {diags:?}");
            let base = lang::print(&pair.spec);
            prop_assert_eq!(res.spec_delta, loc::diff_lines(&base, &res.refined_spec));
        }
    }

    #[test]
    fn refinements_on_different_slots_commute(a in slot_refinement(), b in slot_refinement()) {
        let pair = fixtures::te_pair();
        let ab = cnl::apply(&pair, "P1", &a).and_then(|r| cnl::apply(&r.pair, "P2", &b));
        let ba = cnl::apply(&pair, "P2", &b).and_then(|r| cnl::apply(&r.pair, "P1", &a));
        match (ab, ba) {
            (Ok(x), Ok(y)) => {
                prop_assert_eq!(&x.refined_spec, &y.refined_spec);
                prop_assert_eq!(x.refined_template_text, y.refined_template_text);
                prop_assert_eq!(x.pair.spec, y.pair.spec);
            }
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "only one order succeeded: {:?} / {:?}", x.err(), y.err()),
        }
    }
}


/// Every suite above, for callers that include this file as a module.
#[allow(dead_code)]
pub(crate) const SUITES: &[(&str, fn())] = &[
    ("print_then_parse_is_identity", print_then_parse_is_identity),
    ("parser_and_completion_are_total", parser_and_completion_are_total),
    ("grammar_sentences_are_accepted", grammar_sentences_are_accepted),
    ("parser_agrees_with_recognizer_on_mutations", parser_agrees_with_recognizer_on_mutations),
    ("diff_matches_dynamic_programming_oracle", diff_matches_dynamic_programming_oracle),
    ("diff_matches_exhaustive_search_on_short_inputs", diff_matches_exhaustive_search_on_short_inputs),
    ("diff_is_symmetric", diff_is_symmetric),
    ("line_diff_agrees_with_sequence_diff", line_diff_agrees_with_sequence_diff),
    ("runtime_agrees_with_model_for_every_ordering", runtime_agrees_with_model_for_every_ordering),
    ("refinements_never_delete_lines_and_keep_specs_valid", refinements_never_delete_lines_and_keep_specs_valid),
    ("refinements_on_different_slots_commute", refinements_on_different_slots_commute),
];
