use symboleo::diagnostic::{codes, Position};
use symboleo::fixtures::TE_SPEC;
use symboleo::lang::{self, Proposition};

fn wrap(obligations: &str, powers: &str) -> String {
    format!(
        "Domain\n  Buyer isA Role;\n  Prosumer isA Role;\n  Dispatched isA Event;\nendDomain\n\
         Contract C(buyer: Buyer, prosumer: Prosumer)\n\
         Declarations\n  evt_dispatch_energy: Dispatched;\nendDeclarations\n\
         Obligations\n{obligations}endObligations\nPowers\n{powers}endPowers\nendContract\n"
    )
}

#[test]
fn obligation_statement_parses_into_its_parts() {
    let src = wrap("  O1: Obligation(prosumer, buyer, true, Happens(evt_dispatch_energy));\n", "");
    let (spec, diags) = lang::check(&src);
    assert!(diags.is_empty(), "{diags:?}");
    let spec = spec.unwrap();
    let o = &spec.obligations[0];
    assert_eq!(o.id, "O1");
    assert_eq!(o.debtor, "prosumer");
    assert_eq!(o.creditor, "buyer");
    assert_eq!(o.trigger, Proposition::True);
    assert_eq!(o.consequent, Proposition::Happens(lang::Ident::new("evt_dispatch_energy")));
}

#[test]
fn empty_sections_are_fine() {
    let (spec, diags) = lang::check(&wrap("", ""));
    assert!(diags.is_empty());
    let spec = spec.unwrap();
    assert!(spec.obligations.is_empty() && spec.powers.is_empty());
}

#[test]
fn missing_semicolon_is_a_syntax_error_at_the_next_token() {
    let src = wrap("  O1: Obligation(prosumer, buyer, true, Happens(evt_dispatch_energy))\n", "");
    let (spec, diags) = lang::parse(&src);
    assert!(spec.is_none());
    assert_eq!(diags.len(), 1, "{diags:?}");
    assert_eq!(diags[0].code, codes::SYNTAX);
    // the offending token is `endObligations` on the following line
    assert_eq!(diags[0].range.start, Position::new(12, 1));
}

#[test]
fn duplicate_obligation_ids_report_once_on_the_second() {
    let src = wrap(
        "  O1: Obligation(prosumer, buyer, true, true);\n  O1: Obligation(buyer, prosumer, true, true);\n",
        "",
    );
    let (spec, diags) = lang::check(&src);
    assert!(spec.is_none());
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].code, codes::DUPLICATE_ID);
    assert_eq!(diags[0].range.start.line, 12);
}

#[test]
fn unresolved_event_is_named() {
    let src = wrap("  O1: Obligation(prosumer, buyer, true, Happens(evt_ship));\n", "");
    let (_, diags) = lang::check(&src);
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].code, codes::UNRESOLVED);
    assert!(diags[0].message.contains("evt_ship"));
}

#[test]
fn seeded_faults_map_to_their_codes() {
    let cases = [
        ("  O1: Obligation(buyer, buyer, true, true);\n", "", codes::SAME_PARTY),
        ("  O1: Obligation(prosumer, buyer, true, true);\n", "  P1: Power(buyer, prosumer, true, Suspend(O9));\n", codes::UNRESOLVED),
        ("  O1: Obligation(evt_dispatch_energy, buyer, true, true);\n", "", codes::KIND_MISMATCH),
        (
            "  O1: Obligation(prosumer, buyer, true, HappensWithin(evt_dispatch_energy, Interval(2024-05-01, 2024-04-01)));\n",
            "",
            codes::INVERTED_INTERVAL,
        ),
        (
            "  O1: Obligation(prosumer, buyer, true, HappensWithin(evt_dispatch_energy, RelativeTo(evt_dispatch_energy, 0 weeks)));\n",
            "",
            codes::BAD_DURATION,
        ),
    ];
    for (o, p, code) in cases {
        let (spec, diags) = lang::check(&wrap(o, p));
        assert!(spec.is_none(), "{o}");
        assert!(diags.iter().any(|d| d.code == code), "{o}: {diags:?}");
    }
}

#[test]
fn fixture_is_clean() {
    let (spec, diags) = lang::check(TE_SPEC);
    assert!(diags.is_empty(), "{diags:?}");
    assert!(lang::validate(&spec.unwrap()).is_empty());
}

#[test]
fn printing_is_idempotent_and_one_line_per_statement() {
    let spec = lang::check(TE_SPEC).0.unwrap();
    let once = lang::print(&spec);
    let twice = lang::print(&lang::check(&once).0.unwrap());
    assert_eq!(once, twice);
    for o in &spec.obligations {
        assert_eq!(once.lines().filter(|l| l.trim_start().starts_with(&format!("{}:", o.id))).count(), 1);
    }
    for p in &spec.powers {
        assert_eq!(once.lines().filter(|l| l.trim_start().starts_with(&format!("{}:", p.id))).count(), 1);
    }
    assert!(!once.contains('\r'));
}

#[test]
fn whitespace_and_comments_do_not_change_canonical_text() {
    let canonical = lang::print(&lang::check(TE_SPEC).0.unwrap());
    let noisy: String = TE_SPEC
        .lines()
        .map(|l| format!("   {}  // note\r\n\n", l.replace(", ", " ,\t").replace(": ", " :  ")))
        .collect();
    let (spec, diags) = lang::check(&noisy);
    assert!(diags.is_empty(), "{diags:?}");
    assert_eq!(lang::print(&spec.unwrap()), canonical);
}

fn cursor_after(src: &str, needle: &str) -> Position {
    let at = src.find(needle).unwrap() + needle.len();
    let line = src[..at].matches('\n').count() as u32 + 1;
    let col = src[..at].rsplit('\n').next().unwrap().chars().count() as u32 + 1;
    Position::new(line, col)
}

#[test]
fn completion_offers_role_types_in_parameters() {
    let src = TE_SPEC.replacen("buyer: Buyer", "buyer: B", 1);
    let got = lang::complete(&src, cursor_after(&src, "buyer: B"));
    assert!(got.contains(&"Buyer".to_owned()), "{got:?}");
}

#[test]
fn completion_offers_matching_events() {
    let src = TE_SPEC.replacen("Happens(evt_pay)", "Happens(evt_d)", 1);
    let got = lang::complete(&src, cursor_after(&src, "Happens(evt_d"));
    assert_eq!(got, vec!["evt_dispatch_energy"]);
}

#[test]
fn completion_without_matches_is_empty() {
    let src = TE_SPEC.replacen("Happens(evt_pay)", "Happens(zzz)", 1);
    assert!(lang::complete(&src, cursor_after(&src, "Happens(zzz")).is_empty());
}

#[test]
fn results_are_deterministic() {
    let a = lang::check(TE_SPEC);
    let b = lang::check(TE_SPEC);
    assert_eq!(a, b);
    let broken = TE_SPEC.replace(";", "");
    assert_eq!(lang::check(&broken).1, lang::check(&broken).1);
}
