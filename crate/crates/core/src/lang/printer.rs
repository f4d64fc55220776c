//! Canonical text form.
//!
//! One declaration or statement per line, two-space indentation, sections in
//! fixed order (the Constraints section is always emitted), one blank line
//! between sections and LF line endings. `parse(print(s)) == s` for every
//! spec the parser can produce.

use super::ast::*;
use std::fmt::Write;

pub fn print(spec: &SymboleoSpec) -> String {
    let mut out = String::new();

    out.push_str("Domain\n");
    for d in &spec.domain {
        let _ = write!(out, "  {} isA {}", d.name, d.category.keyword());
        if !d.attributes.is_empty() {
            out.push_str(" with ");
            let attrs: Vec<String> = d
                .attributes
                .iter()
                .map(|a| format!("{}: {}", a.name, a.kind.keyword()))
                .collect();
            out.push_str(&attrs.join(", "));
        }
        out.push_str(";\n");
    }
    out.push_str("endDomain\n\n");

    let params: Vec<String> = spec
        .parameters
        .iter()
        .map(|p| {
            let ty = match &p.ty {
                ParamType::Kind(k) => k.keyword().to_owned(),
                ParamType::Role(r) => r.name.clone(),
            };
            format!("{}: {}", p.name, ty)
        })
        .collect();
    let _ = writeln!(out, "Contract {}({})\n", spec.name, params.join(", "));

    out.push_str("Declarations\n");
    for b in &spec.bindings {
        let _ = write!(out, "  {}: {}", b.name, b.ty);
        if let Some(sig) = &b.signature {
            let _ = write!(out, "({}, {}", sig.subject, sig.verb);
            if let Some(obj) = &sig.object {
                let _ = write!(out, ", {obj}");
            }
            out.push(')');
        }
        if !b.assignments.is_empty() {
            out.push_str(" with ");
            let assigns: Vec<String> = b
                .assignments
                .iter()
                .map(|a| format!("{} := {}", a.attr, expr(&a.value)))
                .collect();
            out.push_str(&assigns.join(", "));
        }
        out.push_str(";\n");
    }
    out.push_str("endDeclarations\n\n");

    out.push_str("Obligations\n");
    for o in &spec.obligations {
        let _ = writeln!(out, "  {}: {};", o.id, obligation_body(o));
    }
    out.push_str("endObligations\n\n");

    out.push_str("Powers\n");
    for p in &spec.powers {
        let _ = writeln!(
            out,
            "  {}: Power({}, {}, {}, {});",
            p.id,
            p.holder,
            p.counterparty,
            proposition(&p.trigger),
            action(&p.action)
        );
    }
    out.push_str("endPowers\n\n");

    out.push_str("Constraints\n");
    for c in &spec.constraints {
        let _ = writeln!(out, "  Precedes({}, {});", c.first, c.then);
    }
    out.push_str("endConstraints\n\n");

    out.push_str("endContract\n");
    out
}

fn obligation_body(o: &Obligation) -> String {
    format!(
        "Obligation({}, {}, {}, {})",
        o.debtor,
        o.creditor,
        proposition(&o.trigger),
        proposition(&o.consequent)
    )
}

fn action(a: &PowerAction) -> String {
    let ids = |v: &Vec<Ident>| v.iter().map(|i| i.name.as_str()).collect::<Vec<_>>().join(", ");
    match a {
        PowerAction::Suspend(v) => format!("Suspend({})", ids(v)),
        PowerAction::Resume(v) => format!("Resume({})", ids(v)),
        PowerAction::Terminate => "Terminate".to_owned(),
        PowerAction::Impose(o) => format!("Impose({}: {})", o.id, obligation_body(o)),
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Param(p) => p.name.clone(),
        Expr::Number(n) => number(*n),
        Expr::Str(s) => string_literal(s),
        Expr::Date(d) => d.format("%Y-%m-%d").to_string(),
    }
}

/// Shortest representation that parses back to the same value.
pub fn number(n: f64) -> String {
    if n == 0.0 {
        // normalise -0
        "0".to_owned()
    } else {
        format!("{n}")
    }
}

fn string_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn time_point(t: &TimePoint) -> String {
    match t {
        TimePoint::Date(d) => d.format("%Y-%m-%d").to_string(),
        TimePoint::Param(p) => p.name.clone(),
    }
}

pub fn interval(i: &Interval) -> String {
    match i {
        Interval::Absolute(a, b) => format!("Interval({}, {})", time_point(a), time_point(b)),
        Interval::RelativeTo(e, d) => format!(
            "RelativeTo({}, {} {})",
            e,
            d.magnitude,
            d.unit.label(d.magnitude)
        ),
    }
}

pub fn proposition(p: &Proposition) -> String {
    let mut s = String::new();
    write_prop(&mut s, p, 0);
    s
}

const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_NOT: u8 = 3;

/// Writes `p`, parenthesising when its precedence is below `min`.
fn write_prop(out: &mut String, p: &Proposition, min: u8) {
    let (prec, parens) = match p {
        Proposition::Or(..) => (PREC_OR, PREC_OR < min),
        Proposition::And(..) => (PREC_AND, PREC_AND < min),
        Proposition::Not(..) => (PREC_NOT, PREC_NOT < min),
        _ => (u8::MAX, false),
    };
    if parens {
        out.push('(');
    }
    match p {
        Proposition::True => out.push_str("true"),
        Proposition::False => out.push_str("false"),
        Proposition::Or(a, b) | Proposition::And(a, b) => {
            // left-associative: the right operand binds tighter
            write_prop(out, a, prec);
            out.push_str(if prec == PREC_OR { " or " } else { " and " });
            write_prop(out, b, prec + 1);
        }
        Proposition::Not(a) => {
            out.push_str("not ");
            write_prop(out, a, PREC_NOT);
        }
        Proposition::Happens(e) => {
            let _ = write!(out, "Happens({e})");
        }
        Proposition::HappensBefore(e, t) => {
            let _ = write!(out, "HappensBefore({e}, {})", time_point(t));
        }
        Proposition::HappensAfter(e, t) => {
            let _ = write!(out, "HappensAfter({e}, {})", time_point(t));
        }
        Proposition::HappensWithin(e, i) => {
            let _ = write!(out, "HappensWithin({e}, {})", interval(i));
        }
        Proposition::Violated(o) => {
            let _ = write!(out, "Violated({o})");
        }
        Proposition::Fulfilled(o) => {
            let _ = write!(out, "Fulfilled({o})");
        }
        Proposition::AttrCmp {
            event,
            attr,
            op,
            value,
        } => {
            let _ = write!(out, "{event}.{attr} {} {}", op.symbol(), expr(value));
        }
    }
    if parens {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn right_nested_conjunction_keeps_its_parentheses() {
        let p = Proposition::and(
            Proposition::True,
            Proposition::and(Proposition::False, Proposition::True),
        );
        assert_eq!(proposition(&p), "true and (false and true)");
        let n = Proposition::negate(Proposition::or(Proposition::True, Proposition::False));
        assert_eq!(proposition(&n), "not (true or false)");
    }

    #[test]
    fn whitespace_differences_canonicalise_identically() {
        let a = "Domain Buyer isA Role; Seller isA Role; endDomain Contract C(b: Buyer, s: Seller) \
                 Declarations endDeclarations Obligations o: Obligation(s, b, true, true); \
                 endObligations Powers endPowers endContract";
        let b = "Domain\n\n   Buyer   isA Role ;\nSeller isA\tRole;\nendDomain\nContract C( b : Buyer ,s:Seller )\n\
                 Declarations\nendDeclarations\nObligations\n o :Obligation( s,b,true , true) ;\n\
                 endObligations\nPowers\nendPowers\nConstraints\nendConstraints\nendContract";
        let pa = print(&parse(a).0.unwrap());
        let pb = print(&parse(b).0.unwrap());
        assert_eq!(pa, pb);
    }

    #[test]
    fn numbers_and_strings_round_trip() {
        assert_eq!(number(100.0), "100");
        assert_eq!(number(-0.0), "0");
        assert_eq!(number(0.25), "0.25");
        assert_eq!(string_literal("a\"b\n"), "\"a\\\"b\\n\"");
    }
}
