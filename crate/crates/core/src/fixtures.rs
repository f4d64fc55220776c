//! The transactive-energy agreement used throughout the tests, examples and
//! the CLI's `demo` data.

use crate::template::{bind, identity_map, ContractTemplate, TemplatePair};

pub const TE_SPEC: &str = include_str!("../fixtures/te/te.symboleo");
pub const TE_TEMPLATE: &str = include_str!("../fixtures/te/te.cttpl.json");
pub const TE_PARAMS: &str = include_str!("../fixtures/te/params.json");

/// Labelled refinement scripts, in report order.
pub const REFINEMENTS: [(&str, &str); 9] = [
    ("R1", include_str!("../fixtures/te/refinements/R1.txt")),
    ("R2", include_str!("../fixtures/te/refinements/R2.txt")),
    ("R3", include_str!("../fixtures/te/refinements/R3.txt")),
    ("R4", include_str!("../fixtures/te/refinements/R4.txt")),
    ("R5", include_str!("../fixtures/te/refinements/R5.txt")),
    ("R1R2", include_str!("../fixtures/te/refinements/R1R2.txt")),
    ("R1R3", include_str!("../fixtures/te/refinements/R1R3.txt")),
    ("R4R2", include_str!("../fixtures/te/refinements/R4R2.txt")),
    ("R4R3", include_str!("../fixtures/te/refinements/R4R3.txt")),
];

/// The fixture template bound to the fixture spec with the identity map.
pub fn te_pair() -> TemplatePair {
    let template = ContractTemplate::from_json(TE_TEMPLATE).expect("fixture template is valid");
    let spec = crate::lang::check(TE_SPEC).0.expect("fixture spec is valid");
    let map = identity_map(&template);
    bind(template, spec, map).expect("fixture pair binds")
}
