//! The core contract dialect: syntax tree, parser, validator, canonical
//! printer and completion. The grammar is documented in `docs/grammar.md`.

pub mod ast;
mod complete;
pub mod lexer;
mod parser;
mod printer;
mod validate;

pub use ast::*;
pub use complete::complete;
pub use parser::{is_reserved, parse, RESERVED};
pub use printer::{expr as print_expr, interval as print_interval, number as print_number, print, proposition as print_proposition, time_point as print_time_point};
pub use validate::validate;

use crate::diagnostic::{has_errors, Diagnostic};

/// Parses and validates in one step. The spec is returned only when both
/// stages produced no errors; warnings are passed through.
pub fn check(source: &str) -> (Option<SymboleoSpec>, Vec<Diagnostic>) {
    let (spec, mut diags) = parse(source);
    let Some(spec) = spec else {
        return (None, diags);
    };
    diags.extend(validate(&spec));
    crate::diagnostic::sort(&mut diags);
    if has_errors(&diags) {
        (None, diags)
    } else {
        (Some(spec), diags)
    }
}
