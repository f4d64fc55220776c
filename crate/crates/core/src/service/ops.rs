//! Stateless operations shared by the CLI and the HTTP API, so that both
//! return identical payloads for identical inputs.

use crate::codegen::{self, LocCount};
use crate::diagnostic::{codes, Diagnostic, Position};
use crate::lang::{self, SymboleoSpec};
use crate::loc::RefinementReport;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParseOutcome {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub canonical: Option<String>,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn parse(source: &str) -> (Option<SymboleoSpec>, ParseOutcome) {
    let (spec, diagnostics) = lang::check(source);
    let outcome = ParseOutcome {
        ok: spec.is_some(),
        canonical: spec.as_ref().map(lang::print),
        diagnostics,
    };
    (spec, outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidateOutcome {
    pub valid: bool,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn validate(source: &str) -> ValidateOutcome {
    let (spec, diagnostics) = lang::check(source);
    ValidateOutcome {
        valid: spec.is_some(),
        diagnostics,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompleteOutcome {
    pub suggestions: Vec<String>,
}

pub fn complete(source: &str, line: u32, col: u32) -> CompleteOutcome {
    CompleteOutcome {
        suggestions: lang::complete(source, Position::new(line, col)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerateOutcome {
    pub contract: String,
    pub generator: String,
    pub files: BTreeMap<String, String>,
    pub loc: LocCount,
}

pub fn generate(spec: &SymboleoSpec) -> (codegen::Bundle, GenerateOutcome) {
    let bundle = codegen::generate(spec);
    let outcome = GenerateOutcome {
        contract: bundle.contract.clone(),
        generator: bundle.generator.clone(),
        files: bundle.files.clone(),
        loc: bundle.count_loc(),
    };
    (bundle, outcome)
}

/// Generation from source text; refuses specs with errors.
pub fn generate_source(source: &str) -> Result<(codegen::Bundle, GenerateOutcome), Vec<Diagnostic>> {
    let (spec, diags) = lang::check(source);
    match spec {
        Some(s) => Ok(generate(&s)),
        None => {
            let mut out = vec![Diagnostic::unlocated(
                codes::INVALID_SPEC,
                "code generation requires a valid specification",
            )];
            out.extend(diags);
            Err(out)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportOutcome {
    #[serde(flatten)]
    pub report: RefinementReport,
    pub csv: String,
    pub text: String,
}

pub fn report(base: &SymboleoSpec, refined: &[(String, SymboleoSpec)]) -> ReportOutcome {
    let report = RefinementReport::build(base, refined);
    ReportOutcome {
        csv: report.to_csv(),
        text: report.to_text(),
        report,
    }
}
