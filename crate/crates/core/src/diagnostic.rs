//! Diagnostics shared by every stage of the pipeline.
//!
//! Codes are stable strings so that editors, the HTTP service and tests can
//! match on them instead of on message text. The full registry lives in
//! [`codes`].

use serde::{Deserialize, Serialize};
use std::fmt;

/// Stable diagnostic codes.
pub mod codes {
    /// Syntax error.
    pub const SYNTAX: &str = "E001";
    /// Duplicate identifier within a namespace.
    pub const DUPLICATE_ID: &str = "E101";
    /// Reference to an undeclared identifier.
    pub const UNRESOLVED: &str = "E201";
    /// Kind or category mismatch.
    pub const KIND_MISMATCH: &str = "E301";
    /// Debtor/creditor (or holder/counterparty) are the same party.
    pub const SAME_PARTY: &str = "E302";
    /// Absolute interval whose start lies after its end.
    pub const INVERTED_INTERVAL: &str = "E304";
    /// Duration magnitude below one.
    pub const BAD_DURATION: &str = "E305";
    /// Absolute interval whose start equals its end.
    pub const EMPTY_INTERVAL: &str = "W401";

    /// Malformed template (placeholder/slot bookkeeping).
    pub const TEMPLATE_INVALID: &str = "E500";
    pub const UNMAPPED_PARAMETER: &str = "E501";
    pub const SLOT_MISSING_OBLIGATION: &str = "E502";
    pub const PARAM_KIND_MISMATCH: &str = "E503";
    pub const MISSING_VALUE: &str = "E504";
    pub const VALUE_KIND_MISMATCH: &str = "E505";
    pub const DUPLICATE_REFINEMENT: &str = "E506";

    pub const UNKNOWN_SLOT: &str = "E601";
    pub const NOT_IN_CNL: &str = "E602";
    pub const UNRESOLVABLE_PHRASE: &str = "E603";
    pub const RULE_INAPPLICABLE: &str = "E604";
    pub const SLOT_ALREADY_REFINED: &str = "E605";
    pub const TRIGGER_NOT_TRUE: &str = "E606";

    /// Code generation refused because the spec has errors.
    pub const INVALID_SPEC: &str = "E701";

    pub const BAD_PARAMETER_VALUE: &str = "E801";
    pub const TIME_REGRESSION: &str = "E802";
    pub const UNKNOWN_EVENT: &str = "E803";
    pub const POWER_NOT_IN_EFFECT: &str = "E804";
    pub const BAD_ATTRIBUTES: &str = "E805";
    pub const UNKNOWN_POWER: &str = "E806";

    /// Missing resource in the service workspace.
    pub const NOT_FOUND: &str = "E404";
    /// Malformed request to the service or CLI.
    pub const BAD_REQUEST: &str = "E400";

    /// Every documented code, in registry order.
    pub const ALL: &[&str] = &[
        SYNTAX,
        DUPLICATE_ID,
        UNRESOLVED,
        KIND_MISMATCH,
        SAME_PARTY,
        INVERTED_INTERVAL,
        BAD_DURATION,
        EMPTY_INTERVAL,
        TEMPLATE_INVALID,
        UNMAPPED_PARAMETER,
        SLOT_MISSING_OBLIGATION,
        PARAM_KIND_MISMATCH,
        MISSING_VALUE,
        VALUE_KIND_MISMATCH,
        DUPLICATE_REFINEMENT,
        UNKNOWN_SLOT,
        NOT_IN_CNL,
        UNRESOLVABLE_PHRASE,
        RULE_INAPPLICABLE,
        SLOT_ALREADY_REFINED,
        TRIGGER_NOT_TRUE,
        INVALID_SPEC,
        BAD_PARAMETER_VALUE,
        TIME_REGRESSION,
        UNKNOWN_EVENT,
        POWER_NOT_IN_EFFECT,
        BAD_ATTRIBUTES,
        UNKNOWN_POWER,
        NOT_FOUND,
        BAD_REQUEST,
    ];
}

/// A 1-based line/column position. Columns count Unicode scalar values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position {
    pub line: u32,
    pub col: u32,
}

impl Position {
    pub const fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl Default for Position {
    fn default() -> Self {
        Self::new(1, 1)
    }
}

/// A source range with real equality, as reported to clients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Range {
    pub start: Position,
    pub end: Position,
}

impl Range {
    pub const fn new(start: Position, end: Position) -> Self {
        Self { start, end }
    }
}

/// Location metadata carried by syntax-tree nodes.
///
/// Spans never participate in equality or hashing: two trees that differ only
/// in where they came from compare equal.
#[derive(Clone, Copy, Default)]
pub struct Span {
    pub start: Position,
    pub end: Position,
}

impl Span {
    pub const fn new(start: Position, end: Position) -> Self {
        Self { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span::new(self.start, other.end)
    }

    pub fn range(self) -> Range {
        Range::new(self.start, self.end)
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

impl fmt::Debug for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}-{}:{}",
            self.start.line, self.start.col, self.end.line, self.end.col
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    pub severity: Severity,
    pub range: Range,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: &str, span: Span, message: impl Into<String>) -> Self {
        Self {
            code: code.to_owned(),
            severity: Severity::Error,
            range: span.range(),
            message: message.into(),
        }
    }

    pub fn warning(code: &str, span: Span, message: impl Into<String>) -> Self {
        Self {
            code: code.to_owned(),
            severity: Severity::Warning,
            range: span.range(),
            message: message.into(),
        }
    }

    /// Diagnostic without a meaningful source location (template files,
    /// CNL input, runtime requests).
    pub fn unlocated(code: &str, message: impl Into<String>) -> Self {
        Self::error(code, Span::default(), message)
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}: {}[{}]: {}",
            self.range.start.line, self.range.start.col, sev, self.code, self.message
        )
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Orders diagnostics by range, then code.
pub fn sort(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (a.range, &a.code, &a.message).cmp(&(b.range, &b.code, &b.message))
    });
}
