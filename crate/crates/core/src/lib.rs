//! Contract templates to formal specifications, smart-contract code and a
//! compliance-monitoring runtime.
//!
//! * [`lang`] — the specification language: parser, validator, printer.
//! * [`template`] — natural-language templates paired with specs.
//! * [`cnl`] — controlled-natural-language refinement of template slots.
//! * [`codegen`] — JavaScript chaincode and state-machine manifests.
//! * [`runtime`] — executable contract instances over event streams.
//! * [`loc`] — line counts, diffs and refinement-impact reports.
//! * [`service`] — HTTP API and artifact store.

pub mod cnl;
pub mod codegen;
pub mod diagnostic;
pub mod fixtures;
pub mod lang;
pub mod loc;
pub mod template;
pub mod runtime;
pub mod service;
