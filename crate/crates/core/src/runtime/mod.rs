//! Executable contracts.
//!
//! A [`CompiledContract`] is a validated spec with parameter values bound.
//! A [`ContractInstance`] runs it against a stream of timestamped events,
//! clock ticks and power exercises, keeping one state machine per
//! obligation, power and ordering constraint plus one for the contract.
//!
//! Propositions are evaluated over the whole event log at the current clock
//! with three-valued logic; an obligation leaves `InEffect` only once its
//! consequent is definitely true or definitely false. Triggers fire only
//! when definitely true, and state changes are latched.

mod compile;
mod instance;

pub use compile::{param_value, CompiledContract, Value};
pub use instance::{
    format_time, parse_time, ConstraintState, ContractInstance, ContractState, Deadline, EventOccurrence,
    ObligationState, PowerState, StatusSnapshot, Transition, TransitionReport,
};
pub(crate) use instance::minute as minute_serde;

use crate::diagnostic::{codes, Diagnostic};
use crate::lang::SymboleoSpec;
use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

type JsonMap = serde_json::Map<String, serde_json::Value>;

/// Starts an instance of a validated spec.
pub fn instantiate(
    spec: &SymboleoSpec,
    params: &JsonMap,
    start: NaiveDateTime,
) -> Result<ContractInstance, Vec<Diagnostic>> {
    let compiled = CompiledContract::compile(spec, params)?;
    Ok(ContractInstance::new(compiled, start))
}

/// One line of a scenario script (JSON Lines).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum ScenarioOp {
    /// Optional first line: start time and parameter values.
    Start {
        #[serde(with = "instance::minute")]
        at: NaiveDateTime,
        #[serde(default)]
        params: JsonMap,
    },
    Event {
        event: String,
        #[serde(with = "instance::minute")]
        at: NaiveDateTime,
        #[serde(default)]
        attributes: JsonMap,
    },
    Tick {
        #[serde(with = "instance::minute")]
        at: NaiveDateTime,
    },
    Exert {
        power: String,
    },
}

pub fn parse_scenario(text: &str) -> Result<Vec<ScenarioOp>, Vec<Diagnostic>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with("//"))
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                vec![Diagnostic::unlocated(
                    codes::BAD_REQUEST,
                    format!("scenario line {}: {e}", i + 1),
                )]
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct StepOutcome {
    pub step: usize,
    pub op: ScenarioOp,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<TransitionReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<Diagnostic>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioOutcome {
    pub opening: TransitionReport,
    pub steps: Vec<StepOutcome>,
    pub status: StatusSnapshot,
}

/// Applies one operation. A `start` line in the middle of a script is
/// rejected.
pub fn apply_op(inst: &mut ContractInstance, op: &ScenarioOp) -> Result<TransitionReport, Vec<Diagnostic>> {
    match op {
        ScenarioOp::Start { .. } => Err(vec![Diagnostic::unlocated(
            codes::BAD_REQUEST,
            "`start` may only appear on the first line",
        )]),
        ScenarioOp::Event { event, at, attributes } => inst.submit_event(event, *at, attributes),
        ScenarioOp::Tick { at } => inst.tick(*at),
        ScenarioOp::Exert { power } => inst.exert(power),
    }
}

/// Replays a scenario. Parameters and start time come from the script's
/// `start` line, overridden by `params` when given. Rejected operations are
/// reported and leave the instance unchanged.
pub fn run_scenario(
    spec: &SymboleoSpec,
    params: Option<&JsonMap>,
    ops: &[ScenarioOp],
) -> Result<ScenarioOutcome, Vec<Diagnostic>> {
    let (start, script_params, rest) = match ops.first() {
        Some(ScenarioOp::Start { at, params }) => (*at, params.clone(), &ops[1..]),
        _ => {
            let first = ops.iter().find_map(|op| match op {
                ScenarioOp::Event { at, .. } | ScenarioOp::Tick { at } => Some(*at),
                _ => None,
            });
            let at = first.unwrap_or_default();
            (at, JsonMap::new(), ops)
        }
    };
    let mut merged = script_params;
    if let Some(p) = params {
        merged.extend(p.iter().map(|(k, v)| (k.clone(), v.clone())));
    }
    let mut inst = instantiate(spec, &merged, start)?;
    let offset = ops.len() - rest.len();
    let steps = rest
        .iter()
        .enumerate()
        .map(|(i, op)| {
            let (report, errors) = match apply_op(&mut inst, op) {
                Ok(r) => (Some(r), Vec::new()),
                Err(e) => (None, e),
            };
            StepOutcome {
                step: i + offset + 1,
                op: op.clone(),
                report,
                errors,
            }
        })
        .collect();
    Ok(ScenarioOutcome {
        opening: inst.opening().clone(),
        steps,
        status: inst.status(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::lang::check;

    fn params() -> JsonMap {
        serde_json::from_str(fixtures::TE_PARAMS).unwrap()
    }

    fn te() -> ContractInstance {
        let spec = check(fixtures::TE_SPEC).0.unwrap();
        instantiate(&spec, &params(), parse_time("2024-01-01").unwrap()).unwrap()
    }

    fn attrs(v: serde_json::Value) -> JsonMap {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn happy_path_fulfils_the_contract() {
        let mut i = te();
        let r = i
            .submit_event(
                "evt_dispatch_energy",
                parse_time("2024-02-10T09:30").unwrap(),
                &attrs(serde_json::json!({"quantity": 100, "voltage": 230, "location": "Substation 7"})),
            )
            .unwrap();
        assert!(r.transitions.iter().any(|t| t.entity == "O_deliver" && t.to == "Fulfilled"));
        i.submit_event("evt_pay", parse_time("2024-02-12").unwrap(), &attrs(serde_json::json!({"amount": 1200})))
            .unwrap();
        assert_eq!(i.state(), ContractState::Fulfilled);
        let s = i.status();
        assert_eq!(s.obligations["O_pay"], ObligationState::Fulfilled);
        assert_eq!(s.powers["P_terminate"], PowerState::Created);
    }

    #[test]
    fn operational_errors() {
        let mut i = te();
        let t = parse_time("2024-02-01").unwrap();
        let code = |r: Result<TransitionReport, Vec<Diagnostic>>| r.unwrap_err()[0].code.clone();
        assert_eq!(code(i.submit_event("evt_nothing", t, &JsonMap::new())), codes::UNKNOWN_EVENT);
        assert_eq!(code(i.submit_event("evt_pay", t, &JsonMap::new())), codes::BAD_ATTRIBUTES);
        assert_eq!(
            code(i.submit_event("evt_pay", t, &attrs(serde_json::json!({"amount": "x"})))),
            codes::BAD_ATTRIBUTES
        );
        assert_eq!(code(i.exert("P_suspend")), codes::POWER_NOT_IN_EFFECT);
        assert_eq!(code(i.exert("P_none")), codes::UNKNOWN_POWER);
        i.tick(t).unwrap();
        assert_eq!(code(i.tick(parse_time("2023-12-31").unwrap())), codes::TIME_REGRESSION);
        assert_eq!(i.clock(), t);
        assert!(i.log().is_empty());
    }

    #[test]
    fn missing_or_ill_kinded_parameters() {
        let spec = check(fixtures::TE_SPEC).0.unwrap();
        let mut p = params();
        p.remove("amount");
        p.insert("date".into(), serde_json::json!("soon"));
        let errs = instantiate(&spec, &p, Default::default()).unwrap_err();
        assert_eq!(errs.len(), 2);
        assert!(errs.iter().all(|d| d.code == codes::BAD_PARAMETER_VALUE));
    }

    #[test]
    fn describe_matches_generated_manifest() {
        let spec = check(fixtures::TE_SPEC).0.unwrap();
        let i = instantiate(&spec, &params(), Default::default()).unwrap();
        assert_eq!(i.contract().describe(), crate::codegen::generate(&spec).manifest);
    }

    #[test]
    fn scenario_lines_parse() {
        let ops = parse_scenario(
            "{\"op\":\"start\",\"at\":\"2024-01-01\"}\n\n{\"op\":\"tick\",\"at\":\"2024-01-02T10:15:42\"}\n{\"op\":\"exert\",\"power\":\"P\"}",
        )
        .unwrap();
        assert_eq!(ops.len(), 3);
        assert_eq!(ops[1], ScenarioOp::Tick { at: parse_time("2024-01-02T10:15").unwrap() });
        assert!(parse_scenario("{\"op\":\"warp\"}").is_err());
    }
}
