//! Canonical JSON form of a system.
//!
//! ```json
//! {"atoms":["p"],
//!  "states":[{"label":"x","valuation":{"p":"1/2"},"successors":{"x":"1"}},
//!            {"label":"z","valuation":{},"successors":null}]}
//! ```
//!
//! Rationals are `"num/den"` strings; JSON numbers are rejected. A `null`
//! successor object marks a terminating state.

use std::collections::HashMap;

use serde_json::{json, Map, Value};

use super::{validate_system, RawState, RawSystem, Successors, SystemError, TransitionSystem};
use crate::rational;

fn format_err(at: impl Into<String>, message: impl Into<String>) -> SystemError {
    SystemError::Format {
        at: at.into(),
        message: message.into(),
    }
}

fn parse_rational(at: &str, v: &Value) -> Result<rational::Rational, SystemError> {
    match v {
        Value::String(s) => rational::parse(s).map_err(|e| format_err(at, e.to_string())),
        Value::Number(n) => Err(format_err(
            at,
            format!("numeric literal {n} not accepted, write rationals as \"num/den\" strings"),
        )),
        other => Err(format_err(
            at,
            format!("expected rational string, found {other}"),
        )),
    }
}

pub fn system_from_json(text: &str) -> Result<TransitionSystem, SystemError> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        format_err(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let obj = root
        .as_object()
        .ok_or_else(|| format_err("$", "expected an object"))?;
    let atoms = match obj.get("atoms") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, a)| {
                a.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| format_err(format!("$.atoms[{i}]"), "expected a string"))
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(format_err("$.atoms", "expected an array")),
    };
    let states = obj
        .get("states")
        .and_then(Value::as_array)
        .ok_or_else(|| format_err("$.states", "expected an array of states"))?;

    let mut labels = HashMap::new();
    for (i, st) in states.iter().enumerate() {
        let label = st
            .get("label")
            .and_then(Value::as_str)
            .ok_or_else(|| format_err(format!("$.states[{i}].label"), "expected a string"))?;
        if labels.insert(label.to_string(), i).is_some() {
            return Err(SystemError::DuplicateLabel(label.to_string()));
        }
    }

    let mut raw = RawSystem {
        atoms,
        states: Vec::with_capacity(states.len()),
    };
    for (i, st) in states.iter().enumerate() {
        let label = st["label"].as_str().unwrap_or_default().to_string();
        let mut valuation = Vec::new();
        match st.get("valuation") {
            None | Some(Value::Null) => {}
            Some(Value::Object(m)) => {
                for (atom, v) in m {
                    let at = format!("$.states[{i}].valuation.{atom}");
                    valuation.push((atom.clone(), parse_rational(&at, v)?));
                }
            }
            Some(_) => {
                return Err(format_err(
                    format!("$.states[{i}].valuation"),
                    "expected an object",
                ))
            }
        }
        let successors = match st.get("successors") {
            None | Some(Value::Null) => None,
            Some(Value::Object(m)) => {
                let mut edges = Vec::with_capacity(m.len());
                for (target, w) in m {
                    let at = format!("$.states[{i}].successors.{target}");
                    let idx = *labels
                        .get(target)
                        .ok_or_else(|| SystemError::DanglingState {
                            state: label.clone(),
                            target: target.clone(),
                        })?;
                    edges.push((idx, parse_rational(&at, w)?));
                }
                Some(edges)
            }
            Some(_) => {
                return Err(format_err(
                    format!("$.states[{i}].successors"),
                    "expected an object or null",
                ))
            }
        };
        raw.states.push(RawState {
            label: Some(label),
            valuation,
            successors,
        });
    }
    validate_system(raw)
}

pub fn system_to_json(sys: &TransitionSystem) -> Value {
    let states: Vec<Value> = sys
        .states()
        .map(|s| {
            let st = sys.state(s);
            let valuation: Map<String, Value> = sys
                .atoms()
                .iter()
                .zip(&st.valuation)
                .map(|(a, v)| (a.clone(), Value::String(rational::format(v))))
                .collect();
            let successors = match &st.successors {
                Successors::Terminating => Value::Null,
                Successors::Distribution(d) => Value::Object(
                    d.entries()
                        .iter()
                        .map(|(t, w)| {
                            (
                                sys.label(*t).to_string(),
                                Value::String(rational::format(w)),
                            )
                        })
                        .collect(),
                ),
            };
            json!({"label": st.label, "valuation": valuation, "successors": successors})
        })
        .collect();
    json!({"atoms": sys.atoms(), "states": states})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::perturbed_pair;
    use crate::rational::ratio;

    #[test]
    fn parses_the_documented_example() {
        let text = r#"{"atoms":["p","q"], "states":[
            {"label":"x","valuation":{"p":"1/2"},"successors":{"x1":"1/2","x2":"1/2"}},
            {"label":"x1","valuation":{},"successors":{"x1":"1"}},
            {"label":"x2","valuation":{},"successors":{"x2":"1"}},
            {"label":"x3","valuation":{},"successors":null}]}"#;
        let sys = system_from_json(text).unwrap();
        assert_eq!(sys.state_count(), 4);
        let x = sys.lookup("x").unwrap();
        assert_eq!(*sys.value(0, x), ratio(1, 2));
        assert_eq!(*sys.value(1, x), ratio(0, 1));
        assert!(sys.is_terminating(sys.lookup("x3").unwrap()));
    }

    #[test]
    fn rejects_floats_with_a_position() {
        let text = r#"{"atoms":[],"states":[{"label":"a","successors":{"a":"0.5","b":"1/2"}},
            {"label":"b","successors":null}]}"#;
        let err = system_from_json(text).unwrap_err();
        match err {
            SystemError::Format { at, .. } => assert_eq!(at, "$.states[0].successors.a"),
            other => panic!("unexpected {other:?}"),
        }
        let text = r#"{"atoms":[],"states":[{"label":"a","successors":{"a":1}}]}"#;
        assert!(matches!(
            system_from_json(text),
            Err(SystemError::Format { .. })
        ));
    }

    #[test]
    fn missing_target_is_dangling() {
        let text = r#"{"atoms":[],"states":[{"label":"a","successors":{"zz":"1"}}]}"#;
        assert!(matches!(
            system_from_json(text),
            Err(SystemError::DanglingState { .. })
        ));
    }

    #[test]
    fn serialization_round_trips() {
        let sys = perturbed_pair(&ratio(1, 4));
        let text = system_to_json(&sys).to_string();
        assert_eq!(system_from_json(&text).unwrap(), sys);
    }
}
