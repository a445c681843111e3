//! The published report schema (`schemas/report.schema.json`) must accept
//! every report the pipeline can produce, including reports whose stages
//! failed. A small structural validator covers exactly the constructs the
//! schema file uses: `type` (single or list), `enum`, `anyOf`, `$ref` into
//! `#/definitions/…`, `properties`/`required`/`additionalProperties: false`,
//! uniform and tuple `items` with `minItems`/`maxItems`, and `minimum`.

use serde_json::Value;
use symdyn::analysis::{report_to_json, run_analysis, AnalysisConfig};

fn schema() -> Value {
    serde_json::from_str(include_str!("../schemas/report.schema.json"))
        .expect("schema file parses")
}

// ---------------------------------------------------------------------------
// validator
// ---------------------------------------------------------------------------

fn resolve<'a>(root: &'a Value, reference: &str) -> &'a Value {
    let name = reference
        .strip_prefix("#/definitions/")
        .unwrap_or_else(|| panic!("unsupported $ref {reference:?}"));
    &root["definitions"][name]
}

fn type_matches(value: &Value, name: &str) -> bool {
    match name {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        "number" => value.is_number(),
        // Draft-07 semantics: any number with zero fractional part.
        "integer" => {
            value.as_i64().is_some()
                || value.as_u64().is_some()
                || value.as_f64().is_some_and(|x| x.is_finite() && x.fract() == 0.0)
        }
        other => panic!("unsupported type keyword {other:?}"),
    }
}

fn validate(root: &Value, schema: &Value, value: &Value, path: &str, errors: &mut Vec<String>) {
    let s = schema.as_object().unwrap_or_else(|| panic!("schema at {path} is not an object"));

    if let Some(r) = s.get("$ref").and_then(Value::as_str) {
        validate(root, resolve(root, r), value, path, errors);
    }

    if let Some(alternatives) = s.get("anyOf").and_then(Value::as_array) {
        let ok = alternatives.iter().any(|alt| {
            let mut local = Vec::new();
            validate(root, alt, value, path, &mut local);
            local.is_empty()
        });
        if !ok {
            errors.push(format!("{path}: no anyOf alternative matched"));
        }
    }

    if let Some(t) = s.get("type") {
        let ok = match t {
            Value::String(name) => type_matches(value, name),
            Value::Array(names) => names
                .iter()
                .any(|n| type_matches(value, n.as_str().expect("type name"))),
            _ => panic!("bad type keyword at {path}"),
        };
        if !ok {
            errors.push(format!("{path}: type mismatch (want {t}, got {value})"));
            return;
        }
    }

    if let Some(allowed) = s.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            errors.push(format!("{path}: {value} not in enum {allowed:?}"));
        }
    }

    if let Some(min) = s.get("minimum").and_then(Value::as_f64) {
        if let Some(x) = value.as_f64() {
            if x < min {
                errors.push(format!("{path}: {x} below minimum {min}"));
            }
        }
    }

    if let Some(object) = value.as_object() {
        let properties = s.get("properties").and_then(Value::as_object);
        if let Some(required) = s.get("required").and_then(Value::as_array) {
            for name in required {
                let name = name.as_str().expect("required name");
                if !object.contains_key(name) {
                    errors.push(format!("{path}: missing required property {name:?}"));
                }
            }
        }
        if let Some(props) = properties {
            for (name, sub) in props {
                if let Some(v) = object.get(name) {
                    validate(root, sub, v, &format!("{path}/{name}"), errors);
                }
            }
            if s.get("additionalProperties") == Some(&Value::Bool(false)) {
                for name in object.keys() {
                    if !props.contains_key(name) {
                        errors.push(format!("{path}: unexpected property {name:?}"));
                    }
                }
            }
        }
    }

    if let Some(array) = value.as_array() {
        match s.get("items") {
            Some(Value::Array(tuple)) => {
                for (i, (sub, v)) in tuple.iter().zip(array).enumerate() {
                    validate(root, sub, v, &format!("{path}/{i}"), errors);
                }
            }
            Some(sub @ Value::Object(_)) => {
                for (i, v) in array.iter().enumerate() {
                    validate(root, sub, v, &format!("{path}/{i}"), errors);
                }
            }
            None => {}
            Some(other) => panic!("bad items keyword at {path}: {other}"),
        }
        if let Some(min) = s.get("minItems").and_then(Value::as_u64) {
            if (array.len() as u64) < min {
                errors.push(format!("{path}: fewer than {min} items"));
            }
        }
        if let Some(max) = s.get("maxItems").and_then(Value::as_u64) {
            if (array.len() as u64) > max {
                errors.push(format!("{path}: more than {max} items"));
            }
        }
    }
}

fn assert_valid(report: &Value) {
    let schema = schema();
    let mut errors = Vec::new();
    validate(&schema, &schema, report, "#", &mut errors);
    assert!(errors.is_empty(), "schema violations:\n{}", errors.join("\n"));
}

fn report_for(config_json: &str) -> Value {
    let config: AnalysisConfig = serde_json::from_str(config_json).expect("config parses");
    let report = run_analysis(&config);
    // Validate the serialized form — the same bytes `--out` writes.
    serde_json::from_str(&report_to_json(&report)).expect("report JSON parses")
}

// ---------------------------------------------------------------------------
// reports that must validate
// ---------------------------------------------------------------------------

#[test]
fn kasner_report_matches_schema() {
    assert_valid(&report_for(
        r#"{ "map": { "builtin": "kasner" }, "options": { "depth": 6, "n_max": 8 } }"#,
    ));
}

#[test]
fn linear_markov_report_matches_schema() {
    assert_valid(&report_for(
        r#"{ "map": { "builtin": "linear_markov",
                      "params": { "matrix": [[1, 1], [1, 0]] } },
             "options": { "depth": 6, "n_max": 8 } }"#,
    ));
}

#[test]
fn piecewise_linear_report_matches_schema() {
    // Tent map supplied as breakpoints, partition and matrix explicit.
    assert_valid(&report_for(
        r#"{ "map": { "piecewise_linear": { "domain": "interval",
                                            "breakpoints": [[0, 0], [0.5, 1], [1, 0]] } },
             "partition": [[0, 0.5], [0.5, 0.5]],
             "matrix": [[1, 1], [1, 1]],
             "options": { "depth": 6, "n_max": 8 } }"#,
    ));
}

#[test]
fn failed_analysis_report_matches_schema() {
    // Unknown builtin: every section is null, the error list is not.
    let report = report_for(r#"{ "map": { "builtin": "unknown-map" } }"#);
    assert!(!report["errors"].as_array().unwrap().is_empty());
    assert!(report["matrix"].is_null());
    assert_valid(&report);
}

// ---------------------------------------------------------------------------
// the validator itself must have teeth
// ---------------------------------------------------------------------------

#[test]
fn validator_rejects_tampered_reports() {
    let good = report_for(
        r#"{ "map": { "builtin": "doubling" }, "options": { "depth": 4, "n_max": 4 } }"#,
    );
    let schema = schema();
    let violations = |report: &Value| {
        let mut errors = Vec::new();
        validate(&schema, &schema, report, "#", &mut errors);
        errors
    };
    assert!(violations(&good).is_empty());

    let mut missing = good.clone();
    missing.as_object_mut().unwrap().remove("schema_version");
    assert!(!violations(&missing).is_empty(), "missing required field accepted");

    let mut wrong_type = good.clone();
    wrong_type["spectral"]["lambda"] = Value::String("two".into());
    assert!(!violations(&wrong_type).is_empty(), "non-numeric lambda accepted");

    let mut bad_enum = good.clone();
    bad_enum["verification"]["domain"] = Value::String("torus".into());
    assert!(!violations(&bad_enum).is_empty(), "unknown domain accepted");

    let mut extra = good.clone();
    extra.as_object_mut().unwrap().insert("debug".into(), Value::Bool(true));
    assert!(!violations(&extra).is_empty(), "unexpected property accepted");

    let mut bad_matrix = good;
    bad_matrix["matrix"][0][0] = Value::from(2);
    assert!(!violations(&bad_matrix).is_empty(), "non-binary matrix entry accepted");
}
