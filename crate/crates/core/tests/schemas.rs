//! Emitted JSON conforms to the published schemas in `docs/schemas`.

use std::path::{Path, PathBuf};

use cstar_workbench::linalg::{pauli_y, MatrixJson};
use cstar_workbench::scenario::{bundled_scenarios, run_scenario, Scenario};
use jsonschema::{Retrieve, Uri, Validator};
use serde_json::Value;

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

fn load(name: &str) -> Value {
    let text = std::fs::read_to_string(schema_dir().join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Resolves sibling `$ref`s such as `matrix.schema.json` from the schema directory.
struct SchemaDir;

impl Retrieve for SchemaDir {
    fn retrieve(&self, uri: &Uri<String>) -> Result<Value, Box<dyn std::error::Error + Send + Sync>> {
        let file = uri.as_str().rsplit('/').next().unwrap_or_default();
        Ok(load(file))
    }
}

fn validator(name: &str) -> Validator {
    jsonschema::options()
        .with_base_uri("file:///schemas/")
        .with_retriever(SchemaDir)
        .build(&load(name))
        .unwrap()
}

fn assert_valid(v: &Validator, instance: &Value, what: &str) {
    let errors: Vec<String> = v.iter_errors(instance).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errors.is_empty(), "{what}: {errors:?}");
}

#[test]
fn every_bundled_report_matches_the_run_report_schema() {
    let v = validator("run-report.schema.json");
    for s in bundled_scenarios().unwrap() {
        let report = serde_json::to_value(run_scenario(&s)).unwrap();
        assert_valid(&v, &report, &s.name);
        // the schema is strict enough to notice a dropped or renamed field
        let mut broken = report.clone();
        let payload = broken["payload"].as_object_mut().unwrap();
        let key = if payload.contains_key("verdict") { "verdict" } else { "accept" };
        let moved = payload.remove(key).unwrap();
        payload.insert(format!("{key}_"), moved);
        assert!(!v.is_valid(&broken), "{}", s.name);
    }
}

#[test]
fn bundled_scenarios_match_the_scenario_schema() {
    let v = validator("scenario.schema.json");
    for s in bundled_scenarios().unwrap() {
        assert_valid(&v, &serde_json::to_value(&s).unwrap(), &s.name);
    }
}

#[test]
fn error_reports_match_the_schema() {
    let s = Scenario {
        name: "bad".into(),
        checker: "gns".into(),
        claim: String::new(),
        seed: 0,
        params: cstar_workbench::scenario::Params {
            algebra: Some("Q3".into()),
            ..Default::default()
        },
        expect: Default::default(),
    };
    let report = serde_json::to_value(run_scenario(&s)).unwrap();
    assert_valid(&validator("run-report.schema.json"), &report, "error report");
}

#[test]
fn matrices_match_the_matrix_schema() {
    let m = serde_json::to_value(MatrixJson::from(&pauli_y())).unwrap();
    assert_valid(&validator("matrix.schema.json"), &m, "pauli_y");
    assert!(!validator("matrix.schema.json").is_valid(&serde_json::json!({"dim": 1, "re": [[1.0]]})));
}
