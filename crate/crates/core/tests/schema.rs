//! The published configuration schema.

use mechaudit::builtin::{builtin_scenario, BUILTIN_NAMES};
use mechaudit::config::config_schema;

const PUBLISHED: &str = include_str!("../../../schema/scenario.schema.json");

fn validator() -> jsonschema::Validator {
    let schema: serde_json::Value = serde_json::from_str(PUBLISHED).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

#[test]
fn published_schema_is_current() {
    assert_eq!(
        config_schema().unwrap(),
        PUBLISHED,
        "regenerate with `mechaudit schema --out schema/scenario.schema.json`"
    );
}

#[test]
fn builtin_configs_validate() {
    let v = validator();
    for name in BUILTIN_NAMES {
        let config = builtin_scenario(name).unwrap();
        let value: serde_json::Value = serde_json::from_str(&config.to_json().unwrap()).unwrap();
        let errors: Vec<String> = v.iter_errors(&value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
    }
}

#[test]
fn unknown_fields_are_rejected() {
    let v = validator();
    let config = builtin_scenario("voting").unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&config.to_json().unwrap()).unwrap();
    value["mechanism"]["chooser"]["name"] = "borda".into();
    assert!(!v.is_valid(&value));
    let mut value: serde_json::Value = serde_json::from_str(&config.to_json().unwrap()).unwrap();
    value["surplus"] = 1.into();
    assert!(!v.is_valid(&value));
}
