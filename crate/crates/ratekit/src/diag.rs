//! Diagnostics: one JSON object per line on standard error.

use serde_json::{json, Map, Value};

use crate::CliError;

pub fn emit(level: &str, event: &str, fields: Value) {
    let mut obj = Map::new();
    obj.insert("level".into(), json!(level));
    obj.insert("event".into(), json!(event));
    if let Value::Object(m) = fields {
        obj.extend(m);
    }
    eprintln!("{}", Value::Object(obj));
}

pub fn info(event: &str, fields: Value) {
    emit("info", event, fields);
}

pub fn warn(event: &str, fields: Value) {
    emit("warning", event, fields);
}

pub fn error(err: &CliError) {
    emit("error", "failed", json!({ "kind": err.kind(), "exit_code": err.exit_code(), "message": err.message() }));
}
