use super::SerializeError;
use crate::powl::{validate, PowlNode};

/// Pretty-printed, tagged JSON form of a model.
pub fn powl_json_export(model: &PowlNode) -> String {
    serde_json::to_string_pretty(model).expect("models always serialize")
}

/// Parses and re-validates a JSON model.
pub fn powl_json_import(text: &str) -> Result<PowlNode, SerializeError> {
    let model: PowlNode = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        if msg.contains("invalid label") {
            SerializeError::InvariantViolation(msg)
        } else {
            SerializeError::MalformedDocument(msg)
        }
    })?;
    let violations = validate(&model);
    if !violations.is_empty() {
        let joined: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(SerializeError::InvariantViolation(joined.join("; ")));
    }
    Ok(model)
}
