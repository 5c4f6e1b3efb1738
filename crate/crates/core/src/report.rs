//! Canonical JSON reports: sorted keys, floats rounded to nine significant
//! digits, non-finite numbers written as `null`.

use serde::Serialize;
use serde_json::{Number, Value};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SIGNIFICANT_DIGITS: usize = 9;

/// Rounds `x` to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses")
}

/// Formats a float for CSV output with the same rounding as the JSON.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        let r = round_sig(x);
        if r == 0.0 {
            "0".to_string()
        } else {
            r.to_string()
        }
    } else {
        String::new()
    }
}

fn canonicalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let r = round_sig(x);
            // -0.0 and 0.0 print the same
            Number::from_f64(if r == 0.0 { 0.0 } else { r }).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonicalize).collect()),
        // serde_json's map is ordered by key
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonicalize(v))).collect()),
        other => other,
    }
}

/// Converts any serializable value to its canonical JSON tree.
pub fn to_canonical_value(value: &impl Serialize) -> Value {
    canonicalize(serde_json::to_value(value).expect("report values serialize"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool_version: String,
    pub command: String,
    pub config: Value,
    pub results: Value,
}

impl Report {
    pub fn new(command: &str, config: &impl Serialize, results: &impl Serialize) -> Self {
        Report {
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            config: to_canonical_value(config),
            results: to_canonical_value(results),
        }
    }

    /// Pretty-printed canonical JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&to_canonical_value(self)).expect("report serializes");
        s.push('\n');
        s
    }
}
