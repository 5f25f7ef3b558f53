//! Text rendering of JSON reports, so both output modes carry the same numbers.

use serde_json::Value;

/// One `path: value` line per scalar leaf, in document order.
pub fn text(value: &Value) -> String {
    let mut out = String::new();
    walk(value, String::new(), &mut out);
    out
}

fn walk(value: &Value, path: String, out: &mut String) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let next = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                walk(v, next, out);
            }
        }
        Value::Array(items) if items.iter().all(|v| !v.is_object() && !v.is_array()) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            out.push_str(&format!("{path}: [{}]\n", parts.join(", ")));
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                walk(v, format!("{path}[{i}]"), out);
            }
        }
        leaf => out.push_str(&format!("{path}: {}\n", scalar(leaf))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format_f64(x),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

/// Shortest round-trip form; integral values print without a fraction.
pub fn format_f64(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flattens_nested_reports() {
        let v = json!({"norm": 0.5, "packing": [{"center": "a", "radius": 2.0}], "ids": ["a", "b"], "ok": true});
        assert_eq!(text(&v), "ids: [a, b]\nnorm: 0.5\nok: true\npacking[0].center: a\npacking[0].radius: 2\n");
    }
}
