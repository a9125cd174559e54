//! Dotted-path overrides (`dataset.generator.node_count=1000`) applied to
//! the prescription's JSON document before it is parsed and validated, so an
//! override that breaks an invariant is rejected like any other invalid
//! prescription.

use serde_json::Value;

/// Applies `path=raw` to `doc`. Numeric path segments index arrays. The
/// value is parsed as JSON when possible (numbers, booleans, null, quoted
/// strings, structures), otherwise taken as a bare string.
pub fn apply_override(doc: &mut Value, path: &str, raw: &str) -> Result<(), String> {
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(format!("bad override path {path:?}"));
    }
    let mut node = doc;
    for (i, segment) in segments.iter().enumerate() {
        let last = i == segments.len() - 1;
        match node {
            Value::Object(map) => {
                if last {
                    map.insert((*segment).to_string(), parse_value(raw));
                    return Ok(());
                }
                node = map
                    .get_mut(*segment)
                    .ok_or_else(|| format!("override path {path:?}: no field {segment:?}"))?;
            }
            Value::Array(items) => {
                let index: usize = segment
                    .parse()
                    .map_err(|_| format!("override path {path:?}: {segment:?} is not an index"))?;
                let slot = items
                    .get_mut(index)
                    .ok_or_else(|| format!("override path {path:?}: index {index} out of range"))?;
                if last {
                    *slot = parse_value(raw);
                    return Ok(());
                }
                node = slot;
            }
            other => {
                return Err(format!(
                    "override path {path:?}: {segment:?} does not address into {other}"
                ))
            }
        }
    }
    unreachable!("loop returns on the last segment")
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Splits a `key=value` override argument.
pub fn split_override(arg: &str) -> Result<(&str, &str), String> {
    arg.split_once('=')
        .ok_or_else(|| format!("override {arg:?} must have the form path=value"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sets_nested_fields_and_array_slots() {
        let mut doc = json!({
            "seed": 1,
            "dataset": {"generator": {"node_count": 10}},
            "streams": [{"rate": null}]
        });
        apply_override(&mut doc, "seed", "7").unwrap();
        apply_override(&mut doc, "dataset.generator.node_count", "500").unwrap();
        apply_override(&mut doc, "streams.0.rate", "2500.0").unwrap();
        apply_override(&mut doc, "dataset.note", "\"quoted\"").unwrap();
        assert_eq!(doc["seed"], 7);
        assert_eq!(doc["dataset"]["generator"]["node_count"], 500);
        assert_eq!(doc["streams"][0]["rate"], 2500.0);
        assert_eq!(doc["dataset"]["note"], "quoted");
    }

    #[test]
    fn bare_strings_parse_as_strings() {
        let mut doc = json!({"name": "x"});
        apply_override(&mut doc, "name", "hello").unwrap();
        assert_eq!(doc["name"], "hello");
    }

    #[test]
    fn bad_paths_error() {
        let mut doc = json!({"a": {"b": 1}, "arr": [1]});
        assert!(apply_override(&mut doc, "a.zz.c", "1").is_err());
        assert!(apply_override(&mut doc, "arr.5", "1").is_err());
        assert!(apply_override(&mut doc, "arr.x", "1").is_err());
        assert!(apply_override(&mut doc, "a.b.c", "1").is_err());
        assert!(split_override("no_equals").is_err());
        assert_eq!(split_override("a=b").unwrap(), ("a", "b"));
    }
}
