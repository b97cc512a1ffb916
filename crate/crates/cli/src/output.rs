use serde_json::Value;

/// Renders a report as pretty JSON. Keys come out sorted, so identical
/// reports are byte-identical.
pub fn json(report: &Value) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

/// Renders a report as a two-column table of dotted paths and values.
/// Arrays of scalars stay on one line.
pub fn table(report: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", report, &mut rows);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (key, value) in rows {
        out.push_str(&format!("{key:<width$}  {value}\n"));
    }
    out
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(&join(k), child, rows);
            }
        }
        Value::Array(items) => {
            let scalars: Option<Vec<String>> = items.iter().map(scalar).collect();
            match scalars {
                Some(s) => rows.push((prefix.to_string(), format!("[{}]", s.join(", ")))),
                None => {
                    for (i, child) in items.iter().enumerate() {
                        flatten(&join(&i.to_string()), child, rows);
                    }
                }
            }
        }
        other => rows.push((prefix.to_string(), scalar(other).unwrap_or_default())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn table_flattens_nested_values() {
        let v = json!({"b": {"c": [1, 2]}, "a": "+inf", "d": [{"x": null}]});
        assert_eq!(table(&v), "a      +inf\nb.c    [1, 2]\nd.0.x  -\n");
    }

    #[test]
    fn json_is_sorted() {
        let v = json!({"b": 1, "a": 2});
        assert_eq!(json(&v), "{\n  \"a\": 2,\n  \"b\": 1\n}\n");
    }
}
