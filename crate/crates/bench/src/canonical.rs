//! Canonical JSON: sorted keys, two-space indentation and every float
//! written with 17 significant digits, so equal values serialize to equal
//! bytes and reload bit-exactly.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// `v` in the canonical text format, newline-terminated.
pub fn to_canonical_string<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let value = serde_json::to_value(v)?;
    let mut out = String::new();
    write_value(&value, 0, &mut out);
    out.push('\n');
    Ok(out)
}

/// Lower-case hex SHA-256 of the canonical form of `v`.
pub fn canonical_hash<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let text = to_canonical_string(v)?;
    Ok(format!("{:x}", Sha256::digest(text.as_bytes())))
}

/// A float with 17 significant digits in exponent form.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                out.push_str(&n.to_string());
            } else {
                // non-finite floats never reach here: serde_json maps them to null
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // short numeric arrays (task vectors, actions) stay on one line
            let flat = items.len() <= 4 && items.iter().all(|i| i.is_number());
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                    if flat {
                        out.push(' ');
                    }
                }
                if !flat {
                    out.push('\n');
                    indent(depth + 1, out);
                }
                write_value(item, depth + 1, out);
            }
            if !flat {
                out.push('\n');
                indent(depth, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            // serde_json's default map is a BTreeMap, so keys come out sorted
            out.push('{');
            for (k, (key, item)) in map.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push('\n');
                indent(depth + 1, out);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(item, depth + 1, out);
            }
            out.push('\n');
            indent(depth, out);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_and_floats_fixed() {
        let text = to_canonical_string(&json!({"b": 0.1, "a": [1, 2.5], "c": {"z": null, "y": true}})).unwrap();
        let expected = "{\n  \"a\": [1, 2.5000000000000000e0],\n  \"b\": 1.0000000000000001e-1,\n  \"c\": {\n    \"y\": true,\n    \"z\": null\n  }\n}\n";
        assert_eq!(text, expected);
    }

    #[test]
    fn floats_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0, -0.0] {
            let back: f64 = serde_json::from_str(&format_float(x)).unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = json!({"x": 1, "y": [0.5, 0.25]});
        let b: Value = serde_json::from_str(r#"{"y": [0.5, 0.25], "x": 1}"#).unwrap();
        assert_eq!(canonical_hash(&a).unwrap(), canonical_hash(&b).unwrap());
        assert_eq!(canonical_hash(&a).unwrap().len(), 64);
    }
}
