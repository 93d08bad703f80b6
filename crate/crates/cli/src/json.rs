//! JSON output with floats fixed to six significant digits, so identical
//! runs print identical bytes.

use serde::Serialize;
use serde_json::{Number, Value};

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            *v = Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_value<T: Serialize>(value: &T) -> serde_json::Result<Value> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    Ok(v)
}

/// Pretty-printed, rounded, newline-terminated.
pub fn to_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(&to_value(value)?)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(round_sig(123.456789), 123.457);
        assert_eq!(round_sig(-0.000123456789), -0.000123457);
        assert_eq!(round_sig(98765432.1), 98765400.0);
        assert_eq!(round_sig(0.0), 0.0);
    }

    #[test]
    fn integers_are_untouched() {
        let s = to_string(&serde_json::json!({"t": 123456789u64, "x": 1.23456789})).unwrap();
        assert!(s.contains("123456789"));
        assert!(s.contains("1.23457"));
    }
}
