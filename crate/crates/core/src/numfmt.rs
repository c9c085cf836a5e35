//! Float formatting shared by metadata writers and prompt text.

use serde_json::Value;

/// Rounds to 9 significant decimal digits. Idempotent.
pub fn sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Rewrites every float in a JSON tree to 9 significant digits.
pub fn round_json(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(r) = n.as_f64().map(sig9).and_then(serde_json::Number::from_f64) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Human-readable number: at most two decimals, trailing zeros trimmed.
pub fn short(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_is_idempotent() {
        for x in [1.0 / 3.0, 9.81, 1e-12 / 7.0, -123456.789123, 0.1 + 0.2] {
            let r = sig9(x);
            assert_eq!(sig9(r).to_bits(), r.to_bits());
        }
        assert_eq!(sig9(0.1 + 0.2), 0.3);
    }

    #[test]
    fn short_trims() {
        assert_eq!(short(5.0), "5");
        assert_eq!(short(0.6), "0.6");
        assert_eq!(short(2.345), "2.35");
        assert_eq!(short(-0.001), "0");
    }
}
