//! Lossless float formatting shared by the CSV and JSON writers.

use serde::Serializer;
use serde_json::value::RawValue;

/// 17 significant digits, `inf`/`-inf`/`nan` for non-finite values.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{:.16e}", x)
    }
}

/// Parse a value written by [`sig17`].
pub fn parse_f64(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

/// JSON number with 17 significant digits; non-finite values become strings.
pub fn raw17(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() {
        sig17(x)
    } else {
        format!("\"{}\"", sig17(x))
    };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

pub fn ser17<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&raw17(*x), s)
}

pub fn ser17_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser17(v, s),
        None => s.serialize_none(),
    }
}
