//! Canonical JSON output: sorted object keys, shortest round-trip floats.

use serde::Serialize;

/// Serializes `value` with object keys in sorted order. Floats use the
/// shortest representation that parses back to the same `f64`.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> String {
    // `serde_json::Value` keeps objects in a `BTreeMap`, so a round trip
    // through it sorts every level of keys.
    let v = serde_json::to_value(value).expect("value serializes to JSON");
    serde_json::to_string(&v).expect("JSON value serializes")
}

/// Pretty-printed variant of [`to_canonical_string`].
pub fn to_canonical_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serializes to JSON");
    serde_json::to_string_pretty(&v).expect("JSON value serializes")
}

/// Serde adapter for extended reals: infinities travel as `"inf"` / `"-inf"`.
pub mod ext_real {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else if *x < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    struct ExtReal;

    impl<'de> Visitor<'de> for ExtReal {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" | "+inf" | "infinity" | "Infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" | "-Infinity" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("not an extended real: {other:?}"))),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ExtReal)
    }
}
