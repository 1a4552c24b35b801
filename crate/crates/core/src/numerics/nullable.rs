//! Serde adapters for floats that may be NaN or infinite.
//!
//! JSON has no representation for non-finite numbers, so they are written
//! as `null` and read back as NaN. Use with `#[serde(with = "...")]`.

use serde::{Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// The same for sequences of floats.
pub mod seq {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer, T: AsRef<[f64]>>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        let v = v.as_ref();
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&x.is_finite().then_some(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>, T: From<Vec<f64>>>(d: D) -> Result<T, D::Error> {
        let v = Vec::<Option<f64>>::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect::<Vec<_>>().into())
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Debug, Serialize, Deserialize)]
    struct Probe {
        #[serde(with = "super")]
        a: f64,
        #[serde(with = "super::seq")]
        b: Vec<f64>,
    }

    #[test]
    fn non_finite_values_round_trip_as_nan() {
        let p = Probe { a: f64::INFINITY, b: vec![1.5, f64::NAN, -2.0] };
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"a":null,"b":[1.5,null,-2.0]}"#);
        let q: Probe = serde_json::from_str(&s).unwrap();
        assert!(q.a.is_nan());
        assert_eq!(q.b[0], 1.5);
        assert!(q.b[1].is_nan());
        assert_eq!(q.b[2], -2.0);
    }
}
