//! Line-delimited JSON helpers and fixed-precision number formatting.

use std::io::{self, BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Formats `v` with `digits` fractional digits, never emitting `-0.000`.
pub fn format_fixed(v: f64, digits: usize) -> String {
    let s = format!("{v:.digits$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Rounds to one decimal place.
pub fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

fn serialize_fixed<S: Serializer>(v: f64, digits: usize, s: S) -> Result<S::Ok, S::Error> {
    if !v.is_finite() {
        return Err(serde::ser::Error::custom("non-finite number"));
    }
    let raw = RawValue::from_string(format_fixed(v, digits)).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

/// `serialize_with` adapter: six fractional digits.
pub fn fixed6<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    serialize_fixed(*v, 6, s)
}

/// `serialize_with` adapter for `[x, y, z]` with six fractional digits.
pub fn fixed6_vec3<S: Serializer>(v: &crate::geometry::Vec3, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    struct F(f64);
    impl Serialize for F {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            serialize_fixed(self.0, 6, s)
        }
    }
    let mut t = s.serialize_tuple(3)?;
    t.serialize_element(&F(v.x))?;
    t.serialize_element(&F(v.y))?;
    t.serialize_element(&F(v.z))?;
    t.end()
}

/// Writes one compact JSON record per line and returns the line count.
pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut sink: W) -> Result<usize, IoError> {
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| IoError::Json { line: 0, source: e })?;
        sink.write_all(line.as_bytes())?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(items.len())
}

/// Reads one record per nonblank line; any malformed line is an error.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, IoError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| IoError::Json {
            line: idx + 1,
            source: e,
        })?;
        out.push(item);
    }
    Ok(out)
}
