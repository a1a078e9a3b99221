//! Config loading, `--set` overrides and error classification.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::Value;

/// How a run failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or config. Exit 2, nothing written.
    Usage(String),
    /// A numerical routine failed. Exit 3 with a diagnostic JSON.
    Numerical(String),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<coarse_hall::Error> for Failure {
    fn from(e: coarse_hall::Error) -> Self {
        use coarse_hall::Error as E;
        match e {
            E::InvalidArgument(_) | E::Capacity { .. } | E::EmptyCloud => Failure::Usage(e.to_string()),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(format!("i/o: {e}"))
    }
}

pub fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Applies `key.path=value`; the value is parsed as JSON, falling back to a string.
pub fn apply_override(config: &mut Value, assignment: &str) -> Result<(), Failure> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Failure::Usage(format!("--set expects key=value, got {assignment:?}")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Failure::Usage(format!("invalid override key {key:?}")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = config;
    for seg in key.split('.') {
        node = match node {
            Value::Array(items) => {
                let i: usize = seg
                    .parse()
                    .map_err(|_| Failure::Usage(format!("{key}: {seg:?} is not an array index")))?;
                let len = items.len();
                items
                    .get_mut(i)
                    .ok_or_else(|| Failure::Usage(format!("{key}: index {i} out of range ({len} items)")))?
            }
            Value::Object(map) => map.entry(seg).or_insert(Value::Null),
            other => {
                if !other.is_null() {
                    return Err(Failure::Usage(format!("{key}: cannot descend into a scalar at {seg:?}")));
                }
                *other = Value::Object(Default::default());
                other.as_object_mut().expect("just set").entry(seg).or_insert(Value::Null)
            }
        };
    }
    *node = value;
    Ok(())
}

/// Typed view of a config, reporting the path of the offending key.
pub fn typed<T: DeserializeOwned>(config: &Value) -> Result<T, Failure> {
    serde_path_to_error::deserialize(config.clone()).map_err(|e| {
        let path = e.path().to_string();
        Failure::Usage(format!("config key `{path}`: {}", e.into_inner()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_parse_json_and_strings() {
        let mut v = json!({"model": {"nx": 8}, "radii": [1, 2]});
        apply_override(&mut v, "model.nx=12").unwrap();
        apply_override(&mut v, "radii.1=5.5").unwrap();
        apply_override(&mut v, "model.model=hofstadter").unwrap();
        apply_override(&mut v, "new.key=true").unwrap();
        assert_eq!(v, json!({"model": {"nx": 12, "model": "hofstadter"}, "radii": [1, 5.5], "new": {"key": true}}));
    }

    #[test]
    fn bad_overrides_are_usage_errors() {
        let mut v = json!({"a": 1, "b": [0]});
        for bad in ["a", "=3", "a..b=1", "a.b=1", "b.7=1", "b.x=1"] {
            assert!(matches!(apply_override(&mut v, bad), Err(Failure::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn typed_errors_name_the_key() {
        #[derive(serde::Deserialize, Debug)]
        #[allow(dead_code)]
        struct C {
            inner: Inner,
        }
        #[derive(serde::Deserialize, Debug)]
        #[allow(dead_code)]
        struct Inner {
            n: usize,
        }
        let Err(Failure::Usage(msg)) = typed::<C>(&json!({"inner": {"n": "x"}})) else {
            panic!("expected a usage error");
        };
        assert!(msg.contains("inner.n"), "{msg}");
    }
}
