//! Flat `key = value` experiment configs.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    := blank | comment | entry
//! comment := '#' any*
//! entry   := key ws* '=' ws* value (ws* ',' ws* value)* ws* comment?
//! key     := [a-z] [a-z0-9_]*
//! value   := [^,#\s] ([^,#]* [^,#\s])?
//! ```
//!
//! A key may appear once. A comma-separated value list marks a sweep over
//! that key; sweeps expand as a cartesian product in key order, and within a
//! key in the listed order. The optional key `experiment` names the tag and
//! `out` names the output directory; neither enters the config hash.

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Keys that describe where or what to run rather than what is computed.
pub const META_KEYS: [&str; 2] = ["experiment", "out"];

/// Parsed but not yet schema-checked config text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawConfig {
    pub entries: BTreeMap<String, Vec<String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let bad = |msg: String| CliError::Validation(format!("line {}: {msg}", lineno + 1));
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, rest) = body
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, got `{body}`")))?;
            let key = key.trim();
            if !valid_key(key) {
                return Err(bad(format!("invalid key `{key}`")));
            }
            let values: Vec<String> = rest.split(',').map(|v| v.trim().to_string()).collect();
            if values.iter().any(|v| v.is_empty()) {
                return Err(bad(format!("empty value for `{key}`")));
            }
            if entries.insert(key.to_string(), values).is_some() {
                return Err(bad(format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&[String]> {
        self.entries.get(key).map(|v| v.as_slice())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), vec![value.to_string()]);
    }

    /// Single-valued meta entry such as `experiment` or `out`.
    pub fn meta(&self, key: &str) -> Result<Option<&str>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some([v]) => Ok(Some(v.as_str())),
            Some(_) => Err(CliError::Validation(format!("`{key}` cannot be a list"))),
        }
    }
}

impl fmt::Display for RawConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {}", v.join(", "))?;
        }
        Ok(())
    }
}

fn valid_key(key: &str) -> bool {
    let mut chars = key.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Value type accepted by a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    /// Finite and strictly positive, used for tolerances and scales.
    Positive,
    /// Nonnegative integer.
    Count,
    /// One of a fixed set of words.
    Choice(&'static [&'static str]),
}

/// One entry of an experiment's schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Param {
    pub key: &'static str,
    pub kind: Kind,
    /// `None` marks a required key.
    pub default: Option<&'static str>,
    pub sweep: bool,
    pub doc: &'static str,
}

impl Param {
    pub const fn new(key: &'static str, kind: Kind, default: &'static str, doc: &'static str) -> Self {
        Self { key, kind, default: Some(default), sweep: false, doc }
    }

    pub const fn sweep(mut self) -> Self {
        self.sweep = true;
        self
    }
}

/// A typed, canonical parameter value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Count(usize),
    Word(String),
}

impl Value {
    fn parse(raw: &str, kind: Kind, key: &str) -> Result<Self, CliError> {
        let bad = |what: &str| CliError::Validation(format!("`{key}`: {what}, got `{raw}`"));
        match kind {
            Kind::Float | Kind::Positive => {
                let x: f64 = raw.parse().map_err(|_| bad("expected a number"))?;
                if !x.is_finite() {
                    return Err(bad("expected a finite number"));
                }
                if kind == Kind::Positive && x <= 0.0 {
                    return Err(bad("expected a positive number"));
                }
                Ok(Value::Float(x))
            }
            Kind::Count => raw.parse().map(Value::Count).map_err(|_| bad("expected a nonnegative integer")),
            Kind::Choice(words) => {
                if words.contains(&raw) {
                    Ok(Value::Word(raw.to_string()))
                } else {
                    Err(bad(&format!("expected one of {}", words.join("|"))))
                }
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Shortest round-trip form, so `0.50` and `5e-1` print alike.
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Count(n) => write!(f, "{n}"),
            Value::Word(w) => f.write_str(w),
        }
    }
}

/// Config resolved against a schema: defaults filled in, values typed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub tag: String,
    pub values: BTreeMap<String, Vec<Value>>,
}

impl ExperimentConfig {
    pub fn resolve(tag: &str, raw: &RawConfig, schema: &[Param]) -> Result<Self, CliError> {
        if let Some(t) = raw.meta("experiment")? {
            if t != tag {
                return Err(CliError::Validation(format!("config names experiment `{t}` but `{tag}` was requested")));
            }
        }
        for key in raw.entries.keys() {
            if !META_KEYS.contains(&key.as_str()) && !schema.iter().any(|p| p.key == key) {
                return Err(CliError::Validation(format!("unknown key `{key}` for `{tag}`")));
            }
        }
        let mut values = BTreeMap::new();
        for p in schema {
            let given: Vec<&str> = match (raw.get(p.key), p.default) {
                (Some(v), _) => v.iter().map(|s| s.as_str()).collect(),
                (None, Some(d)) => d.split(',').map(str::trim).collect(),
                (None, None) => return Err(CliError::Validation(format!("missing required key `{}`", p.key))),
            };
            if given.len() > 1 && !p.sweep {
                return Err(CliError::Validation(format!("`{}` does not accept a value list", p.key)));
            }
            let typed = given.iter().map(|v| Value::parse(v, p.kind, p.key)).collect::<Result<Vec<_>, _>>()?;
            values.insert(p.key.to_string(), typed);
        }
        Ok(Self { tag: tag.to_string(), values })
    }

    /// Canonical text: tag line then sorted `key = v1, v2` lines.
    pub fn canonical(&self) -> String {
        let mut s = format!("experiment = {}\n", self.tag);
        for (k, v) in &self.values {
            let list: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            s.push_str(&format!("{k} = {}\n", list.join(", ")));
        }
        s
    }

    /// SHA-256 of [`Self::canonical`], lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Deterministic expansion of every value list into single-valued points.
    pub fn expand(&self) -> Vec<Point> {
        let mut points = vec![BTreeMap::new()];
        for (k, vals) in &self.values {
            let mut next = Vec::with_capacity(points.len() * vals.len());
            for p in &points {
                for v in vals {
                    let mut q: BTreeMap<String, Value> = p.clone();
                    q.insert(k.clone(), v.clone());
                    next.push(q);
                }
            }
            points = next;
        }
        points.into_iter().enumerate().map(|(index, values)| Point { index, values }).collect()
    }

    /// Keys that hold more than one value.
    pub fn swept_keys(&self) -> Vec<&str> {
        self.values.iter().filter(|(_, v)| v.len() > 1).map(|(k, _)| k.as_str()).collect()
    }
}

/// One element of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub index: usize,
    pub values: BTreeMap<String, Value>,
}

impl Point {
    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn f64(&self, key: &str) -> f64 {
        match self.values.get(key) {
            Some(Value::Float(x)) => *x,
            Some(Value::Count(n)) => *n as f64,
            other => panic!("schema has no numeric `{key}`: {other:?}"),
        }
    }

    pub fn usize(&self, key: &str) -> usize {
        match self.values.get(key) {
            Some(Value::Count(n)) => *n,
            other => panic!("schema has no count `{key}`: {other:?}"),
        }
    }

    pub fn word(&self, key: &str) -> &str {
        match self.values.get(key) {
            Some(Value::Word(w)) => w,
            other => panic!("schema has no word `{key}`: {other:?}"),
        }
    }

    /// `key=value` pairs for the given keys, used in labels.
    pub fn describe(&self, keys: &[&str]) -> String {
        keys.iter()
            .filter_map(|k| self.values.get(*k).map(|v| format!("{k}={v}")))
            .collect::<Vec<_>>()
            .join(" ")
    }
}
