use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Runtime value. Compound values are owned trees, so `clone` gives VDM
/// value semantics: no two bindings ever share mutable structure.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Nil,
    Bool(bool),
    Int(i64),
    Char(char),
    Text(String),
    Quote(String),
    Seq(Vec<Value>),
    Set(BTreeSet<Value>),
    Map(BTreeMap<Value, Value>),
    Record(String, Vec<Value>),
    Tuple(Vec<Value>),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Nil => "nil",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Char(_) => "char",
            Value::Text(_) => "seq of char",
            Value::Quote(_) => "quote",
            Value::Seq(_) => "seq",
            Value::Set(_) => "set",
            Value::Map(_) => "map",
            Value::Record(..) => "record",
            Value::Tuple(_) => "tuple",
        }
    }

    /// Converts a JSON argument. Objects are not representable.
    pub fn from_json(v: &serde_json::Value) -> Option<Value> {
        Some(match v {
            serde_json::Value::Null => Value::Nil,
            serde_json::Value::Bool(b) => Value::Bool(*b),
            serde_json::Value::Number(n) => Value::Int(n.as_i64()?),
            serde_json::Value::String(s) => Value::Text(s.clone()),
            serde_json::Value::Array(xs) => {
                Value::Seq(xs.iter().map(Value::from_json).collect::<Option<_>>()?)
            }
            serde_json::Value::Object(_) => return None,
        })
    }
}

fn list(f: &mut fmt::Formatter<'_>, items: impl IntoIterator<Item = impl fmt::Display>) -> fmt::Result {
    for (i, x) in items.into_iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Nil => f.write_str("nil"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Char(c) => write!(f, "'{c}'"),
            Value::Text(s) => write!(f, "{s:?}"),
            Value::Quote(q) => write!(f, "<{q}>"),
            Value::Seq(xs) => {
                f.write_str("[")?;
                list(f, xs)?;
                f.write_str("]")
            }
            Value::Set(xs) => {
                f.write_str("{")?;
                list(f, xs)?;
                f.write_str("}")
            }
            Value::Map(m) if m.is_empty() => f.write_str("{|->}"),
            Value::Map(m) => {
                f.write_str("{")?;
                list(f, m.iter().map(|(k, v)| format!("{k} |-> {v}")))?;
                f.write_str("}")
            }
            Value::Record(name, fields) => {
                write!(f, "mk_{name}(")?;
                list(f, fields)?;
                f.write_str(")")
            }
            Value::Tuple(xs) => {
                f.write_str("mk_(")?;
                list(f, xs)?;
                f.write_str(")")
            }
        }
    }
}
