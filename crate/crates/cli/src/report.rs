//! Byte-stable report emission.
//!
//! JSON objects are written with sorted keys and every float as
//! `{:.16e}` (17 significant digits, lowercase exponent). Integers stay
//! integers; non-finite floats become `null`.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: &str = "1";

/// Envelope shared by every JSON report.
#[derive(Serialize)]
pub struct Document<I: Serialize, B: Serialize> {
    pub schema_version: &'static str,
    pub tool: Tool,
    pub command: &'static str,
    pub inputs: I,
    #[serde(flatten)]
    pub body: B,
}

#[derive(Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

impl Tool {
    pub fn current() -> Self {
        Tool {
            name: "hhinvex",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

pub fn document<I: Serialize, B: Serialize>(command: &'static str, inputs: I, body: B) -> Document<I, B> {
    Document {
        schema_version: SCHEMA_VERSION,
        tool: Tool::current(),
        command,
        inputs,
        body,
    }
}

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("reports serialize");
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("f64");
                if x.is_finite() {
                    out.push_str(&float(x));
                } else {
                    out.push_str("null");
                }
            } else {
                write!(out, "{n}").expect("write to string");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, indent + 1);
                write_value(out, item, indent + 1);
            }
            newline(out, indent);
            out.push(']');
        }
        Value::Object(map) => write_object(out, map, indent),
    }
}

fn write_object(out: &mut String, map: &Map<String, Value>, indent: usize) {
    if map.is_empty() {
        out.push_str("{}");
        return;
    }
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort();
    out.push('{');
    for (i, k) in keys.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        newline(out, indent + 1);
        out.push_str(&serde_json::to_string(k).expect("key"));
        out.push_str(": ");
        write_value(out, &map[k], indent + 1);
    }
    newline(out, indent);
    out.push('}');
}

fn newline(out: &mut String, indent: usize) {
    out.push('\n');
    for _ in 0..indent {
        out.push_str("  ");
    }
}
