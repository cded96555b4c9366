//! Deterministic report writer.
//!
//! Reports are JSON with insertion-ordered keys and every float printed with
//! 17 significant digits (`{:.16e}`), which round-trips f64 exactly. Two
//! runs with identical config bytes produce byte-identical reports; nothing
//! wall-clock-dependent is ever written (the timing section carries
//! deterministic work counters instead).

use std::fmt::Write as _;

/// JSON value with deterministic serialization.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    UInt(u64),
    Float(f64),
    Str(String),
    Array(Vec<Json>),
    Object(Vec<(String, Json)>),
}

impl Json {
    pub fn object() -> Json {
        Json::Object(Vec::new())
    }

    pub fn push(&mut self, key: &str, value: Json) {
        match self {
            Json::Object(entries) => entries.push((key.to_string(), value)),
            _ => panic!("push on non-object report node"),
        }
    }

    pub fn floats(values: &[f64]) -> Json {
        Json::Array(values.iter().map(|&v| Json::Float(v)).collect())
    }

    pub fn ints(values: &[i64]) -> Json {
        Json::Array(values.iter().map(|&v| Json::Int(v)).collect())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => {
                let _ = write!(out, "{b}");
            }
            Json::Int(v) => {
                let _ = write!(out, "{v}");
            }
            Json::UInt(v) => {
                let _ = write!(out, "{v}");
            }
            Json::Float(v) => out.push_str(&format_float(*v)),
            Json::Str(s) => write_escaped(out, s),
            Json::Array(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    push_indent(out, indent + 1);
                    item.write(out, indent + 1);
                }
                out.push('\n');
                push_indent(out, indent);
                out.push(']');
            }
            Json::Object(entries) => {
                if entries.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (key, value)) in entries.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    push_indent(out, indent + 1);
                    write_escaped(out, key);
                    out.push_str(": ");
                    value.write(out, indent + 1);
                }
                out.push('\n');
                push_indent(out, indent);
                out.push('}');
            }
        }
    }
}

fn push_indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

/// 17 significant decimal digits: exact double round-trip.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "\"nan\"".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "\"inf\"".to_string() } else { "\"-inf\"".to_string() };
    }
    // normalize negative zero so algebraically-zero results serialize alike
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

fn write_escaped(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}
