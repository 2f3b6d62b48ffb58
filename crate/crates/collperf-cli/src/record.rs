//! Flat output records and the numeric rendering every format shares.
//!
//! A record is an ordered list of key → value pairs; one record renders as
//! a CSV row or a JSON object, and a list of like-shaped records renders as
//! a CSV table or a JSON array. Numbers go through [`fmt_f64`] in *both*
//! renderings, so the CSV and JSON forms of the same record carry
//! byte-identical values and reproduce the original `f64`s exactly.

use std::fmt::Write as _;

/// One typed value inside an [`OutputRecord`].
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    /// Free text: strategy ids, operation names, semantics labels.
    Text(String),
    /// Integral quantity: ranks, byte counts, candidate counts.
    Int(u64),
    /// Time or ratio, rendered with [`fmt_f64`].
    Num(f64),
    /// Explicitly absent (a segment column on an unsegmented strategy):
    /// empty CSV field, JSON `null`.
    Absent,
}

/// An ordered key → value map describing one output row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputRecord {
    fields: Vec<(String, Value)>,
}

impl OutputRecord {
    /// An empty record.
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a field. Keys are expected to be unique and stable.
    pub fn push(&mut self, key: impl Into<String>, value: Value) {
        self.fields.push((key.into(), value));
    }

    /// The fields in insertion order.
    pub fn fields(&self) -> &[(String, Value)] {
        &self.fields
    }

    /// Looks a field up by key.
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

/// Renders a float with full round-trip fidelity and at least 9 significant
/// digits: the shortest decimal form that reparses to the same bits, padded
/// with trailing zeros when it is shorter than 9 digits. Appending zeros
/// after the decimal point never changes the parsed value, so
/// `fmt_f64(x).parse::<f64>()` always reproduces `x` exactly.
pub fn fmt_f64(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    // Rust's float Display is shortest-round-trip and never uses exponent
    // notation, so the string is a plain decimal we can pad in place.
    let mut s = x.to_string();
    let mut significant = 0usize;
    let mut seen_nonzero = false;
    for c in s.chars() {
        if c.is_ascii_digit() {
            if c != '0' {
                seen_nonzero = true;
            }
            if seen_nonzero {
                significant += 1;
            }
        }
    }
    if !seen_nonzero {
        // ±0 has no significant digits to pad; use a fixed 9-digit form.
        return if s.starts_with('-') { "-0.000000000" } else { "0.000000000" }.to_string();
    }
    if significant < 9 {
        if !s.contains('.') {
            s.push('.');
        }
        for _ in significant..9 {
            s.push('0');
        }
    }
    s
}

fn csv_field(value: &Value) -> String {
    match *value {
        Value::Text(ref t) => {
            if t.contains(',') || t.contains('"') || t.contains('\n') || t.contains('\r') {
                format!("\"{}\"", t.replace('"', "\"\""))
            } else {
                t.clone()
            }
        }
        Value::Int(i) => i.to_string(),
        Value::Num(x) => fmt_f64(x),
        Value::Absent => String::new(),
    }
}

fn json_value(value: &Value) -> String {
    match *value {
        // serde_json handles string escaping; numbers are emitted verbatim
        // from fmt_f64 so they match the CSV rendering byte for byte.
        Value::Text(ref t) => serde_json::to_string(t).expect("strings always serialize"),
        Value::Int(i) => i.to_string(),
        Value::Num(x) => fmt_f64(x),
        Value::Absent => "null".to_string(),
    }
}

fn json_object(record: &OutputRecord) -> String {
    let mut out = String::from("{");
    for (i, (key, value)) in record.fields().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "{}:{}",
            serde_json::to_string(key).expect("strings always serialize"),
            json_value(value)
        );
    }
    out.push('}');
    out
}

/// Renders records as a CSV table: one header line from the first record's
/// keys, then one row per record. All records must share the same key
/// sequence.
pub fn render_csv(records: &[OutputRecord]) -> String {
    let mut out = String::new();
    let Some(first) = records.first() else {
        return out;
    };
    let keys: Vec<&str> = first.fields().iter().map(|(k, _)| k.as_str()).collect();
    out.push_str(&keys.join(","));
    out.push('\n');
    for record in records {
        let row_keys: Vec<&str> = record.fields().iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(row_keys, keys, "every row in a CSV table must share the header");
        let row: Vec<String> = record.fields().iter().map(|(_, v)| csv_field(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Renders one record as a single JSON object line.
pub fn render_json_object(record: &OutputRecord) -> String {
    let mut out = json_object(record);
    out.push('\n');
    out
}

/// Renders records as a JSON array, one compact object per line.
pub fn render_json_array(records: &[OutputRecord]) -> String {
    let mut out = String::from("[");
    for (i, record) in records.iter().enumerate() {
        out.push_str(if i == 0 { "\n  " } else { ",\n  " });
        out.push_str(&json_object(record));
    }
    out.push_str("\n]\n");
    out
}
