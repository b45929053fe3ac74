use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::{Format, OutputArgs};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to 12 significant digits; non-finite values pass through.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest text that reads back as `round12(x)`.
pub fn fmt_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        serde_json::to_string(&round12(x)).expect("finite floats serialize")
    }
}

fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            let x = n.as_f64().expect("json number");
            serde_json::Number::from_f64(round12(x)).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Emitted after the rows as `# key=value` lines.
    pub trailer: Vec<(String, String)>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
            trailer: Vec::new(),
        }
    }
}

pub enum Cell<'a> {
    Num(f64),
    Int(usize),
    Text(&'a str),
    Missing,
}

pub fn row(cells: &[Cell]) -> Vec<String> {
    cells
        .iter()
        .map(|c| match c {
            Cell::Num(x) => fmt_number(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => csv_field(s),
            Cell::Missing => String::new(),
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Output of one subcommand, as a JSON document and optionally a table.
pub struct Report {
    pub json: Value,
    pub table: Option<Table>,
}

impl Report {
    pub fn new(json: impl Serialize, table: Option<Table>) -> Self {
        Self {
            json: serde_json::to_value(json).expect("report serializes"),
            table,
        }
    }
}

fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub fn render(report: Report, out: &OutputArgs) -> String {
    let stamp = (!out.no_timestamp).then(timestamp);
    match (out.format, report.table) {
        (Format::Csv, Some(table)) => {
            let mut text = String::new();
            if let Some(t) = stamp {
                text.push_str(&format!("# generated_at_unix={t}\n"));
            }
            text.push_str(&table.header.join(","));
            text.push('\n');
            for r in &table.rows {
                text.push_str(&r.join(","));
                text.push('\n');
            }
            for (k, v) in &table.trailer {
                text.push_str(&format!("# {k}={v}\n"));
            }
            text
        }
        // non-tabular outputs fall back to JSON
        (_, _) => {
            let mut doc = match round_json(report.json) {
                Value::Object(map) => map,
                other => {
                    let mut map = Map::new();
                    map.insert("result".to_string(), other);
                    map
                }
            };
            if let Some(t) = stamp {
                doc.insert("generated_at_unix".to_string(), Value::from(t));
            }
            let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json renders");
            text.push('\n');
            text
        }
    }
}

/// Writes to standard output for `-`, otherwise through a temporary file renamed into place.
pub fn write(text: &str, target: &str) -> std::io::Result<()> {
    if target == "-" {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(text.as_bytes())?;
        return stdout.flush();
    }
    let path = Path::new(target);
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_number(11.963372414380679), "11.9633724144");
        assert_eq!(fmt_number(1.0), "1.0");
        assert_eq!(fmt_number(-2.5e-20), "-2.5e-20");
        assert_eq!(fmt_number(f64::NAN), "NaN");
        assert_eq!(round12(0.1 + 0.2), 0.3);
    }

    #[test]
    fn json_numbers_rounded_recursively() {
        let v = round_json(serde_json::json!({"a": [0.30000000000000004, 7], "b": {"c": 1.23456789012345}}));
        assert_eq!(v, serde_json::json!({"a": [0.3, 7], "b": {"c": 1.23456789012}}));
    }
}
