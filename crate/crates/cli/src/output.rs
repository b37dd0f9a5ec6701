use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::args::Format;
use crate::CliError;

pub enum Cell {
    Real(f64),
    Int(i64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(x) => real(*x),
            Cell::Int(i) => i.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(x) => Value::from(*x),
            Cell::Int(i) => Value::from(*i),
        }
    }
}

/// Seventeen significant digits, `.` decimal point.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub struct Table {
    pub header: String,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &str) -> Self {
        Self {
            header: header.to_string(),
            rows: Vec::new(),
        }
    }

    pub fn reals(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> Self {
        Self {
            header: header.to_string(),
            rows: rows.into_iter().map(|r| r.into_iter().map(Cell::Real).collect()).collect(),
        }
    }
}

/// What a command produced: echoed configuration, an optional summary and an optional table.
pub struct Artifact {
    pub command: &'static str,
    pub config: Vec<(&'static str, String)>,
    pub summary: Option<Value>,
    pub table: Option<Table>,
    pub default_format: Format,
}

impl Artifact {
    pub fn new(command: &'static str, default_format: Format) -> Self {
        Self {
            command,
            config: Vec::new(),
            summary: None,
            table: None,
            default_format,
        }
    }

    pub fn config(mut self, key: &'static str, value: impl ToString) -> Self {
        self.config.push((key, value.to_string()));
        self
    }

    pub fn render(&self, format: Option<Format>) -> String {
        match format.unwrap_or(self.default_format) {
            Format::Csv => self.render_csv(),
            Format::Text => self.render_text(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = format!("# command = {}\n", self.command);
        for (k, v) in &self.config {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        match &self.table {
            Some(table) => {
                if let Some(summary) = &self.summary {
                    for (k, v) in flatten(summary) {
                        out.push_str(&format!("# {k} = {v}\n"));
                    }
                }
                out.push_str(&table.header);
                out.push('\n');
                for row in &table.rows {
                    out.push_str(&row.iter().map(Cell::render).collect::<Vec<_>>().join(","));
                    out.push('\n');
                }
            }
            None => {
                out.push_str("field,value\n");
                if let Some(summary) = &self.summary {
                    for (k, v) in flatten(summary) {
                        out.push_str(&format!("{k},{v}\n"));
                    }
                }
            }
        }
        out
    }

    fn render_text(&self) -> String {
        let mut doc = Map::new();
        doc.insert("command".into(), Value::from(self.command));
        let config: Map<String, Value> = self.config.iter().map(|(k, v)| (k.to_string(), Value::from(v.clone()))).collect();
        doc.insert("config".into(), Value::Object(config));
        if let Some(summary) = &self.summary {
            doc.insert("result".into(), summary.clone());
        }
        if let Some(table) = &self.table {
            let names: Vec<&str> = table.header.split(',').collect();
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| Value::Object(names.iter().zip(row).map(|(n, c)| (n.to_string(), c.json())).collect()))
                .collect();
            doc.insert("rows".into(), Value::Array(rows));
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values always serialize");
        text.push('\n');
        text
    }
}

/// Scalars of a JSON value keyed by their dotted path; reals in the CSV number format.
fn flatten(value: &Value) -> Vec<(String, String)> {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(m) => m.iter().for_each(|(k, v)| walk(&key(k), v, out)),
            Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| walk(&key(&i.to_string()), v, out)),
            Value::Number(n) if n.is_f64() => out.push((prefix.to_string(), real(n.as_f64().unwrap_or(f64::NAN)))),
            Value::String(s) => out.push((prefix.to_string(), s.replace(',', ";"))),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk("", value, &mut out);
    out
}

/// Writes through a temporary file in the destination directory, then renames over it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::Input(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents.as_bytes()).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_have_seventeen_digits() {
        assert_eq!(real(0.1), "1.0000000000000001e-1");
        assert_eq!(real(-2.0), "-2.0000000000000000e0");
        assert_eq!(real(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn csv_and_text_layouts() {
        let mut a = Artifact::new("demo", Format::Csv).config("k_max", 3);
        a.summary = Some(serde_json::json!({"slope": 0.5, "notes": ["a,b"]}));
        a.table = Some(Table::reals("x,y", vec![vec![1.0, 2.0]]));
        let csv = a.render(None);
        assert!(csv.starts_with("# command = demo\n# k_max = 3\n# notes.0 = a;b\n# slope = 5.0000000000000000e-1\nx,y\n"));
        let text = a.render(Some(Format::Text));
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["rows"][0]["y"], 2.0);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
