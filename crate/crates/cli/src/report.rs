use serde::Serialize;
use serde_json::{Map, Value};
use std::fmt;
use std::path::{Path, PathBuf};

/// One checked inequality `value ≤ tol`, named by the identity it tests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub anchor: &'static str,
    pub quantity: String,
    pub value: f64,
    pub tol: f64,
    /// `"max"` for `value ≤ tol`, `"min"` for `value ≥ tol`.
    pub bound: &'static str,
    pub pass: bool,
}

impl Assertion {
    pub fn at_most(anchor: &'static str, quantity: impl Into<String>, value: f64, tol: f64) -> Self {
        Assertion {
            anchor,
            quantity: quantity.into(),
            value,
            tol,
            bound: "max",
            pass: value.is_finite() && value <= tol,
        }
    }

    pub fn at_least(anchor: &'static str, quantity: impl Into<String>, value: f64, tol: f64) -> Self {
        Assertion {
            anchor,
            quantity: quantity.into(),
            value,
            tol,
            bound: "min",
            pass: value.is_finite() && value >= tol,
        }
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {} = {:.3e} ({} {:e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.anchor,
            self.quantity,
            self.value,
            if self.bound == "max" { "tol" } else { "min" },
            self.tol
        )
    }
}

/// A CSV table; cells are written verbatim with RFC-4180 quoting.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

pub fn cell(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Clone, Default)]
pub struct TaskReport {
    pub assertions: Vec<Assertion>,
    pub data: Map<String, Value>,
    pub tables: Vec<Table>,
}

impl TaskReport {
    pub fn check(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub fn put(&mut self, key: &str, v: impl Serialize) {
        self.data.insert(key.to_string(), to_value(v));
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

/// Serializes through `Value`, whose maps keep keys sorted.
pub fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

pub struct Document<'a> {
    pub task: &'a str,
    pub seed: u64,
    pub state: &'a str,
    pub report: &'a TaskReport,
}

impl Document<'_> {
    pub fn json(&self) -> String {
        let mut m = Map::new();
        m.insert("task".into(), Value::from(self.task));
        m.insert("seed".into(), Value::from(self.seed));
        m.insert("state".into(), Value::from(self.state));
        m.insert("passed".into(), Value::from(self.report.passed()));
        m.insert("assertions".into(), to_value(&self.report.assertions));
        m.insert("report".into(), Value::Object(self.report.data.clone()));
        let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("JSON value serializes");
        s.push('\n');
        s
    }

    /// Writes `<stem>.json` and one `<stem>[-<table>].csv` per table.
    pub fn write(&self, dir: &Path, stem: &str) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files = vec![dir.join(format!("{stem}.json"))];
        std::fs::write(&files[0], self.json())?;
        let single = self.report.tables.len() == 1;
        for t in &self.report.tables {
            let path = if single {
                dir.join(format!("{stem}.csv"))
            } else {
                dir.join(format!("{stem}-{}.csv", t.name))
            };
            std::fs::write(&path, t.to_csv().map_err(std::io::Error::other)?)?;
            files.push(path);
        }
        Ok(files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_fields_per_rfc4180() {
        let mut t = Table::new("x", &["name", "value"]);
        t.push(vec!["a,b".into(), "say \"hi\"".into()]);
        assert_eq!(t.to_csv().unwrap(), "name,value\r\n\"a,b\",\"say \"\"hi\"\"\"\r\n");
    }

    #[test]
    fn json_keys_are_sorted() {
        let mut r = TaskReport::default();
        r.put("zeta", 1.0);
        r.put("alpha", 2.0);
        let doc = Document { task: "t", seed: 0, state: "s", report: &r };
        let s = doc.json();
        assert!(s.find("\"alpha\"").unwrap() < s.find("\"zeta\"").unwrap());
        assert!(s.find("\"assertions\"").unwrap() < s.find("\"task\"").unwrap());
    }

    #[test]
    fn nan_never_passes() {
        assert!(!Assertion::at_most("x", "q", f64::NAN, 1.0).pass);
        assert!(Assertion::at_most("x", "q", 1.0, 1.0).pass);
        let line = Assertion::at_most("MT1", "residual", 2e-13, 1e-12).to_string();
        assert_eq!(line, "PASS [MT1] residual = 2.000e-13 (tol 1e-12)");
    }
}
