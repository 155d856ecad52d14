//! Report envelopes and atomic file output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

pub const REPORT_FORMAT: &str = "hypspec-report/1";
pub const TABLE_FORMAT: &str = "hypspec-table/1";

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, pass: value <= bound }
    }
    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, pass: value >= bound }
    }
    pub fn flag(name: &str, pass: bool) -> Self {
        Check { name: name.into(), value: f64::from(u8::from(pass)), bound: 1.0, pass }
    }
}

pub struct Output {
    pub command: &'static str,
    pub config: Value,
    pub result: Value,
    pub checks: Vec<Check>,
    /// (header, rows) for CSV output.
    pub table: Option<(Vec<String>, Vec<Vec<String>>)>,
    /// Pre-rendered artifact that replaces the table (spectrum CSV).
    pub raw_csv: Option<Vec<u8>>,
    pub notes: Vec<String>,
}

impl Output {
    pub fn new(command: &'static str, config: Value, result: Value) -> Self {
        Output { command, config, result, checks: Vec::new(), table: None, raw_csv: None, notes: Vec::new() }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn json(&self) -> Vec<u8> {
        let v = json!({
            "format": REPORT_FORMAT,
            "command": self.command,
            "config": self.config,
            "notes": self.notes,
            "result": self.result,
            "checks": self.checks,
            "pass": self.pass(),
        });
        let mut s = serde_json::to_vec_pretty(&v).expect("report serializes");
        s.push(b'\n');
        s
    }

    pub fn csv(&self) -> Result<Vec<u8>, String> {
        if let Some(raw) = &self.raw_csv {
            return Ok(raw.clone());
        }
        let (header, rows) = self.table.as_ref().ok_or_else(|| format!("{} has no CSV output", self.command))?;
        let mut buf = Vec::new();
        writeln!(buf, "# format={TABLE_FORMAT}").unwrap();
        writeln!(buf, "# command={}", self.command).unwrap();
        if let Value::Object(m) = &self.config {
            for (k, v) in m {
                let v = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                writeln!(buf, "# config.{k}={v}").unwrap();
            }
        }
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(header).map_err(|e| e.to_string())?;
        for r in rows {
            w.write_record(r).map_err(|e| e.to_string())?;
        }
        w.into_inner().map_err(|e| e.to_string())
    }
}

/// Stdout for `None` or `-`; otherwise a sibling temp file renamed into place.
pub fn write_atomic(path: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    let Some(path) = path.filter(|p| p.as_os_str() != "-") else {
        let mut out = std::io::stdout().lock();
        out.write_all(bytes)?;
        return out.flush();
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let res = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if res.is_err() {
        std::fs::remove_file(&tmp).ok();
    }
    res
}
