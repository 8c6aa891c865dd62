use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::Format;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    /// Symbolic zero.
    Exact,
    /// Within tolerance.
    Numeric,
    /// Reported, not judged.
    Info,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub relation: String,
    pub kind: Kind,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, relation: impl Into<String>, kind: Kind, pass: bool) -> Self {
        Check { name: name.into(), relation: relation.into(), kind, pass, value: None, expected: None, detail: None }
    }

    pub fn value(mut self, v: impl Into<String>) -> Self {
        self.value = Some(v.into());
        self
    }

    pub fn expected(mut self, v: impl Into<String>) -> Self {
        self.expected = Some(v.into());
        self
    }

    pub fn detail(mut self, v: impl Into<String>) -> Self {
        self.detail = Some(v.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<Table>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub n: usize,
    pub k: String,
    pub hbar: String,
    pub cutoff: usize,
    pub measure: String,
    pub tol: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub suites: Vec<SuiteResult>,
    /// Milliseconds per suite, only when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<BTreeMap<String, String>>,
}

/// 12 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.11e}", x);
    let v: f64 = s.parse().unwrap_or(x);
    let mag = v.abs().log10();
    if (-5.0..15.0).contains(&mag) {
        let digits = (11 - mag.floor() as i32).max(0) as usize;
        let t = format!("{:.*}", digits, v);
        let t = if t.contains('.') { t.trim_end_matches('0').trim_end_matches('.').to_string() } else { t };
        t
    } else {
        s
    }
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.suites.iter().any(|s| s.error.is_some()) {
            return 3;
        }
        let failed = |k: Kind| self.suites.iter().flat_map(|s| &s.checks).any(|c| c.kind == k && !c.pass);
        if failed(Kind::Exact) {
            1
        } else if failed(Kind::Numeric) {
            2
        } else {
            0
        }
    }
}

fn kind_str(k: Kind) -> &'static str {
    match k {
        Kind::Exact => "exact",
        Kind::Numeric => "numeric",
        Kind::Info => "info",
    }
}

fn status(c: &Check) -> &'static str {
    match (c.kind, c.pass) {
        (Kind::Info, _) => "INFO",
        (_, true) => "PASS",
        (_, false) => "FAIL",
    }
}

fn csv_section(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w)?;
    w.into_inner().map_err(|e| e.into_error().into())
}

/// Checks first, then one blank-line separated section per table.
fn csv_bytes(r: &Report) -> Result<Vec<u8>, csv::Error> {
    let mut out = csv_section(|w| {
        w.write_record(["suite", "name", "kind", "status", "value", "expected", "relation"])?;
        for s in &r.suites {
            if let Some(e) = &s.error {
                w.write_record([s.suite.as_str(), "error", "", "ERROR", "", "", e.as_str()])?;
            }
            for c in &s.checks {
                w.write_record([
                    s.suite.as_str(),
                    &c.name,
                    kind_str(c.kind),
                    status(c),
                    c.value.as_deref().unwrap_or(""),
                    c.expected.as_deref().unwrap_or(""),
                    &c.relation,
                ])?;
            }
        }
        Ok(())
    })?;
    for s in &r.suites {
        for t in &s.tables {
            out.push(b'\n');
            out.extend(csv_section(|w| {
                w.write_record(["suite", "table"].into_iter().chain(t.columns.iter().map(String::as_str)))?;
                for row in &t.rows {
                    w.write_record([s.suite.as_str(), t.name.as_str()].into_iter().chain(row.iter().map(String::as_str)))?;
                }
                Ok(())
            })?);
        }
    }
    Ok(out)
}

fn text(r: &Report) -> String {
    let mut out = String::new();
    let c = &r.config;
    let _ = writeln!(out, "n={} k={} hbar={} cutoff={} measure={}", c.n, c.k, c.hbar, c.cutoff, c.measure);
    for s in &r.suites {
        let _ = writeln!(out, "== {}", s.suite);
        if let Some(e) = &s.error {
            let _ = writeln!(out, "  ERROR {e}");
        }
        for ch in &s.checks {
            let _ = write!(out, "  [{}] {:7} {}", status(ch), kind_str(ch.kind), ch.name);
            if let Some(v) = &ch.value {
                let _ = write!(out, ": computed {v}");
            }
            if let Some(e) = &ch.expected {
                let _ = write!(out, ", claimed {e}");
            }
            let _ = writeln!(out);
            if let Some(d) = &ch.detail {
                let _ = writeln!(out, "          {d}");
            }
        }
        for t in &s.tables {
            let _ = writeln!(out, "  {}: {}", t.name, t.columns.join(" | "));
            for row in &t.rows {
                let _ = writeln!(out, "    {}", row.join(" | "));
            }
        }
    }
    if let Some(t) = &r.timing_ms {
        for (k, v) in t {
            let _ = writeln!(out, "time {k}: {v} ms");
        }
    }
    let _ = writeln!(out, "exit {}", r.exit_code());
    out
}

pub fn emit(r: &Report, format: Format) -> std::io::Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(r)?;
            v.push(b'\n');
            Ok(v)
        }
        Format::Csv => csv_bytes(r).map_err(std::io::Error::other),
        Format::Text => Ok(text(r).into_bytes()),
    }
}
