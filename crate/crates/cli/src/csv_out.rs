//! CSV tables with a `#`-prefixed metadata header.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

pub struct Table {
    schema: String,
    params: Vec<(String, String)>,
    seed: Option<u64>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: &str, columns: &[&str]) -> Self {
        Self {
            schema: schema.to_string(),
            params: Vec::new(),
            seed: None,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# schema={}", self.schema).unwrap();
        writeln!(out, "# generator=tracesolve {}", env!("CARGO_PKG_VERSION")).unwrap();
        for (k, v) in &self.params {
            writeln!(out, "# {k}={v}").unwrap();
        }
        match self.seed {
            Some(s) => writeln!(out, "# seed={s}").unwrap(),
            None => writeln!(out, "# seed=none").unwrap(),
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for r in &self.rows {
            writeln!(out, "{}", r.join(",")).unwrap();
        }
        out
    }

    /// Writes to `path`, or to standard output when `path` is `-`.
    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        let text = self.render();
        if path.as_os_str() == "-" {
            std::io::stdout().write_all(text.as_bytes())
        } else {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, text)
        }
    }
}

/// Shortest round-trip formatting, so equal values give equal bytes.
/// Very small and very large magnitudes switch to exponent notation.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
