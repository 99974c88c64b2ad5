#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn tracesolve(dir: &Path, args: &[&str]) -> Output {
    tracesolve_env(dir, args, &[])
}

pub fn tracesolve_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tracesolve"));
    cmd.current_dir(dir)
        .args(args)
        .env_remove("TRACESOLVE_OUT_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// A CSV document split into its `#` header, column names and data rows.
pub struct Csv {
    pub meta: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn parse(text: &str) -> Self {
        let mut lines = text.lines();
        let mut meta = Vec::new();
        let columns = loop {
            let line = lines.next().expect("column row present");
            if line.starts_with('#') {
                meta.push(line.to_string());
            } else {
                break line.split(',').map(str::to_string).collect();
            }
        };
        let rows = lines
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect();
        Self {
            meta,
            columns,
            rows,
        }
    }

    pub fn col(&self, name: &str) -> usize {
        self.columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("no column {name} in {:?}", self.columns))
    }

    pub fn f(&self, row: usize, name: &str) -> f64 {
        self.rows[row][self.col(name)].parse().unwrap()
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        let prefix = format!("# {key}=");
        self.meta
            .iter()
            .find_map(|l| l.strip_prefix(prefix.as_str()))
    }
}
