//! Report files. Two shapes only: a fixed-order `key = value` summary and a
//! `step,parameter,value,error_bound` CSV for sequence-producing tasks.
//! Floats are printed with 17 significant digits so identical runs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Default)]
pub struct Summary {
    lines: Vec<(String, String)>,
}

impl Summary {
    pub fn new(task: &str) -> Self {
        let mut s = Summary::default();
        s.push_str("task", task);
        s
    }

    pub fn push_str(&mut self, key: &str, value: &str) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.push_str(key, &fmt_f64(value));
    }

    pub fn push_usize(&mut self, key: &str, value: usize) {
        self.push_str(key, &value.to_string());
    }

    pub fn push_bool(&mut self, key: &str, value: bool) {
        self.push_str(key, if value { "true" } else { "false" });
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.render())
    }
}

#[derive(Debug, Default)]
pub struct Csv {
    rows: Vec<(usize, String, f64, f64)>,
}

impl Csv {
    pub fn new() -> Self {
        Csv::default()
    }

    /// Append a row, numbering steps from 1 in insertion order.
    pub fn push(&mut self, parameter: &str, value: f64, error_bound: f64) {
        self.rows
            .push((self.rows.len() + 1, parameter.to_string(), value, error_bound));
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::from("step,parameter,value,error_bound\n");
        for (step, parameter, value, error_bound) in &self.rows {
            let _ = writeln!(
                out,
                "{step},{parameter},{},{}",
                fmt_f64(*value),
                fmt_f64(*error_bound)
            );
        }
        out
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.render())
    }
}
