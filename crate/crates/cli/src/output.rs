//! CSV and JSON writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// C-style `%.12e`: twelve mantissa digits and a signed exponent of at least
/// two digits.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// A CSV cell.
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::Bool(v)
    }
}

pub struct Table {
    header: Vec<&'static str>,
    body: String,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), body: String::new() }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.header.len());
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.body.push(',');
            }
            match c {
                Cell::Float(v) => self.body.push_str(&sci(*v)),
                Cell::Int(v) => write!(self.body, "{v}").unwrap(),
                Cell::Bool(v) => self.body.push_str(if *v { "1" } else { "0" }),
            }
        }
        self.body.push('\n');
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        let mut text = self.header.join(",");
        text.push('\n');
        text.push_str(&self.body);
        write_file(dir, name, &text)
    }
}

/// Pretty JSON with keys in sorted order.
pub fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialise");
    text.push('\n');
    write_file(dir, name, &text)
}

pub fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| CliError::Output { path: path.clone(), source })?;
    Ok(path)
}
