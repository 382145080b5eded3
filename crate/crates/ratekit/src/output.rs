//! Report writing. Every float goes out with 17 significant digits so that
//! identical runs give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Number, Value};

use crate::{diag, CliError};

/// 17 significant digits, or NaN / inf / -inf.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// JSON number with 17 significant digits. NaN becomes null and the
/// infinities the strings "inf" / "-inf".
pub fn num(x: f64) -> Value {
    if x.is_nan() {
        return Value::Null;
    }
    if x.is_infinite() {
        return Value::String(fmt17(x));
    }
    Value::Number(serde_json::from_str::<Number>(&fmt17(x)).expect("formatted float is a JSON number"))
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

/// Serialises and rewrites every float to the fixed format.
pub fn to_value<T: Serialize>(t: &T) -> Value {
    let mut v = serde_json::to_value(t).expect("report types serialise");
    normalize(&mut v);
    v
}

pub fn normalize(v: &mut Value) {
    match v {
        Value::Number(n) => {
            let s = n.to_string();
            if s.contains(['.', 'e', 'E']) {
                if let Ok(x) = s.parse::<f64>() {
                    *v = num(x);
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(normalize),
        Value::Object(m) => m.values_mut().for_each(normalize),
        _ => {}
    }
}

pub struct OutDir {
    root: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn new(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Output(format!("cannot create {}: {e}", root.display())))?;
        Ok(OutDir { root: root.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, text).map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))?;
        diag::info("wrote", serde_json::json!({ "path": path.display().to_string() }));
        self.written.push(path);
        Ok(())
    }

    pub fn json(&mut self, name: &str, v: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(v).expect("JSON values print");
        text.push('\n');
        self.write(name, &text)
    }

    pub fn csv(&mut self, name: &str, table: &Csv) -> Result<(), CliError> {
        self.write(name, &table.text)
    }

    pub fn svg(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.write(name, text)
    }
}

/// Minimal CSV builder; cells never contain separators.
pub struct Csv {
    text: String,
    columns: usize,
}

pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::I(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::S(s)
    }
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { text: format!("{}\n", header.join(",")), columns: header.len() }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns, "CSV row width");
        let parts: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::F(x) => fmt17(x),
                Cell::I(i) => i.to_string(),
                Cell::S(s) => s.replace([',', '\n'], ";"),
            })
            .collect();
        self.text.push_str(&parts.join(","));
        self.text.push('\n');
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}
