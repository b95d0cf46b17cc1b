//! CSV tables with a `#`-comment run manifest.
//!
//! A file is a block of `# key = value` comment lines, one header row, then data rows.
//! Floats are written with 17 significant digits, which round-trips every `f64` exactly.
//! The comment block parses with [`crate::config::parse_config`] once the `# ` prefix is
//! stripped.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::ensemble::SweepResult;
use crate::error::{Error, Result};
use crate::fitting::FitResult;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Float(x) => f.write_str(&format_float(*x)),
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<isize> for Value {
    fn from(i: isize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

/// 17 significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Dimension {
                expected: self.header.len(),
                got: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }
}

/// Provenance block written as comments above the header row.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    /// Fully resolved parameters, in the order they are written.
    pub params: Vec<(String, String)>,
    pub outputs: Vec<String>,
    /// Start time (Unix seconds) and elapsed seconds; left out when `None`.
    pub timing: Option<(u64, f64)>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            params: Vec::new(),
            outputs: Vec::new(),
            timing: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.push((key.into(), value.to_string()));
        self
    }

    /// `key = value` lines, without the comment marker.
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("command = {}", self.command),
            format!("version = {}", self.version),
            format!("seed = {}", self.seed),
        ];
        out.extend(self.params.iter().map(|(k, v)| format!("{k} = {v}")));
        out.extend(self.outputs.iter().map(|p| format!("output = {p}")));
        if let Some((start, elapsed)) = self.timing {
            out.push(format!("started_unix = {start}"));
            out.push(format!("wall_time_s = {elapsed:.3}"));
        }
        out
    }
}

pub fn write_table<W: Write>(mut w: W, manifest: Option<&RunManifest>, table: &Table) -> std::io::Result<()> {
    if let Some(m) = manifest {
        for line in m.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(&table.header)?;
    for row in &table.rows {
        csv.write_record(row.iter().map(ToString::to_string))?;
    }
    csv.flush()
}

pub fn write_table_file(path: &Path, manifest: Option<&RunManifest>, table: &Table) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    write_table(&mut w, manifest, table).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// A table read back as text, with its comment block.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedTable {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedTable {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidConfig(format!("no column '{name}'")))
    }

    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column_index(name)?;
        self.rows
            .iter()
            .map(|row| {
                row[c]
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidConfig(format!("column '{name}': {e}")))
            })
            .collect()
    }

    /// Everything below the comment block, i.e. the part that must be reproducible.
    pub fn body(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn read_table<R: Read>(mut r: R, path: &str) -> Result<ParsedTable> {
    let mut text = String::new();
    r.read_to_string(&mut text).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    let comments = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim().to_string())
        .collect();
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = reader
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)?;
    Ok(ParsedTable {
        comments,
        header,
        rows,
    })
}

pub fn read_table_file(path: &Path) -> Result<ParsedTable> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_table(file, &path.display().to_string())
}

/// Long format: one row per `(λ, column)` with mean, standard error and count.
///
/// Scalar observables drop the column axis, giving `lambda,<value>,stderr,realizations`.
pub fn sweep_table(result: &SweepResult, value: &str) -> Table {
    let scalar = result.column_name == "observable";
    let mut header = vec!["lambda".to_string()];
    if !scalar {
        header.push(result.column_name.to_string());
    }
    header.extend([value.to_string(), "stderr".into(), "realizations".into()]);
    let mut table = Table::new(header);
    for (k, &lambda) in result.lambdas.iter().enumerate() {
        for (c, &col) in result.columns.iter().enumerate() {
            let mut row = vec![Value::Float(lambda)];
            if !scalar {
                row.push(column_value(result.column_name, col));
            }
            row.push(result.mean[k][c].into());
            row.push(result.stderr[k][c].into());
            row.push(result.counts[k][c].into());
            table.rows.push(row);
        }
    }
    table
}

// offsets and bond indices are integers; times are not
fn column_value(name: &str, x: f64) -> Value {
    match name {
        "offset" | "bond" | "component" => Value::Int(x as i64),
        _ => Value::Float(x),
    }
}

/// `param,value` rows: the fitted parameters, then `r2`, `residual_norm`, `iterations`
/// and `converged`.
pub fn fit_table(fit: &FitResult) -> Table {
    let mut table = Table::new(["param", "value"]);
    for &(name, v) in &fit.params {
        table.rows.push(vec![Value::Text(name.into()), v.into()]);
    }
    table.rows.push(vec![Value::Text("r2".into()), fit.r2.into()]);
    table
        .rows
        .push(vec![Value::Text("residual_norm".into()), fit.residual_norm.into()]);
    table
        .rows
        .push(vec![Value::Text("iterations".into()), fit.iterations.into()]);
    table
        .rows
        .push(vec![Value::Text("converged".into()), fit.converged.into()]);
    table
}
