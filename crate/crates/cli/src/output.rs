//! Plot-ready CSV output and atomic file writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// `%.{digits}g`: shortest of fixed or scientific notation, trailing zeros
/// removed.
pub fn format_g(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Number formatting used in every output file.
pub fn num(v: f64) -> String {
    format_g(v, 12)
}

/// A family of series sharing one x column.
#[derive(Clone, Debug, PartialEq)]
pub struct Curves {
    pub x_name: String,
    pub x: Vec<f64>,
    pub series: Vec<(String, Vec<f64>)>,
}

impl Curves {
    pub fn new(x_name: impl Into<String>, x: Vec<f64>) -> Self {
        Curves {
            x_name: x_name.into(),
            x,
            series: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) -> &mut Self {
        self.series.push((name.into(), values));
        self
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        if self.series.is_empty() {
            return Err(CliError::Usage("no series to emit".into()));
        }
        if let Some((name, _)) = self.series.iter().find(|(_, v)| v.len() != self.x.len()) {
            return Err(CliError::Usage(format!(
                "series '{name}' does not match the length of '{}'",
                self.x_name
            )));
        }
        let mut table = Table::new(
            std::iter::once(self.x_name.clone())
                .chain(self.series.iter().map(|(n, _)| n.clone()))
                .collect(),
        );
        for (i, &x) in self.x.iter().enumerate() {
            table.row(std::iter::once(num(x)).chain(self.series.iter().map(|(_, v)| num(v[i]))).collect());
        }
        table.to_csv()
    }
}

/// Row-oriented CSV built in memory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Data(format!("formatting output: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Data(format!("formatting output: {e}")))
    }
}

/// Writes `contents` to `path` through a temporary sibling file, so a failed
/// run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    write_all_atomic(&[(path.to_path_buf(), contents.to_vec())])
}

/// Stages every file first and renames them into place only when all of them
/// were written.
pub fn write_all_atomic(files: &[(PathBuf, Vec<u8>)]) -> CliResult<()> {
    let fail = |p: &Path, e: std::io::Error| CliError::Data(format!("{}: {e}", p.display()));
    let mut staged = Vec::with_capacity(files.len());
    for (path, contents) in files {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(path, e))?;
        tmp.write_all(contents).map_err(|e| fail(path, e))?;
        tmp.flush().map_err(|e| fail(path, e))?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| fail(path, e.error))?;
    }
    Ok(())
}
