//! Dataset CSV ingestion: header row, feature columns, label column last.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use conformal_core::{Dataset, Example, Label, LabelSpace};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub enum LabelSchema {
    /// Class labels; the alphabet is the declared list, or the sorted distinct
    /// symbols of the file when `None`.
    Classes(Option<Vec<String>>),
    Real,
}

/// A test file row: features and, if the file has a label column, its label.
#[derive(Clone, Debug, PartialEq)]
pub struct TestRow {
    pub object: Vec<f64>,
    pub label: Option<Label>,
}

struct RawTable {
    header: Vec<String>,
    /// (line number, cells)
    rows: Vec<(u64, Vec<String>)>,
}

fn read_table<R: Read>(reader: R, source: &str, min_columns: usize) -> CliResult<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("{source}: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.len() < min_columns || header.iter().all(String::is_empty) {
        return Err(CliError::Data(format!("{source}: header needs at least {min_columns} columns")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Data(format!("{source}: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(RawTable { header, rows })
}

fn parse_real(cell: &str, source: &str, line: u64, column: &str) -> CliResult<f64> {
    let v: f64 = cell.parse().map_err(|_| {
        CliError::Data(format!("{source}: line {line}, column '{column}': '{cell}' is not a number"))
    })?;
    if !v.is_finite() {
        return Err(CliError::Data(format!(
            "{source}: line {line}, column '{column}': non-finite value '{cell}'"
        )));
    }
    Ok(v)
}

fn ragged(source: &str, line: u64, expected: usize, found: usize) -> CliError {
    CliError::Data(format!("{source}: line {line}: expected {expected} fields, found {found}"))
}

fn parse_label(cell: &str, space: &LabelSpace, source: &str, line: u64, column: &str) -> CliResult<Label> {
    match space {
        LabelSpace::RealLine => parse_real(cell, source, line, column).map(Label::Real),
        LabelSpace::Classes(_) => space.lookup(cell).map(Label::Class).ok_or_else(|| {
            CliError::Data(format!("{source}: line {line}: unknown class symbol '{cell}'"))
        }),
    }
}

/// Parses a labelled dataset from any reader; `source` names it in errors.
pub fn load_csv_from<R: Read>(reader: R, source: &str, schema: &LabelSchema) -> CliResult<Dataset> {
    let table = read_table(reader, source, 2)?;
    let width = table.header.len();
    let dim = width - 1;
    for (line, cells) in &table.rows {
        if cells.len() != width {
            return Err(ragged(source, *line, width, cells.len()));
        }
    }
    let space = match schema {
        LabelSchema::Real => LabelSpace::RealLine,
        LabelSchema::Classes(Some(symbols)) => LabelSpace::classes(symbols.iter().cloned())
            .map_err(|e| CliError::Usage(format!("declared labels: {e}")))?,
        LabelSchema::Classes(None) => {
            let distinct: BTreeSet<&str> = table.rows.iter().map(|(_, c)| c[dim].as_str()).collect();
            LabelSpace::classes(distinct).map_err(|_| {
                CliError::Data(format!("{source}: a classification file needs at least two distinct labels"))
            })?
        }
    };
    let label_column = &table.header[dim];
    let mut examples = Vec::with_capacity(table.rows.len());
    for (line, cells) in &table.rows {
        let object = cells[..dim]
            .iter()
            .zip(&table.header)
            .map(|(c, h)| parse_real(c, source, *line, h))
            .collect::<CliResult<Vec<f64>>>()?;
        let label = parse_label(&cells[dim], &space, source, *line, label_column)?;
        examples.push(Example::new(object, label));
    }
    Dataset::new(dim, space, examples).map_err(|e| CliError::Data(format!("{source}: {e}")))
}

pub fn load_csv(path: &Path, schema: &LabelSchema) -> CliResult<Dataset> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    load_csv_from(file, &path.display().to_string(), schema)
}

/// Reads test objects for a trained model with `dim` features. The file may
/// carry the label column (`dim + 1` columns) or omit it (`dim` columns).
pub fn load_test_from<R: Read>(reader: R, source: &str, dim: usize, space: &LabelSpace) -> CliResult<Vec<TestRow>> {
    let table = read_table(reader, source, 1)?;
    let width = table.header.len();
    let labelled = match width {
        w if w == dim + 1 => true,
        w if w == dim => false,
        w => {
            return Err(CliError::Data(format!(
                "{source}: header has {w} columns; expected {dim} features with or without a label column"
            )))
        }
    };
    table
        .rows
        .iter()
        .map(|(line, cells)| {
            if cells.len() != width {
                return Err(ragged(source, *line, width, cells.len()));
            }
            let object = cells[..dim]
                .iter()
                .zip(&table.header)
                .map(|(c, h)| parse_real(c, source, *line, h))
                .collect::<CliResult<Vec<f64>>>()?;
            let label = if labelled {
                Some(parse_label(&cells[dim], space, source, *line, &table.header[dim])?)
            } else {
                None
            };
            Ok(TestRow { object, label })
        })
        .collect()
}

pub fn load_test(path: &Path, dim: usize, space: &LabelSpace) -> CliResult<Vec<TestRow>> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    load_test_from(file, &path.display().to_string(), dim, space)
}
