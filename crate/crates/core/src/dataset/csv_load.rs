use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{DatasetError, LabeledDataset, Result};
use crate::Scalar;

/// A column addressed by header name or by position.
///
/// Negative positions count from the end (`-1` is the last column).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(i64),
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Index(-1)
    }
}

impl From<&str> for LabelColumn {
    fn from(s: &str) -> Self {
        match s.parse::<i64>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    Comma,
    Semicolon,
    Tab,
    /// Runs of spaces or tabs, as in several UCI `.data` files.
    Whitespace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvOptions {
    pub delimiter: Delimiter,
    pub has_header: bool,
    pub label_column: LabelColumn,
    /// Columns that are neither features nor the label (ids, categorical fields).
    pub ignore_columns: Vec<LabelColumn>,
    /// Cell values treated as missing, compared after trimming.
    pub missing_markers: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: Delimiter::Comma,
            has_header: true,
            label_column: LabelColumn::default(),
            ignore_columns: Vec::new(),
            missing_markers: ["", "?", "NA", "NaN", "nan"].map(String::from).to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadReport<T> {
    pub dataset: LabeledDataset<T>,
    /// Rows discarded for a missing, unparseable or non-finite cell.
    pub dropped_rows: usize,
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, options: &CsvOptions) -> Result<LoadReport<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DatasetError::File { path: path.display().to_string(), source })?;
    read_csv(file, options)
}

pub fn read_csv<T: Scalar, R: Read>(reader: R, options: &CsvOptions) -> Result<LoadReport<T>> {
    let (header, records) = read_records(reader, options)?;
    let width = header.as_ref().map(Vec::len).or_else(|| records.first().map(Vec::len)).ok_or(DatasetError::EmptyDataset)?;

    let label_col = resolve(&options.label_column, header.as_deref(), width)?;
    let mut skip = vec![false; width];
    skip[label_col] = true;
    for col in &options.ignore_columns {
        skip[resolve(col, header.as_deref(), width)?] = true;
    }
    let feature_cols: Vec<usize> = (0..width).filter(|&c| !skip[c]).collect();

    let is_missing = |cell: &str| options.missing_markers.iter().any(|m| m == cell);
    let mut values: Vec<T> = Vec::new();
    let mut raw_labels = Vec::new();
    let mut dropped = 0;
    'rows: for record in &records {
        if record.len() != width {
            dropped += 1;
            continue;
        }
        let label = record[label_col].trim();
        if is_missing(label) {
            dropped += 1;
            continue;
        }
        let start = values.len();
        for &c in &feature_cols {
            let cell = record[c].trim();
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() && !is_missing(cell) => values.push(T::lit(v)),
                _ => {
                    values.truncate(start);
                    dropped += 1;
                    continue 'rows;
                }
            }
        }
        raw_labels.push(label.to_string());
    }
    if raw_labels.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }

    let mut codes: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let labels = raw_labels
        .into_iter()
        .map(|name| {
            *codes.entry(name.clone()).or_insert_with(|| {
                class_names.push(name);
                class_names.len() - 1
            })
        })
        .collect::<Vec<_>>();

    let features = Array2::from_shape_vec((labels.len(), feature_cols.len()), values)
        .map_err(|e| DatasetError::Invalid(e.to_string()))?;
    if dropped > 0 {
        log::info!("dropped {dropped} rows with missing or unparseable cells");
    }
    Ok(LoadReport { dataset: LabeledDataset::new(features, labels, class_names)?, dropped_rows: dropped })
}

/// Writes a comma-separated file with header `x1..xD,class`, the class as
/// its name. Values use the shortest representation that parses back exactly.
pub fn write_csv<T: Scalar, W: Write>(ds: &LabeledDataset<T>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=ds.n_features()).map(|j| format!("x{j}")).collect();
    header.push("class".into());
    w.write_record(&header)?;
    for (row, &l) in ds.features().outer_iter().zip(ds.labels()) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(ds.class_names()[l].clone());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| DatasetError::File { path: "<output>".into(), source })?;
    Ok(())
}

type Records = (Option<Vec<String>>, Vec<Vec<String>>);

fn read_records<R: Read>(mut reader: R, options: &CsvOptions) -> Result<Records> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    match options.delimiter {
        Delimiter::Whitespace => {
            let mut text = String::new();
            reader
                .read_to_string(&mut text)
                .map_err(|source| DatasetError::File { path: "<input>".into(), source })?;
            rows.extend(
                text.lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| l.split_whitespace().map(String::from).collect()),
            );
        }
        d => {
            let byte = match d {
                Delimiter::Comma => b',',
                Delimiter::Semicolon => b';',
                _ => b'\t',
            };
            let mut rdr = csv::ReaderBuilder::new().delimiter(byte).has_headers(false).flexible(true).from_reader(reader);
            for rec in rdr.records() {
                let rec = rec?;
                if rec.len() == 1 && rec[0].trim().is_empty() {
                    continue;
                }
                rows.push(rec.iter().map(String::from).collect());
            }
        }
    }
    let header = if options.has_header && !rows.is_empty() { Some(rows.remove(0)) } else { None };
    Ok((header, rows))
}

fn resolve(col: &LabelColumn, header: Option<&[String]>, width: usize) -> Result<usize> {
    match col {
        LabelColumn::Index(i) => {
            let idx = if *i < 0 { width as i64 + i } else { *i };
            if idx < 0 || idx >= width as i64 {
                return Err(DatasetError::Schema(format!("column {i} out of range for {width} columns")));
            }
            Ok(idx as usize)
        }
        LabelColumn::Name(name) => {
            let header = header.ok_or_else(|| DatasetError::Schema(format!("column {name:?} named but file has no header")))?;
            header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| DatasetError::Schema(format!("no column named {name:?}")))
        }
    }
}
