//! Candidate batch files.
//!
//! Two formats:
//!
//! * `json`: `{"shape": [K, T, A], "candidates": [[[...], ...], ...]}`
//! * `csv`: a `K,T,A` header line, then `K * T` lines of `A` comma-separated
//!   values. Line `i * T + t` (0-based, after the header) holds step `t` of
//!   candidate `i`.
//!
//! Both writers print the shortest representation that parses back to the
//! same `f64`.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch::{validate_batch, BatchError, CandidateBatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchFormat {
    Json,
    Csv,
}

impl BatchFormat {
    /// Guess from the file extension; anything that is not `.csv` or `.txt`
    /// is treated as JSON.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("csv") | Some("txt") => BatchFormat::Csv,
            _ => BatchFormat::Json,
        }
    }
}

impl FromStr for BatchFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" | "structured" => Ok(BatchFormat::Json),
            "csv" | "delimited" => Ok(BatchFormat::Csv),
            other => Err(format!(
                "unknown batch format `{other}` (expected json or csv)"
            )),
        }
    }
}

impl fmt::Display for BatchFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BatchFormat::Json => "json",
            BatchFormat::Csv => "csv",
        })
    }
}

#[derive(Debug, Error)]
pub enum BatchFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed header: {message}")]
    Header { line: usize, message: String },
    #[error("row count mismatch: expected {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: `{cell}` is not a number")]
    NonNumeric {
        line: usize,
        column: usize,
        cell: String,
    },
    #[error("line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("declared shape {declared:?} does not match candidates {found:?}")]
    ShapeDeclaration {
        declared: [usize; 3],
        found: [usize; 3],
    },
    #[error(transparent)]
    Batch(#[from] BatchError),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonBatch {
    shape: [usize; 3],
    candidates: Vec<Vec<Vec<f64>>>,
}

pub fn parse_batch_file(
    path: impl AsRef<Path>,
    format: BatchFormat,
) -> Result<CandidateBatch, BatchFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| BatchFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_batch_str(&text, format)
}

pub fn parse_batch_str(text: &str, format: BatchFormat) -> Result<CandidateBatch, BatchFileError> {
    match format {
        BatchFormat::Json => parse_json(text),
        BatchFormat::Csv => parse_csv(text),
    }
}

pub fn write_batch(batch: &CandidateBatch, format: BatchFormat) -> String {
    match format {
        BatchFormat::Json => {
            let (t, a) = batch.shape();
            let doc = JsonBatch {
                shape: [batch.len(), t, a],
                candidates: batch.to_nested(),
            };
            let mut s = serde_json::to_string(&doc).expect("finite floats always serialize");
            s.push('\n');
            s
        }
        BatchFormat::Csv => write_csv(batch),
    }
}

pub fn write_batch_file(
    path: impl AsRef<Path>,
    batch: &CandidateBatch,
    format: BatchFormat,
) -> std::io::Result<()> {
    std::fs::write(path, write_batch(batch, format))
}

fn parse_json(text: &str) -> Result<CandidateBatch, BatchFileError> {
    let doc: JsonBatch = serde_json::from_str(text).map_err(|e| BatchFileError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let batch = validate_batch(&doc.candidates)?;
    let (t, a) = batch.shape();
    let found = [batch.len(), t, a];
    if found != doc.shape {
        return Err(BatchFileError::ShapeDeclaration {
            declared: doc.shape,
            found,
        });
    }
    Ok(batch)
}

fn parse_csv(text: &str) -> Result<CandidateBatch, BatchFileError> {
    // Blank lines are ignored but still counted for error locations.
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines.next().ok_or_else(|| BatchFileError::Header {
        line: 1,
        message: "file is empty".into(),
    })?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|c| c.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| BatchFileError::Header {
            line: header_line,
            message: format!("`{header}`: {e}"),
        })?;
    let [k, t, a] = dims[..] else {
        return Err(BatchFileError::Header {
            line: header_line,
            message: format!("expected `K,T,A`, found {} fields", dims.len()),
        });
    };
    if k == 0 || t == 0 || a == 0 {
        return Err(BatchFileError::Header {
            line: header_line,
            message: "K, T and A must all be positive".into(),
        });
    }

    let rows: Vec<(usize, &str)> = lines.collect();
    if rows.len() != k * t {
        return Err(BatchFileError::RowCount {
            expected: k * t,
            found: rows.len(),
        });
    }
    let mut vectors = Vec::with_capacity(k);
    let mut current = Vec::with_capacity(t * a);
    for (line, row) in rows {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != a {
            return Err(BatchFileError::ColumnCount {
                line,
                expected: a,
                found: cells.len(),
            });
        }
        for (col, cell) in cells.iter().enumerate() {
            let cell = cell.trim();
            let v = cell
                .parse::<f64>()
                .map_err(|_| BatchFileError::NonNumeric {
                    line,
                    column: col + 1,
                    cell: cell.to_string(),
                })?;
            current.push(v);
        }
        if current.len() == t * a {
            vectors.push(std::mem::replace(&mut current, Vec::with_capacity(t * a)));
        }
    }
    Ok(CandidateBatch::from_flat(t, a, vectors)?)
}

fn write_csv(batch: &CandidateBatch) -> String {
    let (t, a) = batch.shape();
    let mut out = format!("{},{},{}\n", batch.len(), t, a);
    for chunk in batch.chunks() {
        for step in 0..t {
            for (j, v) in chunk.row(step).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{v:?}").expect("writing to a String cannot fail");
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_csv() {
        let b = parse_batch_str("2,1,1\n0.5\n1.5\n", BatchFormat::Csv).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.vector(0), &[0.5]);
        assert_eq!(b.vector(1), &[1.5]);
    }

    #[test]
    fn csv_row_count_mismatch() {
        match parse_batch_str("2,1,1\n0.5\n", BatchFormat::Csv) {
            Err(BatchFileError::RowCount {
                expected: 2,
                found: 1,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_errors_carry_locations() {
        let err = parse_batch_str("1,2,2\n1,2\n3,x\n", BatchFormat::Csv).unwrap_err();
        assert!(
            matches!(
                err,
                BatchFileError::NonNumeric {
                    line: 3,
                    column: 2,
                    ..
                }
            ),
            "{err}"
        );
        let err = parse_batch_str("1,2,2\n1,2\n3\n", BatchFormat::Csv).unwrap_err();
        assert!(matches!(
            err,
            BatchFileError::ColumnCount {
                line: 3,
                expected: 2,
                found: 1
            }
        ));
        let err = parse_batch_str("1,2\n1\n", BatchFormat::Csv).unwrap_err();
        assert!(matches!(err, BatchFileError::Header { line: 1, .. }));
        let err = parse_batch_str("a,b,c\n", BatchFormat::Csv).unwrap_err();
        assert!(matches!(err, BatchFileError::Header { .. }));
        let err = parse_batch_str("", BatchFormat::Csv).unwrap_err();
        assert!(matches!(err, BatchFileError::Header { .. }));
        let err = parse_batch_str("1,1,1\nNaN\n", BatchFormat::Csv).unwrap_err();
        assert!(matches!(err, BatchFileError::Batch(_)));
    }

    #[test]
    fn json_document() {
        let text = r#"{"shape": [2, 1, 2], "candidates": [[[0.0, 1.0]], [[2.0, 3.0]]]}"#;
        let b = parse_batch_str(text, BatchFormat::Json).unwrap();
        assert_eq!(b.shape(), (1, 2));
        assert_eq!(b.vector(1), &[2.0, 3.0]);
        assert_eq!(
            parse_batch_str(&write_batch(&b, BatchFormat::Json), BatchFormat::Json).unwrap(),
            b
        );

        let wrong = r#"{"shape": [3, 1, 2], "candidates": [[[0.0, 1.0]], [[2.0, 3.0]]]}"#;
        assert!(matches!(
            parse_batch_str(wrong, BatchFormat::Json),
            Err(BatchFileError::ShapeDeclaration { .. })
        ));
        let broken = "{\"shape\": [1,1,1],\n \"candidates\": [[[oops]]]}";
        assert!(matches!(
            parse_batch_str(broken, BatchFormat::Json),
            Err(BatchFileError::Json { line: 2, .. })
        ));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            parse_batch_file("/definitely/not/here.csv", BatchFormat::Csv),
            Err(BatchFileError::Io { .. })
        ));
    }

    #[test]
    fn format_names() {
        assert_eq!("CSV".parse::<BatchFormat>(), Ok(BatchFormat::Csv));
        assert_eq!(
            BatchFormat::from_path(Path::new("a/b.csv")),
            BatchFormat::Csv
        );
        assert_eq!(
            BatchFormat::from_path(Path::new("a/b.json")),
            BatchFormat::Json
        );
    }
}
