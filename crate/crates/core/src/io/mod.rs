//! CSV table plumbing shared by every input format.

mod edge_list;

use std::fmt;
use std::io::Read;

use thiserror::Error;

pub use edge_list::{read_edge_list, write_edge_list, EDGE_LIST_HEADER};

/// One rejected input row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub file: String,
    /// 1-based line number; the header is line 1.
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.file, self.line, self.reason)
    }
}

/// Every row-level problem found in one pass over the inputs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl ValidationErrors {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ValidationError> {
        self.0.iter()
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Validation(ValidationErrors),
}

impl From<ValidationErrors> for InputError {
    fn from(e: ValidationErrors) -> Self {
        InputError::Validation(e)
    }
}

/// Accumulates validation errors for one file.
#[derive(Debug)]
pub(crate) struct Collector {
    file: String,
    errors: Vec<ValidationError>,
}

impl Collector {
    pub fn new(file: &str) -> Self {
        Self {
            file: file.to_owned(),
            errors: Vec::new(),
        }
    }

    pub fn push(&mut self, line: u64, reason: impl Into<String>) {
        self.errors.push(ValidationError {
            file: self.file.clone(),
            line,
            reason: reason.into(),
        });
    }

    pub fn finish(mut self) -> Result<(), ValidationErrors> {
        self.errors.sort_by_key(|e| e.line);
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(ValidationErrors(self.errors))
        }
    }

}

/// A data row with its line number.
#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub line: u64,
    pub fields: Vec<String>,
}

impl Row {
    pub fn get(&self, i: usize) -> &str {
        &self.fields[i]
    }
}

/// Reads a comma-separated table with an exact header.
///
/// Rows with the wrong number of fields are reported as validation errors;
/// only I/O failures abort the read. Blank lines are skipped but still count
/// towards line numbers.
pub(crate) fn read_table<R: Read>(mut reader: R, file: &str, header: &[&str]) -> Result<Vec<Row>, InputError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(|source| InputError::Io {
        file: file.to_owned(),
        source,
    })?;
    let mut collector = Collector::new(file);
    let text = match String::from_utf8(bytes) {
        Ok(t) => t,
        Err(e) => {
            let valid = e.utf8_error().valid_up_to();
            let line = e.as_bytes()[..valid].iter().filter(|&&b| b == b'\n').count() as u64 + 1;
            collector.push(line, "invalid UTF-8");
            return Err(collector.finish().unwrap_err().into());
        }
    };
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx as u64 + 1;
        let raw = if idx == 0 { raw.trim_start_matches('\u{feff}') } else { raw };
        if raw.trim().is_empty() {
            continue;
        }
        let fields = match split_fields(raw) {
            Ok(f) => f,
            Err(reason) => {
                collector.push(line, reason);
                continue;
            }
        };
        if !seen_header {
            seen_header = true;
            if fields != header {
                collector.push(
                    line,
                    format!("expected header `{}`, found `{}`", header.join(","), fields.join(",")),
                );
                return Err(collector.finish().unwrap_err().into());
            }
            continue;
        }
        if fields.len() != header.len() {
            collector.push(
                line,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            );
            continue;
        }
        rows.push(Row { line, fields });
    }
    if !seen_header {
        collector.push(1, format!("missing header `{}`", header.join(",")));
    }
    collector.finish()?;
    Ok(rows)
}

fn split_fields(line: &str) -> Result<Vec<String>, String> {
    if !line.contains('"') {
        return Ok(line.split(',').map(|f| f.trim().to_owned()).collect());
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(line.as_bytes());
    match rdr.records().next() {
        Some(Ok(record)) => Ok(record.iter().map(str::to_owned).collect()),
        Some(Err(e)) => Err(format!("malformed CSV: {e}")),
        None => Ok(vec![String::new()]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_rows_with_line_numbers() {
        let text = "a,b\n1,2\n\n3,4\n";
        let rows = read_table(text.as_bytes(), "t.csv", &["a", "b"]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].line, 2);
        assert_eq!(rows[1].line, 4);
        assert_eq!(rows[1].get(1), "4");
    }

    #[test]
    fn header_mismatch_is_validation_error() {
        let err = read_table("x,y\n1,2\n".as_bytes(), "t.csv", &["a", "b"]).unwrap_err();
        let InputError::Validation(v) = err else { panic!() };
        assert_eq!(v.0[0].line, 1);
        assert!(v.to_string().starts_with("t.csv:1: expected header"));
    }

    #[test]
    fn wrong_field_count_is_reported_per_line() {
        let err = read_table("a,b\n1\n2,3\n4,5,6\n".as_bytes(), "t.csv", &["a", "b"]).unwrap_err();
        let InputError::Validation(v) = err else { panic!() };
        let lines: Vec<u64> = v.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 4]);
    }

    #[test]
    fn quoted_fields_are_unquoted() {
        let rows = read_table("a,b\n\"x, y\",2\n".as_bytes(), "t.csv", &["a", "b"]).unwrap();
        assert_eq!(rows[0].get(0), "x, y");
    }

    #[test]
    fn empty_file_reports_missing_header() {
        let err = read_table("".as_bytes(), "t.csv", &["a"]).unwrap_err();
        assert!(matches!(err, InputError::Validation(_)));
    }
}
