//! `consumers.csv` and `complaints.csv`.

use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::NaiveDate;

use super::{ComplaintRecord, ConsumerCount, YearMonth};
use crate::graph::VertexId;
use crate::io::{read_table, Collector, InputError};

pub const CONSUMERS_HEADER: [&str; 4] = ["municipality_id", "operator", "year_month", "consumers"];
pub const COMPLAINTS_HEADER: [&str; 4] = ["municipality_id", "operator", "date", "count"];

fn key(row_muni: &str, row_op: &str) -> Result<(VertexId, String), String> {
    let muni = VertexId::new(row_muni).map_err(|e| e.to_string())?;
    if row_op.is_empty() {
        return Err("operator must not be empty".into());
    }
    Ok((muni, row_op.to_owned()))
}

pub fn read_consumers<R: Read>(reader: R, file: &str) -> Result<Vec<ConsumerCount>, InputError> {
    let rows = read_table(reader, file, &CONSUMERS_HEADER)?;
    let mut errors = Collector::new(file);
    let mut first_seen: HashMap<(VertexId, String, YearMonth), u64> = HashMap::new();
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let (municipality, operator) = match key(row.get(0), row.get(1)) {
            Ok(k) => k,
            Err(e) => {
                errors.push(row.line, e);
                continue;
            }
        };
        let month = match row.get(2).parse::<YearMonth>() {
            Ok(m) => m,
            Err(e) => {
                errors.push(row.line, e);
                continue;
            }
        };
        let Ok(consumers) = row.get(3).parse::<u64>() else {
            errors.push(
                row.line,
                format!("consumers `{}` must be a non-negative integer", row.get(3)),
            );
            continue;
        };
        if let Some(first) = first_seen.insert((municipality.clone(), operator.clone(), month), row.line) {
            errors.push(
                row.line,
                format!("duplicate consumer count for {municipality}/{operator} in {month}, first on line {first}"),
            );
            continue;
        }
        out.push(ConsumerCount {
            municipality,
            operator,
            month,
            consumers,
        });
    }
    errors.finish()?;
    Ok(out)
}

pub fn read_complaints<R: Read>(reader: R, file: &str) -> Result<Vec<ComplaintRecord>, InputError> {
    let rows = read_table(reader, file, &COMPLAINTS_HEADER)?;
    let mut errors = Collector::new(file);
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let (municipality, operator) = match key(row.get(0), row.get(1)) {
            Ok(k) => k,
            Err(e) => {
                errors.push(row.line, e);
                continue;
            }
        };
        let Ok(date) = NaiveDate::parse_from_str(row.get(2), "%Y-%m-%d") else {
            errors.push(row.line, format!("`{}` is not a YYYY-MM-DD date", row.get(2)));
            continue;
        };
        let Ok(count) = row.get(3).parse::<u64>() else {
            errors.push(row.line, format!("count `{}` must be a non-negative integer", row.get(3)));
            continue;
        };
        out.push(ComplaintRecord {
            municipality,
            operator,
            date,
            count,
        });
    }
    errors.finish()?;
    Ok(out)
}

pub fn write_consumers<W: Write>(records: &[ConsumerCount], writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CONSUMERS_HEADER)?;
    for r in records {
        w.write_record([
            r.municipality.as_str(),
            &r.operator,
            &r.month.to_string(),
            &r.consumers.to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_complaints<W: Write>(records: &[ComplaintRecord], writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COMPLAINTS_HEADER)?;
    for r in records {
        w.write_record([
            r.municipality.as_str(),
            &r.operator,
            &r.date.format("%Y-%m-%d").to_string(),
            &r.count.to_string(),
        ])?;
    }
    w.flush()
}
