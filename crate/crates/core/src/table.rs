//! Numeric CSV tables with named columns.

use std::io::{Read, Write};

use crate::error::{Error, ParseError, Result};

/// A fully numeric CSV table held column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl NumericTable {
    /// Reads a headed CSV where every cell is a number. Empty cells are NaN.
    pub fn read(source: &str, reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(parse_err(source, 1, None, "missing header row"));
        }
        let mut columns = vec![Vec::new(); headers.len()];
        for (i, rec) in rdr.records().enumerate() {
            // header is line 1
            let line = i + 2;
            let rec = rec.map_err(|e| parse_err(source, line, None, e.to_string()))?;
            if rec.len() != headers.len() {
                return Err(parse_err(
                    source,
                    line,
                    None,
                    format!("expected {} fields, found {}", headers.len(), rec.len()),
                ));
            }
            for (j, cell) in rec.iter().enumerate() {
                let v = if cell.is_empty() {
                    f64::NAN
                } else {
                    cell.parse::<f64>()
                        .map_err(|_| parse_err(source, line, Some(&headers[j]), format!("'{cell}' is not a number")))?
                };
                columns[j].push(v);
            }
        }
        Ok(NumericTable { headers, columns })
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|j| self.columns[j].as_slice())
    }

    pub fn require(&self, source: &str, name: &str) -> Result<&[f64]> {
        self.column(name)
            .ok_or_else(|| parse_err(source, 1, Some(name), "required column missing"))
    }

    /// Fails on the first non-finite cell of `name`.
    pub fn require_finite(&self, source: &str, name: &str) -> Result<&[f64]> {
        let col = self.require(source, name)?;
        if let Some(i) = col.iter().position(|v| !v.is_finite()) {
            return Err(parse_err(source, i + 2, Some(name), "value missing or not finite"));
        }
        Ok(col)
    }
}

pub(crate) fn parse_err(source: &str, line: usize, column: Option<&str>, msg: impl Into<String>) -> Error {
    Error::Parse(ParseError {
        source: source.to_string(),
        line,
        column: column.map(str::to_string),
        message: msg.into(),
    })
}

/// Writes columns under `headers`. Numbers use shortest round-trip form,
/// NaN becomes an empty cell.
pub fn write_columns(writer: impl Write, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    debug_assert_eq!(headers.len(), columns.len());
    let n = columns.first().map_or(0, |c| c.len());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(headers)?;
    let mut row = Vec::with_capacity(columns.len());
    for i in 0..n {
        row.clear();
        for c in columns {
            row.push(fmt_num(c[i]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:?}")
    }
}
