//! Time series as CSV: a header `t,col1,...` then one row per record, every
//! value in scientific notation with 17 significant digits.

use super::IoError;
use crate::diagnostics::DiagnosticsRecord;

fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV text for `records` restricted to `columns` (after the leading `t`).
/// Missing entries are written as `nan`.
pub fn emit_timeseries(records: &[DiagnosticsRecord], columns: &[String]) -> String {
    let mut out = String::from("t");
    for c in columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for r in records {
        out.push_str(&format_value(r.t));
        for c in columns {
            out.push(',');
            out.push_str(&format_value(r.get(c).unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    out
}

/// Parsed CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TimeSeries {
    /// `(t, value)` pairs of a named column.
    pub fn series(&self, column: &str) -> Result<Vec<(f64, f64)>, IoError> {
        let t = self.index("t")?;
        let i = self.index(column)?;
        Ok(self.rows.iter().map(|r| (r[t], r[i])).collect())
    }

    fn index(&self, column: &str) -> Result<usize, IoError> {
        self.columns
            .iter()
            .position(|c| c == column)
            .ok_or_else(|| IoError::Csv {
                line: 1,
                message: format!("no column named '{column}'"),
            })
    }
}

/// Parses CSV produced by [`emit_timeseries`]; requires a nondecreasing `t`.
pub fn parse_timeseries(text: &str) -> Result<TimeSeries, IoError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(IoError::Csv {
        line: 1,
        message: "empty file".into(),
    })?;
    let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if columns.first().map(String::as_str) != Some("t") {
        return Err(IoError::Csv {
            line: 1,
            message: "first column must be 't'".into(),
        });
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in lines {
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| IoError::Csv {
                line: i + 1,
                message: e.to_string(),
            })?;
        if row.len() != columns.len() {
            return Err(IoError::Csv {
                line: i + 1,
                message: format!("expected {} fields, found {}", columns.len(), row.len()),
            });
        }
        if let Some(prev) = rows.last() {
            if row[0] < prev[0] {
                return Err(IoError::Csv {
                    line: i + 1,
                    message: "time column decreases".into(),
                });
            }
        }
        rows.push(row);
    }
    Ok(TimeSeries { columns, rows })
}
