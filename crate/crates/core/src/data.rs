//! Reading observations from text: one number per line, `#` comments, or a
//! single-column CSV with an optional header.

use std::fs;
use std::path::Path;

use crate::error::{Result, TailError};

/// Parse observations from `text`.
///
/// Blank lines and lines starting with `#` are skipped. A non-numeric first
/// data line is taken as a CSV header; any later non-numeric or non-finite
/// value is an error naming its (1-based) line.
pub fn parse_observations(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut header_allowed = true;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim().trim_start_matches('\u{feff}');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.strip_suffix(',').unwrap_or(line).trim();
        if field.contains(',') {
            return Err(TailError::Data {
                line: line_no,
                reason: format!("expected a single column, found '{line}'"),
            });
        }
        let field = field.trim_matches('"').trim();
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => {
                return Err(TailError::Data {
                    line: line_no,
                    reason: format!("value {v} is not finite"),
                })
            }
            Err(_) if header_allowed => {}
            Err(_) => {
                return Err(TailError::Data {
                    line: line_no,
                    reason: format!("'{field}' is not a number"),
                })
            }
        }
        header_allowed = false;
    }
    if values.is_empty() {
        return Err(TailError::InvalidArgument("no observations found".into()));
    }
    Ok(values)
}

pub fn read_observations(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| TailError::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    parse_observations(&text).map_err(|e| e.context(path.display().to_string()))
}
