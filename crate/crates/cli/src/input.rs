//! Two-column CSV ingestion.
//!
//! Rows are `x,y` with decimal or integer literals. A single leading header
//! row is skipped when it does not parse as numbers. Empty lines are ignored.

use std::path::Path;

use sha2::{Digest, Sha256};
use xiboot_core::PairedSample;

use crate::error::CliError;

/// Parsed input together with its content digest.
#[derive(Debug, Clone)]
pub struct Input {
    pub sample: PairedSample,
    pub digest: String,
    pub header: Option<Header>,
}

/// First 64 bits of the SHA-256 of `bytes`, as 16 hex digits.
pub fn digest64(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let mut word = [0u8; 8];
    word.copy_from_slice(&hash[..8]);
    format!("{:016x}", u64::from_be_bytes(word))
}

fn parse_number(field: &str) -> Option<f64> {
    field.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Column names from an auto-detected header row.
pub type Header = (String, String);

/// Data rows and the header, if one was found.
pub type Parsed = (Vec<(f64, f64)>, Option<Header>);

pub fn parse_pairs(bytes: &[u8]) -> Result<Parsed, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut pairs = Vec::new();
    let mut header = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(CliError::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        match (parse_number(&record[0]), parse_number(&record[1])) {
            (Some(x), Some(y)) => pairs.push((x, y)),
            _ if idx == 0 && parse_number(&record[0]).is_none() && parse_number(&record[1]).is_none() => {
                header = Some((record[0].to_string(), record[1].to_string()));
            }
            _ => {
                return Err(CliError::Parse {
                    line,
                    message: format!("not a finite number pair: {:?},{:?}", &record[0], &record[1]),
                })
            }
        }
    }
    Ok((pairs, header))
}

pub fn read_input(path: &Path) -> Result<Input, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let (pairs, header) = parse_pairs(&bytes)?;
    let sample = PairedSample::from_pairs(pairs)?;
    Ok(Input {
        sample,
        digest: digest64(&bytes),
        header,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_detected() {
        let (with, header) = parse_pairs(b"x,y\n1,2\n3,4.5\n").unwrap();
        let (without, none) = parse_pairs(b"1,2\n3,4.5\n").unwrap();
        assert_eq!(with, without);
        assert_eq!(header, Some(("x".into(), "y".into())));
        assert_eq!(none, None);
    }

    #[test]
    fn crlf_and_blank_lines() {
        let (pairs, _) = parse_pairs(b"1,2\r\n\r\n3, 4\r\n").unwrap();
        assert_eq!(pairs, vec![(1.0, 2.0), (3.0, 4.0)]);
    }

    #[test]
    fn malformed_rows_report_line() {
        match parse_pairs(b"x,y\n1,2\n3,abc\n") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_pairs(b"1,2\n3\n") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_pairs(b"1,2\nnan,3\n").is_err());
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(digest64(b"1,2\n"), digest64(b"1,2\n"));
        assert_ne!(digest64(b"1,2\n"), digest64(b"1,3\n"));
        assert_eq!(digest64(b"").len(), 16);
    }
}
