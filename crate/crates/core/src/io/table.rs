//! CSV tables with a declared header and a guard against non-finite numbers.
//!
//! A table is serialized in memory first. If any field is NaN or infinite the
//! target file is not written; a `<name>.error.json` record is left next to it
//! instead, and the error is returned.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// Where a non-finite value was found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvFault {
    pub file: String,
    pub row: usize,
    pub column: String,
    pub value: String,
    pub error: String,
}

/// Serialize `rows` under `header`. Each row must flatten to exactly
/// `header.len()` fields.
pub fn csv_string<S: Serialize>(header: &[&str], rows: &[S]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?;
    check_table(&text, header)?;
    Ok(text)
}

fn check_table(text: &str, header: &[&str]) -> Result<()> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::InvalidParameter(format!(
                "row {row} has {} fields but the header declares {}",
                rec.len(),
                header.len()
            )));
        }
        for (col, field) in rec.iter().enumerate() {
            if let Ok(v) = field.parse::<f64>() {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        row,
                        column: header[col].to_string(),
                        value: field.to_string(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Sidecar path for `path`: `trace.csv` → `trace.csv.error.json`.
pub fn error_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".error.json");
    PathBuf::from(s)
}

/// Write a table to `path`, or leave an error sidecar and write nothing.
pub fn write_csv<S: Serialize>(path: &Path, header: &[&str], rows: &[S]) -> Result<()> {
    match csv_string(header, rows) {
        Ok(text) => {
            fs::write(path, text)?;
            let _ = fs::remove_file(error_sidecar(path));
            Ok(())
        }
        Err(e) => {
            let (row, column, value) = match &e {
                Error::NonFinite { row, column, value } => (*row, column.clone(), value.clone()),
                _ => (0, String::new(), String::new()),
            };
            let fault = CsvFault {
                file: path.display().to_string(),
                row,
                column,
                value,
                error: e.to_string(),
            };
            let json = serde_json::to_string_pretty(&fault).map_err(|j| Error::Io(j.to_string()))?;
            let _ = fs::remove_file(path);
            fs::write(error_sidecar(path), json + "\n")?;
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        t: f64,
        phase: &'static str,
        iters: usize,
    }

    #[test]
    fn header_and_rows() {
        let rows = [
            Row {
                t: 0.5,
                phase: "elastic",
                iters: 3,
            },
            Row {
                t: 1.0,
                phase: "fracture",
                iters: 12,
            },
        ];
        let s = csv_string(&["t", "phase", "iters"], &rows).unwrap();
        assert_eq!(s, "t,phase,iters\n0.5,elastic,3\n1.0,fracture,12\n");
        let empty: [Row; 0] = [];
        assert_eq!(csv_string(&["t", "phase", "iters"], &empty).unwrap(), "t,phase,iters\n");
    }

    #[test]
    fn non_finite_aborts_with_sidecar() {
        let dir = std::env::temp_dir().join(format!("csv-guard-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        let rows = [(1.0, 2.0), (f64::NAN, 0.0)];
        let err = write_csv(&path, &["a", "b"], &rows).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, .. }), "{err}");
        assert!(!path.exists());
        let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(error_sidecar(&path)).unwrap()).unwrap();
        assert_eq!(side["column"], "a");

        write_csv(&path, &["a", "b"], &[(1.0, 2.0)]).unwrap();
        assert!(path.exists() && !error_sidecar(&path).exists());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn width_mismatch_is_rejected() {
        assert!(csv_string(&["a"], &[(1.0, 2.0)]).is_err());
    }
}
