//! Table rendering (CSV or structured text) and atomic file writes.

use std::io::Write;
use std::path::Path;

use crate::config::OutputFormat;
use crate::error::CliError;

/// A rectangular result table with a fixed column order.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV with a header line, `\n` newlines, no quoting (cell values never
    /// contain commas or newlines).
    pub fn render(&self, format: OutputFormat) -> String {
        let mut out = String::new();
        match format {
            OutputFormat::Csv => {
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for row in &self.rows {
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
            }
            OutputFormat::StructuredText => {
                for row in &self.rows {
                    let line: Vec<String> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| format!("{c}={v}"))
                        .collect();
                    out.push_str(&line.join(" "));
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Lossless decimal rendering of a double (17 significant digits),
/// locale-independent.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes via a temporary file in the destination directory plus an atomic
/// rename, so failed runs never leave a partial output behind.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let wrap = |source: std::io::Error| CliError::Write {
        path: path.display().to_string(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(wrap)?;
    tmp.write_all(content.as_bytes()).map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_text_rendering() {
        let mut t = Table::new(vec!["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        assert_eq!(t.render(OutputFormat::Csv), "a,b\n1,2\n");
        assert_eq!(t.render(OutputFormat::StructuredText), "a=1 b=2\n");
    }

    #[test]
    fn numbers_round_trip_exactly() {
        for x in [0.25, 1.0 / 3.0, 7.6e7, -1e-10, std::f64::consts::PI] {
            let parsed: f64 = num(x).parse().unwrap();
            assert_eq!(parsed, x);
        }
    }

    #[test]
    fn atomic_write_creates_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a,b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n");
    }
}
