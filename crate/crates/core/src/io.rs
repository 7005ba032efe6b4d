//! Small text-output helpers shared by reports, traces and densities.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

/// Format a real with enough digits to round-trip.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table with a schema comment line followed by a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    schema: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(schema: &str, header: &[&str]) -> Self {
        Self {
            schema: schema.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_reals(&mut self, row: &[f64]) {
        self.push(row.iter().map(|x| fmt_real(*x)).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# schema: {} v1", self.schema);
        let _ = writeln!(s, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn table_layout() {
        let mut t = CsvTable::new("density", &["z", "pdf"]);
        t.push_reals(&[0.0, 0.5]);
        let text = t.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# schema: density v1");
        assert_eq!(lines[1], "z,pdf");
        assert_eq!(lines.len(), 3);
    }
}
