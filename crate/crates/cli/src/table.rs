//! String tables written and read as CSV with 17-significant-digit numbers.

use std::path::Path;

use crate::error::CliError;

pub fn fmt(x: f64) -> String {
    sysid_core::numfmt::g17(x)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r.records().map(|rec| rec.map(|rec| rec.iter().map(String::from).collect())).collect::<Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Column parsed as numbers; empty cells become NaN.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let j = self.column_index(name).ok_or_else(|| CliError::new(1, format!("missing column '{name}'")))?;
        self.rows
            .iter()
            .map(|r| {
                let cell = r[j].as_str();
                if cell.is_empty() {
                    Ok(f64::NAN)
                } else {
                    cell.parse::<f64>().map_err(|_| CliError::new(1, format!("bad number '{cell}' in column '{name}'")))
                }
            })
            .collect()
    }

    pub fn strings(&self, name: &str) -> Option<Vec<&str>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j].as_str()).collect())
    }
}
