//! Row-per-step simulation log with a fixed column order.

use std::io::{Read, Write};
use std::path::Path;

use crate::SimError;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl SimTrace {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<(), SimError> {
        if row.len() != self.columns.len() {
            return Err(SimError::Config(format!(
                "trace row has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Restriction to the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<SimTrace, SimError> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.index(n).ok_or_else(|| SimError::Config(format!("trace has no column {n:?}"))))
            .collect::<Result<_, _>>()?;
        Ok(SimTrace {
            columns: names.to_vec(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&j| r[j]).collect()).collect(),
        })
    }

    /// CSV with 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        let mut buf = Vec::with_capacity(self.columns.len());
        for row in &self.rows {
            buf.clear();
            buf.extend(row.iter().map(|v| format!("{v:.16e}")));
            w.write_record(&buf)?;
        }
        w.flush().map_err(|e| SimError::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, SimError> {
        let mut r = csv::Reader::from_reader(input);
        let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut trace = SimTrace::new(columns);
        for record in r.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| SimError::Config(format!("bad trace value {s:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            trace.push(row)?;
        }
        Ok(trace)
    }

    pub fn save(&self, path: &Path) -> Result<(), SimError> {
        let file = std::fs::File::create(path).map_err(|e| SimError::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let file = std::fs::File::open(path).map_err(|e| SimError::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}
