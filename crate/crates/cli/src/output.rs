//! CSV and JSON writers. Floats carry 17 significant digits in CSV; JSON uses the
//! shortest representation that parses back to the same `f64`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::Format;
use crate::sweep::{SweepResult, SCHEMA_VERSION};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn sweep_header(axis_names: &[String]) -> Vec<String> {
    let mut h = vec!["model".to_string(), "L".to_string()];
    h.extend(axis_names.iter().cloned());
    h.extend(
        [
            "epsilon",
            "definition",
            "re_F",
            "im_F",
            "re_chi",
            "im_chi",
            "re_chi_density",
            "pt_class_a",
            "pt_class_b",
            "ep_flag",
            "error",
        ]
        .map(String::from),
    );
    h
}

pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_header(&result.axis_names))?;
    for r in &result.records {
        let mut rec = vec![r.model.clone(), r.l.to_string()];
        rec.extend(r.axes.iter().map(|&x| fmt_f64(x)));
        rec.extend([
            fmt_f64(r.epsilon),
            r.definition.clone(),
            opt(r.re_f),
            opt(r.im_f),
            opt(r.re_chi),
            opt(r.im_chi),
            opt(r.re_chi_density),
            r.pt_class_a.clone().unwrap_or_default(),
            r.pt_class_b.clone().unwrap_or_default(),
            r.ep_flag.clone(),
            r.error.clone().unwrap_or_default(),
        ]);
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep<W: Write>(result: &SweepResult, format: Format, mut out: W) -> std::io::Result<()> {
    match format {
        Format::Csv => write_sweep_csv(result, out).map_err(std::io::Error::other),
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, result)?;
            writeln!(out)
        }
    }
}

/// Table cell for the non-sweep subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => fmt_f64(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Column-oriented output of the diagnostic subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub schema_version: u32,
    pub kind: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Free-form summary values (e.g. located EP, Berry phase error estimate).
    pub notes: Vec<(String, Cell)>,
}

impl Table {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: kind.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Cell>) {
        self.notes.push((key.into(), value.into()));
    }

    pub fn write<W: Write>(&self, format: Format, mut out: W) -> std::io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, self)?;
                writeln!(out)
            }
            Format::Csv => {
                for (k, v) in &self.notes {
                    writeln!(out, "# {k} = {}", v.render())?;
                }
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns).map_err(std::io::Error::other)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(Cell::render)).map_err(std::io::Error::other)?;
                }
                w.flush()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        let s = fmt_f64(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
    }
}
