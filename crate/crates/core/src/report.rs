//! Estimate rows, written as CSV (`shots,method,quantity,subset,value,stderr,wall_ms`)
//! or as JSON lines.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub shots: u64,
    pub method: String,
    pub quantity: String,
    /// Qubit subset or bipartition label; empty for whole-system quantities.
    pub subset: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub wall_ms: f64,
}

impl EstimateReport {
    pub const CSV_HEADER: [&'static str; 7] =
        ["shots", "method", "quantity", "subset", "value", "stderr", "wall_ms"];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    JsonLines,
}

/// Streams report rows to any writer.
pub struct ReportWriter<W: Write> {
    format: ReportFormat,
    csv: Option<csv::Writer<W>>,
    raw: Option<W>,
}

impl<W: Write> ReportWriter<W> {
    pub fn new(out: W, format: ReportFormat) -> Result<Self> {
        match format {
            ReportFormat::Csv => {
                let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
                w.write_record(EstimateReport::CSV_HEADER)?;
                Ok(ReportWriter {
                    format,
                    csv: Some(w),
                    raw: None,
                })
            }
            ReportFormat::JsonLines => Ok(ReportWriter {
                format,
                csv: None,
                raw: Some(out),
            }),
        }
    }

    /// CSV writes one row per report; JSON lines writes one object per call
    /// holding all rows of an interval.
    pub fn write_interval(&mut self, rows: &[EstimateReport]) -> Result<()> {
        match self.format {
            ReportFormat::Csv => {
                let w = self.csv.as_mut().expect("csv writer");
                for r in rows {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            ReportFormat::JsonLines => {
                let w = self.raw.as_mut().expect("raw writer");
                let shots = rows.first().map(|r| r.shots).unwrap_or(0);
                let obj = serde_json::json!({ "shots": shots, "estimates": rows });
                serde_json::to_writer(&mut *w, &obj)?;
                w.write_all(b"\n")?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

pub fn to_csv_string(rows: &[EstimateReport]) -> Result<String> {
    let mut buf = Vec::new();
    {
        let mut w = ReportWriter::new(&mut buf, ReportFormat::Csv)?;
        w.write_interval(rows)?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> EstimateReport {
        EstimateReport {
            shots: 100,
            method: "shadow".into(),
            quantity: "purity".into(),
            subset: "0,1".into(),
            value: 0.5,
            stderr: Some(0.01),
            wall_ms: 1.5,
        }
    }

    #[test]
    fn csv_layout() {
        let s = to_csv_string(&[row()]).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next().unwrap(), "shots,method,quantity,subset,value,stderr,wall_ms");
        assert_eq!(lines.next().unwrap(), "100,shadow,purity,\"0,1\",0.5,0.01,1.5");
    }

    #[test]
    fn json_lines_one_object_per_interval() {
        let mut buf = Vec::new();
        {
            let mut w = ReportWriter::new(&mut buf, ReportFormat::JsonLines).unwrap();
            w.write_interval(&[row(), row()]).unwrap();
            w.write_interval(&[row()]).unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(v["estimates"].as_array().unwrap().len(), 2);
    }
}
