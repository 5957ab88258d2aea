//! Per-sample signal records and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{compute_mse, PipelineError};

/// Every signal of the loop at one sample index.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Master encoder angles.
    pub b: [f64; 3],
    /// Master tool command.
    pub c: [f64; 3],
    /// Command after the forward channel.
    pub v: [f64; 3],
    /// Slave-side IK output.
    pub theta_hsd: [f64; 3],
    /// Slave joint angles after tracking.
    pub theta_sd: [f64; 3],
    /// Slave tool position.
    pub l: [f64; 3],
    /// Nearest object point.
    pub s_obj: [f64; 3],
    /// Contact force at the slave.
    pub h: [f64; 3],
    /// Force after the backward channel.
    pub q: [f64; 3],
    /// Master joint torques.
    pub p: [f64; 3],
}

/// Signal prefixes and component suffixes, in column order.
pub const SIGNALS: [(&str, [&str; 3]); 10] = [
    ("b", ["1", "2", "3"]),
    ("c", ["_x", "_y", "_z"]),
    ("v", ["_x", "_y", "_z"]),
    ("theta_hsd", ["1", "2", "3"]),
    ("theta_sd", ["1", "2", "3"]),
    ("l", ["_x", "_y", "_z"]),
    ("s_obj", ["_x", "_y", "_z"]),
    ("h", ["_x", "_y", "_z"]),
    ("q", ["_x", "_y", "_z"]),
    ("p", ["1", "2", "3"]),
];

/// `n` followed by the thirty signal columns.
pub fn csv_header() -> Vec<String> {
    let mut h = vec!["n".to_string()];
    for (name, sfx) in SIGNALS {
        h.extend(sfx.iter().map(|s| format!("{name}{s}")));
    }
    h
}

impl TraceRecord {
    pub fn signals(&self) -> [[f64; 3]; 10] {
        [
            self.b,
            self.c,
            self.v,
            self.theta_hsd,
            self.theta_sd,
            self.l,
            self.s_obj,
            self.h,
            self.q,
            self.p,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub backend: String,
    pub sample_period: f64,
    pub records: Vec<TraceRecord>,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// One component of one signal over time, e.g. `series(|r| r.l, 0)`.
    pub fn series(&self, signal: impl Fn(&TraceRecord) -> [f64; 3], component: usize) -> Vec<f64> {
        self.records.iter().map(|r| signal(r)[component]).collect()
    }

    /// Shortest round-trip decimal rendering, so reading the file back
    /// reproduces every value bit for bit.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), PipelineError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(csv_header())?;
        let mut row = Vec::with_capacity(31);
        for (n, r) in self.records.iter().enumerate() {
            row.clear();
            row.push(n.to_string());
            for s in r.signals() {
                row.extend(s.iter().map(|v| format!("{v:?}")));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A numeric CSV table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TraceTable {
    pub fn read_csv<R: Read>(input: R) -> Result<Self, PipelineError> {
        let mut r = csv::Reader::from_reader(input);
        let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != columns.len() {
                return Err(PipelineError::Schema(format!(
                    "row {} has {} fields, header has {}",
                    i + 1,
                    rec.len(),
                    columns.len()
                )));
            }
            let row = rec
                .iter()
                .enumerate()
                .map(|(c, f)| {
                    f.trim().parse::<f64>().map_err(|_| {
                        PipelineError::Schema(format!(
                            "row {} column {}: not a number: {f:?}",
                            i + 1,
                            columns[c]
                        ))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[idx]).collect()
    }

    /// MSE of every column except the sample index `n`. Both tables must
    /// have the same columns and row count.
    pub fn column_mse(&self, other: &Self) -> Result<Vec<(String, f64)>, PipelineError> {
        if self.columns != other.columns {
            return Err(PipelineError::Schema(
                "traces have different columns".into(),
            ));
        }
        if self.rows.len() != other.rows.len() {
            return Err(PipelineError::SeriesLengthMismatch {
                left: self.rows.len(),
                right: other.rows.len(),
            });
        }
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, name)| name.as_str() != "n")
            .map(|(i, name)| {
                Ok((
                    name.clone(),
                    compute_mse(&self.column(i), &other.column(i))?,
                ))
            })
            .collect()
    }
}
