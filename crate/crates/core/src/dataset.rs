//! Sweep datasets and their CSV form.
//!
//! Columns: `r,p,p_sq,v1,v1_sq,v2,v2_sq,duality1,duality2,source`. Floats
//! are written in scientific notation with 17 significant digits, which
//! round-trips every `f64` exactly.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::config::{DualityPoint, Source};
use crate::error::DualityError;

pub const CSV_HEADER: [&str; 10] = [
    "r", "p", "p_sq", "v1", "v1_sq", "v2", "v2_sq", "duality1", "duality2", "source",
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}, column `{column}`: {message}")]
    Column {
        line: u64,
        column: &'static str,
        message: String,
    },
    #[error("dataset contains no points")]
    Empty,
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

/// Points of one sweep, ordered by strictly increasing `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepDataset {
    points: Vec<DualityPoint>,
    /// Grid ratios that produced no point (fully blocked light).
    skipped: Vec<f64>,
}

impl SweepDataset {
    pub fn new(points: Vec<DualityPoint>) -> Result<Self, DualityError> {
        SweepDataset::with_skipped(points, Vec::new())
    }

    pub fn with_skipped(
        points: Vec<DualityPoint>,
        skipped: Vec<f64>,
    ) -> Result<Self, DualityError> {
        for w in points.windows(2) {
            if w[1].r.partial_cmp(&w[0].r) != Some(std::cmp::Ordering::Greater) {
                return Err(DualityError::InvalidParameter {
                    name: "r",
                    value: w[1].r,
                    reason: "sweep ratios must be strictly increasing",
                });
            }
        }
        if let Some(pt) = points.iter().find(|pt| !(0.0..=1.0).contains(&pt.r)) {
            return Err(DualityError::InvalidParameter {
                name: "r",
                value: pt.r,
                reason: "must lie in [0, 1]",
            });
        }
        Ok(SweepDataset { points, skipped })
    }

    pub fn points(&self) -> &[DualityPoint] {
        &self.points
    }

    pub fn skipped(&self) -> &[f64] {
        &self.skipped
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<DualityPoint> {
        self.points
    }
}

/// `n` evenly spaced ratios covering [0, 1] inclusive (`[0.5]` when n = 1).
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(dataset: &SweepDataset, out: W) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{}", CSV_HEADER.join(","))?;
    for pt in dataset.points() {
        let fields = [
            pt.r,
            pt.p,
            pt.p * pt.p,
            pt.v1,
            pt.v1 * pt.v1,
            pt.v2,
            pt.v2 * pt.v2,
            pt.duality1(),
            pt.duality2(),
        ];
        let mut line = fields.map(format_float).join(",");
        line.push(',');
        line.push_str(pt.source.name());
        writeln!(out, "{line}")?;
    }
    out.flush()
}

pub fn write_dataset(dataset: &SweepDataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    write_csv(dataset, File::create(path)?)?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<SweepDataset, DatasetError> {
    read_csv(BufReader::new(File::open(path)?))
}

fn unit_column(line: u64, column: &'static str, raw: &str) -> Result<f64, DatasetError> {
    let x: f64 = raw.trim().parse().map_err(|_| DatasetError::Column {
        line,
        column,
        message: format!("`{raw}` is not a number"),
    })?;
    if !(0.0..=1.0).contains(&x) {
        return Err(DatasetError::Column {
            line,
            column,
            message: format!("value {x} outside [0, 1]"),
        });
    }
    Ok(x)
}

pub fn read_csv<R: Read>(input: R) -> Result<SweepDataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input);
    let header = reader.headers().map_err(|e| DatasetError::Malformed {
        line: 1,
        message: e.to_string(),
    })?;
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != CSV_HEADER {
        return Err(DatasetError::Malformed {
            line: 1,
            message: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }

    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| DatasetError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let r = unit_column(line, "r", &record[0])?;
        let p = unit_column(line, "p", &record[1])?;
        let v1 = unit_column(line, "v1", &record[3])?;
        let v2 = unit_column(line, "v2", &record[5])?;
        for (idx, column) in [
            (2, "p_sq"),
            (4, "v1_sq"),
            (6, "v2_sq"),
            (7, "duality1"),
            (8, "duality2"),
        ] {
            record[idx]
                .trim()
                .parse::<f64>()
                .map_err(|_| DatasetError::Column {
                    line,
                    column,
                    message: format!("`{}` is not a number", &record[idx]),
                })?;
        }
        let source: Source = record[9]
            .trim()
            .parse()
            .map_err(|message| DatasetError::Column {
                line,
                column: "source",
                message,
            })?;
        if let Some(prev) = points.last() {
            let prev: &DualityPoint = prev;
            if r <= prev.r {
                return Err(DatasetError::Column {
                    line,
                    column: "r",
                    message: format!("ratio {r} does not increase past {}", prev.r),
                });
            }
        }
        points.push(DualityPoint::new(r, p, v1, v2, source));
    }
    if points.is_empty() {
        return Err(DatasetError::Empty);
    }
    SweepDataset::new(points).map_err(|e| DatasetError::Invalid(e.to_string()))
}
