use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Values within this distance below zero are treated as roundoff and clamped
/// by [`MeasurementData::from_forward`].
const ROUNDOFF_NEGATIVE: f64 = 1e-12;

/// Nonnegative `M x K` array of observed probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementData {
    values: DMatrix<f64>,
}

impl MeasurementData {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        for r in 0..values.nrows() {
            for c in 0..values.ncols() {
                let v = values[(r, c)];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::NegativeData { row: r, col: c, value: v });
                }
            }
        }
        Ok(Self { values })
    }

    /// Wraps a forward-model output, clamping roundoff-sized negatives.
    pub fn from_forward(values: DMatrix<f64>) -> Result<Self> {
        let clamped = values.map(|v| if (-ROUNDOFF_NEGATIVE..0.0).contains(&v) { 0.0 } else { v });
        Self::new(clamped)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn scaled(&self, a: f64) -> Result<Self> {
        Self::new(&self.values * a)
    }
}

/// Writes `M` lines of `K` comma-separated plain decimals.
pub fn write_data_csv<W: Write>(data: &MeasurementData, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let v = data.values();
    for r in 0..v.nrows() {
        w.write_record((0..v.ncols()).map(|c| format!("{}", v[(r, c)])))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_data_csv<R: Read>(input: R) -> Result<MeasurementData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("bad number {s:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let m = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if m == 0 || k == 0 {
        return Err(Error::InvalidParameter("empty data file".into()));
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidParameter("ragged data rows".into()));
    }
    MeasurementData::new(DMatrix::from_fn(m, k, |i, j| rows[i][j]))
}
