use std::io::Write;

use anyhow::Result;
use serde::Serialize;
use tomo_core::diagnostics::ValidityCertificate;
use tomo_core::objectives::FitKind;
use tomo_core::solvers::StopReason;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Exact,
    Noisy,
}

impl DataKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Noisy => "noisy",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub instance: String,
    pub truth_rank: usize,
    pub data: DataKind,
    pub solver: String,
    pub fit: FitKind,
    pub trace_distance_truth: f64,
    /// Only for noisy data, against the projected-gradient reference.
    pub trace_distance_oracle: Option<f64>,
    pub final_objective: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub certificate: ValidityCertificate,
    pub wall_time: f64,
}

pub const RECORD_COLUMNS: [&str; 16] = [
    "instance",
    "truth_rank",
    "data",
    "solver",
    "fit",
    "trace_distance_truth",
    "trace_distance_oracle",
    "final_objective",
    "iterations",
    "stop_reason",
    "lambda",
    "min_eig_Q",
    "min_eig_Q_restricted",
    "m_residual",
    "verdict",
    "wall_time",
];

pub(crate) fn json_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

pub(crate) fn certificate_fields(c: &ValidityCertificate) -> [String; 5] {
    [
        fmt_f64(c.lambda),
        fmt_f64(c.min_eig_q),
        fmt_f64(c.min_eig_q_restricted),
        fmt_f64(c.m_residual),
        json_name(&c.verdict),
    ]
}

pub fn write_records_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        let mut row = vec![
            r.instance.clone(),
            r.truth_rank.to_string(),
            r.data.name().to_string(),
            r.solver.clone(),
            json_name(&r.fit),
            fmt_f64(r.trace_distance_truth),
            r.trace_distance_oracle.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.final_objective),
            r.iterations.to_string(),
            json_name(&r.stop_reason),
        ];
        row.extend(certificate_fields(&r.certificate));
        row.push(format!("{:.6}", r.wall_time));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
