use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use tomo_core::diagnostics::{rank_limited_run, ValidityCertificate, Verdict};
use tomo_core::herm::random_density;
use tomo_core::objectives::{Objective, ObjectiveDescriptor};
use tomo_core::operators::MeasurementData;
use tomo_core::rng::derive_seed;
use tomo_core::solvers::{SolveOptions, StopReason, DEFAULT_MAX_ITER, DEFAULT_TOL};

use crate::config::RankTrapSpec;
use crate::records::{certificate_fields, fmt_f64, json_name};
use crate::{median, tags, write_atomic, write_json};

#[derive(Debug, Clone, Serialize)]
pub struct RankTrapRecord {
    pub truth: usize,
    pub start_rank: usize,
    pub trace_distance: f64,
    pub final_objective: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub certificate: ValidityCertificate,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankTrapSummaryRow {
    pub start_rank: usize,
    pub runs: usize,
    pub median_trace_distance: f64,
    #[serde(rename = "median_min_eig_Q")]
    pub median_min_eig_q: f64,
    #[serde(rename = "median_min_eig_Q_restricted")]
    pub median_min_eig_q_restricted: f64,
    pub valid: usize,
    pub spurious: usize,
    pub not_fixed_point: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankTrapOutcome {
    pub records: Vec<RankTrapRecord>,
    pub summary: Vec<RankTrapSummaryRow>,
}

fn summarize(records: &[RankTrapRecord], starts: &[usize]) -> Vec<RankTrapSummaryRow> {
    starts
        .iter()
        .map(|&r| {
            let rows: Vec<_> = records.iter().filter(|x| x.start_rank == r).collect();
            let count = |v: Verdict| rows.iter().filter(|x| x.certificate.verdict == v).count();
            RankTrapSummaryRow {
                start_rank: r,
                runs: rows.len(),
                median_trace_distance: median(&mut rows.iter().map(|x| x.trace_distance).collect::<Vec<_>>()),
                median_min_eig_q: median(&mut rows.iter().map(|x| x.certificate.min_eig_q).collect::<Vec<_>>()),
                median_min_eig_q_restricted: median(
                    &mut rows.iter().map(|x| x.certificate.min_eig_q_restricted).collect::<Vec<_>>(),
                ),
                valid: count(Verdict::Valid),
                spurious: count(Verdict::Spurious),
                not_fixed_point: count(Verdict::NotFixedPoint),
            }
        })
        .collect()
}

fn write_outputs(out: &Path, outcome: &RankTrapOutcome) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "truth",
        "start_rank",
        "trace_distance",
        "final_objective",
        "iterations",
        "stop_reason",
        "lambda",
        "min_eig_Q",
        "min_eig_Q_restricted",
        "m_residual",
        "verdict",
        "wall_time",
    ])?;
    for r in &outcome.records {
        let mut row = vec![
            r.truth.to_string(),
            r.start_rank.to_string(),
            fmt_f64(r.trace_distance),
            fmt_f64(r.final_objective),
            r.iterations.to_string(),
            json_name(&r.stop_reason),
        ];
        row.extend(certificate_fields(&r.certificate));
        row.push(format!("{:.6}", r.wall_time));
        w.write_record(&row)?;
    }
    write_atomic(&out.join("rank_trap_records.csv"), &w.into_inner()?)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "start_rank",
        "runs",
        "median_trace_distance",
        "median_min_eig_Q",
        "median_min_eig_Q_restricted",
        "valid",
        "spurious",
        "not_fixed_point",
    ])?;
    for s in &outcome.summary {
        w.write_record([
            s.start_rank.to_string(),
            s.runs.to_string(),
            fmt_f64(s.median_trace_distance),
            fmt_f64(s.median_min_eig_q),
            fmt_f64(s.median_min_eig_q_restricted),
            s.valid.to_string(),
            s.spurious.to_string(),
            s.not_fixed_point.to_string(),
        ])?;
    }
    write_atomic(&out.join("rank_trap_summary.csv"), &w.into_inner()?)?;
    write_json(&out.join("rank_trap.json"), outcome)
}

/// `count` exact-data truths of rank `true_rank`; a factorized run from a
/// random start of every rank in `start_ranks` against each.
pub fn cmd_rank_trap(spec: &RankTrapSpec, out: &Path) -> Result<RankTrapOutcome> {
    spec.check()?;
    fs::create_dir_all(out)?;
    let op = Arc::new(spec.operator.build()?);
    let n = op.dim();
    let fit = ObjectiveDescriptor {
        fit: spec.fit,
        ..ObjectiveDescriptor::default()
    };
    let objectives = (0..spec.count)
        .map(|i| -> Result<_> {
            let truth = random_density(n, spec.true_rank, derive_seed(spec.seed, tags::TRUTH, i as u64))?;
            let y = MeasurementData::from_forward(op.apply(truth.matrix())?)?;
            Ok((truth, Objective::from_descriptor(op.clone(), y, fit)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let starts = spec.start_ranks();
    let opts = SolveOptions {
        max_iter: spec.max_iter.unwrap_or(DEFAULT_MAX_ITER),
        tol: spec.tol.unwrap_or(DEFAULT_TOL),
        keep_trace: false,
    };
    let jobs: Vec<(usize, usize)> = (0..spec.count)
        .flat_map(|i| starts.iter().map(move |&r| (i, r)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(i, r)| -> Result<RankTrapRecord> {
            let (truth, obj) = &objectives[i];
            let seed = derive_seed(spec.seed, tags::START, ((i as u64) << 16) | r as u64);
            let t = std::time::Instant::now();
            let run = rank_limited_run(obj, truth, r, seed, &opts, spec.eps0, &spec.tolerances)?;
            Ok(RankTrapRecord {
                truth: i,
                start_rank: r,
                trace_distance: run.trace_distance,
                final_objective: run.trace.final_objective(),
                iterations: run.trace.iterations(),
                stop_reason: run.trace.stop_reason,
                certificate: run.certificate,
                wall_time: t.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&records, &starts);
    let outcome = RankTrapOutcome { records, summary };
    write_outputs(out, &outcome)?;
    Ok(outcome)
}
