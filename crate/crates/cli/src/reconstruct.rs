use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{ensure, Context, Result};
use rayon::prelude::*;
use tomo_core::diagnostics::{validity_certificate, CertificateTolerances, Verdict};
use tomo_core::herm::DensityLike;
use tomo_core::objectives::{FitKind, Objective};
use tomo_core::operators::{MeasurementData, MeasurementOperator};

use crate::config::ExperimentSpec;
use crate::generate::{load_instance, LoadedInstance, Manifest};
use crate::records::{write_records_csv, DataKind, RunRecord};
use crate::solve::{oracle, run_solver};
use crate::{write_atomic, write_json};

pub const RECORDS_CSV: &str = "records.csv";
pub const RECORDS_JSON: &str = "records.json";
pub const STATES_DIR: &str = "states";

/// Valid certificates further than this from the reference are flagged.
pub const ORACLE_GUARD: f64 = 0.05;

fn objective(op: &Arc<MeasurementOperator>, data: &MeasurementData, fit: FitKind) -> Result<Objective> {
    Ok(Objective::new(op.clone(), data.clone(), fit)?)
}

fn run_instance(
    spec: &ExperimentSpec,
    op: &Arc<MeasurementOperator>,
    inst: &LoadedInstance,
    states: &Path,
) -> Result<Vec<RunRecord>> {
    let tol = CertificateTolerances::default();
    let id = &inst.entry.id;
    let mut out = Vec::new();
    let mut datasets = vec![(DataKind::Exact, &inst.exact)];
    if let Some(noisy) = &inst.noisy {
        datasets.push((DataKind::Noisy, noisy));
    }
    for (kind, data) in datasets {
        let mut oracles: BTreeMap<&'static str, DensityLike> = BTreeMap::new();
        for cfg in &spec.solvers {
            let obj = objective(op, data, cfg.fit)?;
            let solved = run_solver(cfg, &obj, 1.0, spec.seed, inst.entry.index)?;
            let certificate = validity_certificate(&solved.state, &obj, &tol)?;
            let trace_distance_oracle = if kind == DataKind::Noisy {
                let key = match cfg.fit {
                    FitKind::NegLogLikelihood => "nll",
                    FitKind::LeastSquares => "l2",
                };
                if !oracles.contains_key(key) {
                    let o = oracle(&obj, 1.0)?;
                    write_json(&states.join(format!("{id}_{}_oracle-{key}.json", kind.name())), &o.state)?;
                    oracles.insert(key, o.state);
                }
                Some(solved.state.trace_distance(&oracles[key])?)
            } else {
                None
            };
            let label = cfg.label();
            write_json(&states.join(format!("{id}_{}_{label}.json", kind.name())), &solved.state)?;
            out.push(RunRecord {
                instance: id.clone(),
                truth_rank: inst.entry.rank,
                data: kind,
                solver: label,
                fit: cfg.fit,
                trace_distance_truth: solved.state.trace_distance(&inst.truth)?,
                trace_distance_oracle,
                final_objective: solved.trace.final_objective(),
                iterations: solved.trace.iterations(),
                stop_reason: solved.trace.stop_reason,
                certificate,
                wall_time: solved.wall_time,
            });
        }
    }
    Ok(out)
}

/// Records whose certificate says valid although the state is far from
/// the reference solution.
pub fn guard_violations(records: &[RunRecord]) -> Vec<&RunRecord> {
    records
        .iter()
        .filter(|r| {
            r.certificate.verdict == Verdict::Valid && r.trace_distance_oracle.is_some_and(|d| d > ORACLE_GUARD)
        })
        .collect()
}

/// Runs every configured solver on the exact and (if present) noisy data of
/// each instance in `dir`; writes `records.csv`, `records.json` and final
/// states under `states/`.
pub fn cmd_reconstruct(spec: &ExperimentSpec, dir: &Path) -> Result<Vec<RunRecord>> {
    ensure!(!spec.solvers.is_empty(), "no solvers configured");
    let manifest = Manifest::load(dir).context("loading the dataset; run `tomo generate` first")?;
    let mut spec = spec.clone();
    spec.operator = manifest.spec.operator.clone();
    spec.ensemble = manifest.spec.ensemble.clone();
    spec.check()?;
    let op = Arc::new(spec.operator.build()?);
    let states = dir.join(STATES_DIR);
    fs::create_dir_all(&states)?;

    let per_instance = manifest
        .instances
        .par_iter()
        .map(|entry| {
            let inst = load_instance(dir, entry)?;
            run_instance(&spec, &op, &inst, &states).with_context(|| format!("instance {}", entry.id))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records: Vec<RunRecord> = per_instance.into_iter().flatten().collect();
    records.sort_by(|a, b| (&a.instance, a.data, &a.solver).cmp(&(&b.instance, b.data, &b.solver)));

    let mut csv_bytes = Vec::new();
    write_records_csv(&records, &mut csv_bytes)?;
    write_atomic(&dir.join(RECORDS_CSV), &csv_bytes)?;
    write_json(&dir.join(RECORDS_JSON), &records)?;
    Ok(records)
}
