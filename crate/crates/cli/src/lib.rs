//! Experiment orchestration on top of `tomo-core`: synthetic datasets,
//! reconstruction runs with certificates, the rank-trap protocol and
//! standalone certificate checks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod generate;
pub mod rank_trap;
pub mod reconstruct;
pub mod records;
pub mod simulate;
pub mod solve;
pub mod validate;

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub use config::{EnsembleSpec, ExperimentSpec, NoiseSpec, RankTrapSpec, RunConfig, SolverKind, ValidateSpec};
pub use generate::{cmd_generate, Manifest};
pub use rank_trap::{cmd_rank_trap, RankTrapOutcome, RankTrapRecord, RankTrapSummaryRow};
pub use reconstruct::cmd_reconstruct;
pub use records::{DataKind, RunRecord};
pub use simulate::simulate_data;
pub use validate::{cmd_validate, exit_code};

/// Seed-derivation tags; one independent stream per purpose.
pub mod tags {
    pub const TRUTH: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const START: u64 = 3;
    pub const RUN: u64 = 4;
}

/// Caps the global rayon pool at `TOMO_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("TOMO_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("TOMO_THREADS={v:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("thread pool already initialized")?;
    }
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Writes via a temporary sibling and a rename so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
