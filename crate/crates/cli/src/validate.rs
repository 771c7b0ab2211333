use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use tomo_core::diagnostics::{validity_certificate, ValidityCertificate, Verdict};
use tomo_core::herm::{DensityLike, HermitianMatrix};
use tomo_core::objectives::Objective;
use tomo_core::operators::read_data_csv;

use crate::config::ValidateSpec;
use crate::read_json;

/// Process exit code for a verdict: 0 valid, 2 spurious, 3 not a fixed point.
pub fn exit_code(v: Verdict) -> u8 {
    match v {
        Verdict::Valid => 0,
        Verdict::Spurious => 2,
        Verdict::NotFixedPoint => 3,
    }
}

/// Certificate for the state and data named in `spec`; relative paths are
/// taken from `base`.
pub fn cmd_validate(spec: &ValidateSpec, base: &Path) -> Result<ValidityCertificate> {
    let state_path = base.join(&spec.state);
    let data_path = base.join(&spec.data);
    let h: HermitianMatrix = read_json(&state_path)?;
    let rho = DensityLike::new(h, spec.trace_target).with_context(|| format!("{} is not a state", state_path.display()))?;
    let file = fs::File::open(&data_path).with_context(|| format!("opening {}", data_path.display()))?;
    let data = read_data_csv(file).with_context(|| format!("parsing {}", data_path.display()))?;
    let op = Arc::new(spec.operator.build()?);
    let obj = Objective::new(op, data, spec.fit)?;
    Ok(validity_certificate(&rho, &obj, &spec.tolerances)?)
}
