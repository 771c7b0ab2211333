use super::driver::{adaptive_descent, SolveOptions, SolverTrace, StepPolicy, StopReason};
use crate::error::{Error, Result};
use crate::herm::{trace_norm, DensityLike, HermitianMatrix};
use crate::objectives::{FitKind, Objective};

fn require_likelihood(obj: &Objective) -> Result<()> {
    if obj.kind() != FitKind::NegLogLikelihood {
        return Err(Error::InvalidParameter(
            "the sandwich iteration R rho R needs a likelihood objective".into(),
        ));
    }
    Ok(())
}

/// One step of `ρ ← RρR / tr(RρR)` with `R = T*(y / Tρ)`; the result keeps
/// the trace target of `rho`.
pub fn mle_step(rho: &DensityLike, obj: &Objective) -> Result<DensityLike> {
    require_likelihood(obj)?;
    let r = obj.likelihood_ratio(rho.matrix())?;
    let next = r.sandwich(rho.matrix());
    let tr = next.trace();
    if !(tr > 1e-300) {
        return Err(Error::Degenerate(format!("tr(R rho R) = {tr:e}")));
    }
    DensityLike::from_psd_normalized(next, rho.trace_target())
}

/// `c (I - εg) ρ (I - εg) / tr((I - εg) ρ (I - εg))`.
pub fn gm_step(rho: &DensityLike, g: &HermitianMatrix, eps: f64, c: f64) -> Result<DensityLike> {
    if g.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: g.dim(),
        });
    }
    let a = g.shifted_identity(eps);
    let next = a.sandwich(rho.matrix());
    let tr = next.trace();
    if !(tr > 1e-300 * rho.matrix().trace().abs().max(1.0)) || !tr.is_finite() {
        return Err(Error::StepSize(eps));
    }
    DensityLike::from_psd_normalized(next, c)
}

/// Gradient Multiplication with the shrink-only policy. Objective values in
/// the trace are non-increasing.
pub fn gm_solve(
    rho0: &DensityLike,
    obj: &Objective,
    policy: &StepPolicy,
    opts: &SolveOptions,
) -> Result<(DensityLike, SolverTrace)> {
    let c = rho0.trace_target();
    adaptive_descent(
        rho0.clone(),
        obj,
        c,
        policy,
        opts,
        |s: &DensityLike| s.matrix().clone(),
        |s, g, eps| gm_step(s, g, eps, c),
    )
}

/// The plain sandwich iteration without step control. Its objective values
/// need not be monotone.
pub fn mle_solve(rho0: &DensityLike, obj: &Objective, opts: &SolveOptions) -> Result<(DensityLike, SolverTrace)> {
    require_likelihood(obj)?;
    let mut rho = rho0.clone();
    let keep = |r: &DensityLike| opts.keep_trace.then(|| r.clone());
    let mut trace = SolverTrace::start(obj.value(rho.matrix())?, keep(&rho));
    for _ in 0..opts.max_iter {
        let next = mle_step(&rho, obj)?;
        let residual = trace_norm(&(next.matrix() - rho.matrix()))?;
        trace.record(obj.value(next.matrix())?, 1.0, residual, keep(&next));
        trace.fixed_point_residual = residual;
        rho = next;
        if residual < opts.tol {
            trace.stop_reason = StopReason::Converged;
            break;
        }
    }
    Ok((rho, trace))
}
