use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::certificate::{validity_certificate, CertificateTolerances, ValidityCertificate};
use crate::error::{Error, Result};
use crate::herm::{random_density, DensityLike, HermitianMatrix};
use crate::objectives::{Objective, ObjectiveDescriptor};
use crate::operators::{pauli_six_state, MeasurementData, MeasurementOperator};
use crate::rng::derive_seed;
use crate::solvers::{fgd_solve, FactorState, SolveOptions, SolverTrace, StepPolicy};

/// Largest `t` for which the six-state construction has a PSD solution.
pub const SPURIOUS_T2_MAX: f64 = 8.0 / 11.0;

/// A rank-one fixed point of the sandwich iteration on six-state data that
/// were produced by a different, full-rank state.
#[derive(Debug, Clone)]
pub struct SpuriousT2 {
    pub rho_fix: DensityLike,
    pub data: MeasurementData,
    pub rho_true: DensityLike,
    pub operator: Arc<MeasurementOperator>,
}

pub fn construct_spurious_t2(t: f64) -> Result<SpuriousT2> {
    // a little roundoff slack at the upper end so 8.0/11.0 is accepted
    if !(t > 0.0 && t <= SPURIOUS_T2_MAX * (1.0 + 1e-15)) {
        return Err(Error::InvalidParameter(format!(
            "t must lie in (0, 8/11], got {t}"
        )));
    }
    let third = 1.0 / 3.0;
    let c = Complex64::new;
    let rho_fix = HermitianMatrix::from_rows(&[
        &[c(third, 0.0), c(third, -third)],
        &[c(third, third), c(2.0 * third, 0.0)],
    ])?;
    let rho_fix = DensityLike::new(rho_fix, 1.0)?;
    let y = DMatrix::from_row_slice(
        3,
        2,
        &[2.0 + 4.0 * t, 4.0 - 4.0 * t, 5.0 - 5.0 * t, 1.0 + 5.0 * t, 5.0 - 5.0 * t, 1.0 + 5.0 * t],
    ) / 6.0;
    let data = MeasurementData::new(y)?;
    let operator = Arc::new(pauli_six_state());
    let inv = operator.pseudo_inverse_apply(data.values())?;
    let rho_true = DensityLike::new(inv, 1.0)?;
    Ok(SpuriousT2 {
        rho_fix,
        data,
        rho_true,
        operator,
    })
}

/// Result of a factorized run at fixed rank against data from `truth`.
#[derive(Debug, Clone)]
pub struct RankLimitedRun {
    pub truth: DensityLike,
    pub result: DensityLike,
    pub certificate: ValidityCertificate,
    pub trace: SolverTrace,
    pub trace_distance: f64,
}

/// Factorized gradient descent from a random rank-`start_rank` factor on
/// exact data of `truth`. `start_rank` may be anything in `1..=N`.
pub fn rank_limited_run(
    obj: &Objective,
    truth: &DensityLike,
    start_rank: usize,
    seed: u64,
    opts: &SolveOptions,
    eps0: Option<f64>,
    tol: &CertificateTolerances,
) -> Result<RankLimitedRun> {
    let c = truth.trace_target();
    let x0 = FactorState::random(truth.dim(), start_rank, c, seed)?;
    let policy = match eps0 {
        Some(e) => StepPolicy::with_initial(e)?,
        None => StepPolicy::for_start(obj, &x0.outer())?,
    };
    let (x, trace) = fgd_solve(&x0, obj, &policy, opts)?;
    let result = x.density()?;
    let certificate = validity_certificate(&result, obj, tol)?;
    let trace_distance = result.trace_distance(truth)?;
    Ok(RankLimitedRun {
        truth: truth.clone(),
        result,
        certificate,
        trace,
        trace_distance,
    })
}

const TRUTH_TAG: u64 = 0x7472_7574;
const START_TAG: u64 = 0x7374_6172;

/// Draws a rank-`true_rank` truth, simulates exact data and runs the
/// factorized iteration from a strictly smaller rank. The limit cannot be
/// the truth, and is typically a fixed point that is not a minimizer.
pub fn spurious_via_rank(
    operator: &Arc<MeasurementOperator>,
    fit: ObjectiveDescriptor,
    true_rank: usize,
    start_rank: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Result<RankLimitedRun> {
    let n = operator.dim();
    if true_rank == 0 || true_rank > n {
        return Err(Error::RankOutOfRange { rank: true_rank, dim: n });
    }
    if start_rank == 0 || start_rank >= true_rank {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= start_rank < true_rank, got {start_rank} and {true_rank}"
        )));
    }
    let truth = random_density(n, true_rank, derive_seed(seed, TRUTH_TAG, 0))?;
    let y = MeasurementData::from_forward(operator.apply(truth.matrix())?)?;
    let obj = Objective::from_descriptor(operator.clone(), y, fit)?;
    rank_limited_run(
        &obj,
        &truth,
        start_rank,
        derive_seed(seed, START_TAG, start_rank as u64),
        opts,
        None,
        &CertificateTolerances::default(),
    )
}
