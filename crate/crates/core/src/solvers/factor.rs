use nalgebra::DMatrix;
use num_complex::Complex64;

use super::driver::{adaptive_descent, SolveOptions, SolverTrace, StepPolicy, StopReason};
use crate::error::{Error, Result};
use crate::herm::{ginibre, spectral_decompose, trace_norm, CMatrix, DensityLike, HermitianMatrix};
use crate::objectives::{FitKind, Objective};
use crate::rng::seeded;

/// Relative tolerance on `‖X‖_F² = c`.
const NORM_TOL: f64 = 1e-9;

/// A factor `X ∈ C^{N x r}` with `‖X‖_F = √c`, representing `ρ = XX*`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorState {
    x: CMatrix,
    trace_target: f64,
}

fn frob_sq(x: &CMatrix) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

impl FactorState {
    pub fn new(x: CMatrix, trace_target: f64) -> Result<Self> {
        if x.ncols() == 0 || x.ncols() > x.nrows() {
            return Err(Error::RankOutOfRange {
                rank: x.ncols(),
                dim: x.nrows(),
            });
        }
        let n2 = frob_sq(&x);
        if (n2 - trace_target).abs() > NORM_TOL * trace_target {
            return Err(Error::TraceMismatch {
                found: n2,
                target: trace_target,
            });
        }
        Ok(Self { x, trace_target })
    }

    /// Rescales any nonzero `X` to `‖X‖_F = √c`.
    pub fn normalized(x: CMatrix, c: f64) -> Result<Self> {
        let n2 = frob_sq(&x);
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::Degenerate("factor has zero norm".into()));
        }
        Self::new(x.map(|z| z * (c / n2).sqrt()), c)
    }

    /// `X = V_r diag(√λ_r)` from the `r` largest eigenpairs of `ρ`; exact
    /// (`XX* = ρ`) when `rank ρ ≤ r`.
    pub fn from_density(rho: &DensityLike, rank: usize) -> Result<Self> {
        let n = rho.dim();
        if rank == 0 || rank > n {
            return Err(Error::RankOutOfRange { rank, dim: n });
        }
        let d = spectral_decompose(rho.matrix())?;
        let x = DMatrix::from_fn(n, rank, |i, j| {
            let k = n - 1 - j;
            d.eigenvectors[(i, k)] * d.eigenvalues[k].max(0.0).sqrt()
        });
        Self::normalized(x, rho.trace_target())
    }

    /// Rank-`r` start drawn from the same induced ensemble as
    /// [`crate::herm::random_density`] with this seed.
    pub fn random(n: usize, rank: usize, c: f64, seed: u64) -> Result<Self> {
        if rank == 0 || rank > n {
            return Err(Error::RankOutOfRange { rank, dim: n });
        }
        Self::normalized(ginibre(n, rank, &mut seeded(seed)), c)
    }

    pub fn factor(&self) -> &CMatrix {
        &self.x
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn rank(&self) -> usize {
        self.x.ncols()
    }

    pub fn trace_target(&self) -> f64 {
        self.trace_target
    }

    pub fn outer(&self) -> HermitianMatrix {
        HermitianMatrix::outer(&self.x)
    }

    pub fn density(&self) -> Result<DensityLike> {
        DensityLike::from_psd_normalized(self.outer(), self.trace_target)
    }
}

/// `X ← √c (X - εgX) / ‖X - εgX‖_F` for a given gradient `g = ∇F(XX*)`.
pub fn fgd_step_with_gradient(s: &FactorState, g: &HermitianMatrix, eps: f64) -> Result<FactorState> {
    if g.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: g.dim(),
        });
    }
    let gx = g.as_matrix() * &s.x;
    let half = &s.x - gx.map(|z| z * eps);
    let n2 = frob_sq(&half);
    if !(n2 > 1e-300) || !n2.is_finite() {
        return Err(Error::StepSize(eps));
    }
    Ok(FactorState {
        x: half.map(|z| z * (s.trace_target / n2).sqrt()),
        trace_target: s.trace_target,
    })
}

pub fn fgd_step(s: &FactorState, obj: &Objective, eps: f64) -> Result<FactorState> {
    let g = obj.gradient(&s.outer())?;
    fgd_step_with_gradient(s, &g, eps)
}

/// `X ← √c R(XX*) X / ‖R(XX*) X‖_F`.
pub fn factorized_mle_step(s: &FactorState, obj: &Objective) -> Result<FactorState> {
    if obj.kind() != FitKind::NegLogLikelihood {
        return Err(Error::InvalidParameter(
            "the factorized sandwich iteration needs a likelihood objective".into(),
        ));
    }
    let r = obj.likelihood_ratio(&s.outer())?;
    let rx = r.as_matrix() * &s.x;
    let n2 = frob_sq(&rx);
    if !(n2 > 1e-300) {
        return Err(Error::Degenerate(format!("‖R X‖² = {n2:e}")));
    }
    Ok(FactorState {
        x: rx.map(|z: Complex64| z * (s.trace_target / n2).sqrt()),
        trace_target: s.trace_target,
    })
}

/// Factorized gradient descent with the same shrink-only policy as
/// [`super::gm_solve`].
pub fn fgd_solve(
    x0: &FactorState,
    obj: &Objective,
    policy: &StepPolicy,
    opts: &SolveOptions,
) -> Result<(FactorState, SolverTrace)> {
    adaptive_descent(
        x0.clone(),
        obj,
        x0.trace_target,
        policy,
        opts,
        |s: &FactorState| s.outer(),
        fgd_step_with_gradient,
    )
}

pub fn factorized_mle_solve(
    x0: &FactorState,
    obj: &Objective,
    opts: &SolveOptions,
) -> Result<(FactorState, SolverTrace)> {
    let mut state = x0.clone();
    let mut rho = state.outer();
    let keep = |m: &HermitianMatrix| {
        if opts.keep_trace {
            DensityLike::from_psd_normalized(m.clone(), x0.trace_target).ok()
        } else {
            None
        }
    };
    let mut trace = SolverTrace::start(obj.value(&rho)?, keep(&rho));
    for _ in 0..opts.max_iter {
        let next = factorized_mle_step(&state, obj)?;
        let m = next.outer();
        let residual = trace_norm(&(&m - &rho))?;
        trace.record(obj.value(&m)?, 1.0, residual, keep(&m));
        trace.fixed_point_residual = residual;
        state = next;
        rho = m;
        if residual < opts.tol {
            trace.stop_reason = StopReason::Converged;
            break;
        }
    }
    Ok((state, trace))
}
