use super::driver::{trace_free, SolverTrace, StopReason};
use crate::error::Result;
use crate::herm::{project_to_density, trace_norm, DensityLike};
use crate::objectives::Objective;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgdOptions {
    /// Initial step; adapted by backtracking and mild regrowth.
    pub step: f64,
    pub max_iter: usize,
    /// Trace-norm step tolerance.
    pub tol: f64,
}

impl Default for PgdOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            max_iter: 200_000,
            tol: 1e-13,
        }
    }
}

const GROW: f64 = 1.25;
const MIN_STEP: f64 = 1e-300;

/// Projected gradient descent `ρ ← P_{D_c}(ρ - s∇F(ρ))`. The step is halved
/// until the quadratic upper model holds,
/// `F(ρ⁺) - F(ρ) ≤ ⟨∇F, ρ⁺-ρ⟩ + ‖ρ⁺-ρ‖²/(2s)`, and grown by 25% after
/// each accepted step. `trace.eps_values` holds the accepted step sizes.
pub fn pgd_solve(rho0: &DensityLike, obj: &Objective, opts: &PgdOptions) -> Result<(DensityLike, SolverTrace)> {
    let c = rho0.trace_target();
    let mut rho = rho0.clone();
    let op = obj.operator();
    let mut p = op.apply(rho.matrix())?;
    let (f0, mut g) = obj.value_and_gradient_from_forward(&p)?;
    let mut trace = SolverTrace::start(f0, None);
    let mut s = opts.step;

    'outer: for _ in 0..opts.max_iter {
        loop {
            let cand = project_to_density(&(rho.matrix() - &g.scale(s)), c)?;
            let d = cand.matrix() - rho.matrix();
            let d0 = trace_free(&d);
            let change = obj.change_from_forward(&p, &op.apply(&d0)?);
            let lin = g.trace_product(&d0);
            let model = lin + d.frobenius_norm().powi(2) / (2.0 * s);
            if change <= model + 1e-12 * lin.abs() {
                let residual = trace_norm(&d)?;
                let improved = change <= 0.0;
                if improved {
                    rho = cand;
                    p = op.apply(rho.matrix())?;
                    let (f_new, g_new) = obj.value_and_gradient_from_forward(&p)?;
                    trace.record(f_new, s, residual, None);
                    g = g_new;
                }
                trace.fixed_point_residual = residual;
                if residual < opts.tol || !improved {
                    trace.stop_reason = StopReason::Converged;
                    break 'outer;
                }
                s *= GROW;
                break;
            }
            s *= 0.5;
            if s < MIN_STEP {
                trace.stop_reason = StopReason::EpsExhausted;
                break 'outer;
            }
        }
    }
    Ok((rho, trace))
}
