//! The iteration family on `D_c = {ρ ⪰ 0, tr ρ = c}`.
//!
//! - [`mle_step`] / [`mle_solve`]: `ρ ← RρR / tr(RρR)` with `R = T*(y / Tρ)`.
//! - [`gm_step`] / [`gm_solve`]: Gradient Multiplication,
//!   `ρ ← c (I - ε∇F) ρ (I - ε∇F) / tr(...)`, with a shrink-only step policy.
//! - [`fgd_step`] / [`fgd_solve`]: gradient descent on a factor `X` with
//!   `ρ = XX*`, optionally of reduced rank.
//! - [`factorized_mle_step`]: the sandwich iteration applied to the factor.
//! - [`pgd_solve`]: projected gradient descent, used as the reference solver.
//!
//! Every driver stops when the trace-norm step `‖ρ_{k+1} - ρ_k‖_tr` falls
//! below the tolerance. Spurious fixed points satisfy this too, which is what
//! [`crate::diagnostics`] is for.

mod driver;
mod factor;
mod gm;
mod pgd;

pub use driver::{SolveOptions, SolverTrace, StepPolicy, StopReason, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use factor::{
    factorized_mle_solve, factorized_mle_step, fgd_solve, fgd_step, fgd_step_with_gradient, FactorState,
};
pub use gm::{gm_solve, gm_step, mle_solve, mle_step};
pub use pgd::{pgd_solve, PgdOptions};
