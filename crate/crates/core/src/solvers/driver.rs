use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::herm::{trace_norm, DensityLike, HermitianMatrix};
use crate::objectives::Objective;

/// Default trace-norm step tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 20_000;

/// Shrink-only step-size control: try the current ε, multiply by `shrink`
/// until the objective does not increase, never grow it back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub initial_eps: f64,
    pub shrink: f64,
    pub min_eps: f64,
    pub max_halvings_per_step: usize,
}

impl StepPolicy {
    pub fn new(initial_eps: f64, shrink: f64, min_eps: f64, max_halvings_per_step: usize) -> Result<Self> {
        if !(initial_eps > 0.0 && min_eps > 0.0 && min_eps < initial_eps) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < min_eps < initial_eps, got {min_eps} and {initial_eps}"
            )));
        }
        if !(shrink > 0.0 && shrink < 1.0) {
            return Err(Error::InvalidParameter(format!("shrink must lie in (0, 1), got {shrink}")));
        }
        Ok(Self {
            initial_eps,
            shrink,
            min_eps,
            max_halvings_per_step,
        })
    }

    /// `ε₀` with the default shrink 0.5, 60 halvings per step and
    /// `min_eps = 1e-12 ε₀`.
    pub fn with_initial(initial_eps: f64) -> Result<Self> {
        Self::new(initial_eps, 0.5, 1e-12 * initial_eps, 60)
    }

    /// `ε₀ = 1 / (‖∇F(ρ₀)‖_F + 1)`.
    pub fn for_start(obj: &Objective, rho0: &HermitianMatrix) -> Result<Self> {
        let g = obj.gradient(rho0)?;
        Self::with_initial(1.0 / (g.frobenius_norm() + 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub keep_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            keep_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIter,
    EpsExhausted,
}

/// Per-iteration bookkeeping. `objective_values[0]` is the starting value;
/// every accepted step appends one entry to each list.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub iterates_kept: Option<Vec<DensityLike>>,
    pub objective_values: Vec<f64>,
    pub eps_values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub stop_reason: StopReason,
    pub fixed_point_residual: f64,
}

impl SolverTrace {
    pub(crate) fn start(f0: f64, rho0: Option<DensityLike>) -> Self {
        Self {
            iterates_kept: rho0.map(|r| vec![r]),
            objective_values: vec![f0],
            eps_values: Vec::new(),
            residuals: Vec::new(),
            stop_reason: StopReason::MaxIter,
            fixed_point_residual: f64::INFINITY,
        }
    }

    pub(crate) fn record(&mut self, f: f64, eps: f64, residual: f64, iterate: Option<DensityLike>) {
        self.objective_values.push(f);
        self.eps_values.push(eps);
        self.residuals.push(residual);
        if let (Some(list), Some(it)) = (self.iterates_kept.as_mut(), iterate) {
            list.push(it);
        }
    }

    /// Accepted steps.
    pub fn iterations(&self) -> usize {
        self.eps_values.len()
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_values.last().expect("start value always present")
    }

    /// Largest per-step increase of the objective (negative when strictly
    /// decreasing).
    pub fn max_increase(&self) -> f64 {
        self.objective_values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_monotone(&self, slack: f64) -> bool {
        self.objective_values.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    /// CSV with header `iter,objective,eps,residual`; row 0 is the start.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "objective", "eps", "residual"])?;
        for (k, f) in self.objective_values.iter().enumerate() {
            let (eps, res) = if k == 0 {
                (String::new(), String::new())
            } else {
                (self.eps_values[k - 1].to_string(), self.residuals[k - 1].to_string())
            };
            w.write_record([k.to_string(), f.to_string(), eps, res])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// `d` with its (roundoff-level) trace removed. Iterates are normalized to
/// trace `c`, so `tr d` is pure rounding error; left in, it couples to the
/// large identity part of the likelihood gradient and swamps the true
/// decrease close to a minimizer.
pub(crate) fn trace_free(d: &HermitianMatrix) -> HermitianMatrix {
    let n = d.dim() as f64;
    d - &HermitianMatrix::identity(d.dim()).scale(d.trace() / n)
}

/// Shared loop for every step-size-controlled iteration. `density` maps a
/// state to its matrix `ρ`; `step(state, ∇F(ρ), ε)` proposes the next state.
pub(crate) fn adaptive_descent<S, D, F>(
    start: S,
    obj: &Objective,
    c: f64,
    policy: &StepPolicy,
    opts: &SolveOptions,
    density: D,
    mut step: F,
) -> Result<(S, SolverTrace)>
where
    D: Fn(&S) -> HermitianMatrix,
    F: FnMut(&S, &HermitianMatrix, f64) -> Result<S>,
{
    let keep = |m: &HermitianMatrix| -> Option<DensityLike> {
        if opts.keep_trace {
            DensityLike::from_psd_normalized(m.clone(), c).ok()
        } else {
            None
        }
    };
    let mut state = start;
    let op = obj.operator();
    let mut rho = density(&state);
    // forward image of the current iterate, reused by every proposal
    let mut p = op.apply(&rho)?;
    let (f0, mut g) = obj.value_and_gradient_from_forward(&p)?;
    let mut trace = SolverTrace::start(f0, keep(&rho));
    let mut eps = policy.initial_eps;

    'outer: for _ in 0..opts.max_iter {
        // Forming the next iterate rounds every entry at the unit-roundoff
        // level; through ⟨∇F, δρ⟩ that alone can move F by about this much.
        // Changes below it are ties, not increases.
        let noise_floor = 16.0 * f64::EPSILON * g.frobenius_norm() * rho.frobenius_norm();
        let mut halvings = 0usize;
        loop {
            let proposal = match step(&state, &g, eps) {
                Ok(s) => {
                    let m = density(&s);
                    let d = &m - &rho;
                    let decrease = obj.change_from_forward(&p, &op.apply(&trace_free(&d))?) <= noise_floor;
                    let residual = trace_norm(&d)?;
                    Some((s, m, decrease, residual))
                }
                Err(Error::StepSize(_)) | Err(Error::Degenerate(_)) => None,
                Err(e) => return Err(e),
            };
            if let Some((s, m, decrease, residual)) = proposal {
                if residual < opts.tol {
                    if decrease {
                        trace.record(obj.value(&m)?, eps, residual, keep(&m));
                        state = s;
                    }
                    trace.fixed_point_residual = residual;
                    trace.stop_reason = StopReason::Converged;
                    break 'outer;
                }
                if decrease {
                    p = op.apply(&m)?;
                    let (f_new, g_new) = obj.value_and_gradient_from_forward(&p)?;
                    trace.record(f_new, eps, residual, keep(&m));
                    trace.fixed_point_residual = residual;
                    state = s;
                    rho = m;
                    g = g_new;
                    break;
                }
            }
            eps *= policy.shrink;
            halvings += 1;
            if halvings > policy.max_halvings_per_step || eps < policy.min_eps {
                trace.stop_reason = StopReason::EpsExhausted;
                break 'outer;
            }
        }
    }
    Ok((state, trace))
}
