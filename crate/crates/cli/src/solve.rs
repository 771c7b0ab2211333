use std::time::Instant;

use anyhow::Result;
use tomo_core::herm::DensityLike;
use tomo_core::objectives::Objective;
use tomo_core::rng::derive_seed;
use tomo_core::solvers::{
    factorized_mle_solve, fgd_solve, gm_solve, mle_solve, pgd_solve, FactorState, PgdOptions, SolveOptions,
    SolverTrace, StepPolicy,
};

use crate::config::{RunConfig, SolverKind};
use crate::tags;

pub struct Solved {
    pub state: DensityLike,
    pub trace: SolverTrace,
    pub wall_time: f64,
}

/// Start state: the maximally mixed state when `rank` is unset, otherwise a
/// random rank-`r` factor drawn from `(master, cfg.seed, instance)`.
pub fn start_factor(cfg: &RunConfig, n: usize, c: f64, master: u64, instance: u64) -> Result<FactorState> {
    Ok(match cfg.rank {
        None => FactorState::from_density(&DensityLike::maximally_mixed(n, c), n)?,
        Some(r) => {
            let run = derive_seed(master, tags::RUN, cfg.seed);
            FactorState::random(n, r, c, derive_seed(run, tags::START, instance))?
        }
    })
}

pub fn run_solver(cfg: &RunConfig, obj: &Objective, c: f64, master: u64, instance: u64) -> Result<Solved> {
    let n = obj.dim();
    let x0 = start_factor(cfg, n, c, master, instance)?;
    let rho0 = match cfg.rank {
        None => DensityLike::maximally_mixed(n, c),
        Some(_) => x0.density()?,
    };
    let opts = SolveOptions {
        max_iter: cfg.max_iter(),
        tol: cfg.tol(),
        keep_trace: false,
    };
    let policy = || -> Result<StepPolicy> {
        Ok(match cfg.eps0 {
            Some(e) => StepPolicy::with_initial(e)?,
            None => StepPolicy::for_start(obj, rho0.matrix())?,
        })
    };
    let t = Instant::now();
    let (state, trace) = match (cfg.solver, cfg.rank) {
        (SolverKind::Gm, _) => gm_solve(&rho0, obj, &policy()?, &opts)?,
        (SolverKind::Fgd, _) => {
            let (x, trace) = fgd_solve(&x0, obj, &policy()?, &opts)?;
            (x.density()?, trace)
        }
        // a rank-limited likelihood iteration runs on the factor so the
        // rank stays exact
        (SolverKind::Mle, Some(_)) => {
            let (x, trace) = factorized_mle_solve(&x0, obj, &opts)?;
            (x.density()?, trace)
        }
        (SolverKind::Mle, None) => mle_solve(&rho0, obj, &opts)?,
        (SolverKind::Pgd, _) => pgd_solve(
            &rho0,
            obj,
            &PgdOptions {
                step: cfg.eps0.unwrap_or(PgdOptions::default().step),
                max_iter: opts.max_iter,
                tol: opts.tol,
            },
        )?,
    };
    Ok(Solved {
        state,
        trace,
        wall_time: t.elapsed().as_secs_f64(),
    })
}

/// Reference solution for noisy data.
pub fn oracle(obj: &Objective, c: f64) -> Result<Solved> {
    let t = Instant::now();
    let (state, trace) = pgd_solve(&DensityLike::maximally_mixed(obj.dim(), c), obj, &PgdOptions::default())?;
    Ok(Solved {
        state,
        trace,
        wall_time: t.elapsed().as_secs_f64(),
    })
}
