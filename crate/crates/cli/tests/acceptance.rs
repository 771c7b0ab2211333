//! End-to-end acceptance checks, one line per criterion.
//!
//! `cargo test --release -p tomo-cli --test acceptance` runs everything;
//! extra arguments select criteria by number (`-- 1 3 9`).
//! `TOMO_ACCEPT_PER_RANK` sets the per-rank instance count of criterion 10
//! (default 10).

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{ensure, Result};
use tomo_cli::config::{RankTrapSpec, RunConfig, SolverKind};
use tomo_cli::solve::{oracle, run_solver};
use tomo_cli::{cmd_rank_trap, simulate_data, tags};
use tomo_core::diagnostics::{
    construct_spurious_t2, mu_exclusion, validity_certificate, CertificateTolerances, Verdict, SPURIOUS_T2_MAX,
};
use tomo_core::herm::{random_density, random_hermitian, trace_norm, DensityLike, HermitianMatrix};
use tomo_core::objectives::{FitKind, Objective, ObjectiveDescriptor};
use tomo_core::operators::{
    hermite_function, pauli_six_state, standard_homodyne, GaussLegendre, MeasurementData, MeasurementOperator,
    OperatorDescriptor,
};
use tomo_core::rng::{derive_seed, seeded};
use tomo_core::solvers::{
    fgd_step, gm_solve, gm_step, mle_step, pgd_solve, FactorState, PgdOptions, SolveOptions, SolverTrace, StepPolicy,
};
use tomo_core::Complex64;

const FITS: [FitKind; 2] = [FitKind::NegLogLikelihood, FitKind::LeastSquares];
const MONOTONE_SLACK: f64 = 1e-12;

/// Starting step for gm runs that are expected to converge.
fn tuned_eps0(kind: FitKind) -> f64 {
    match kind {
        FitKind::NegLogLikelihood => 1.0,
        FitKind::LeastSquares => 3.0,
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

/// Every gm trace produced by any criterion passes through here.
#[derive(Default)]
struct Suite {
    gm_traces: usize,
    gm_steps: usize,
    gm_non_monotone: usize,
    gm_worst_increase: f64,
}

impl Suite {
    fn note_gm(&mut self, trace: &SolverTrace) {
        self.gm_traces += 1;
        self.gm_steps += trace.iterations();
        if trace.iterations() > 0 {
            self.gm_worst_increase = self.gm_worst_increase.max(trace.max_increase());
        }
        if !trace.is_monotone(MONOTONE_SLACK) {
            self.gm_non_monotone += 1;
        }
    }
}

fn homodyne() -> Arc<MeasurementOperator> {
    Arc::new(standard_homodyne(10).expect("standard operator"))
}

fn six_state() -> Arc<MeasurementOperator> {
    Arc::new(pauli_six_state())
}

fn exact(op: &MeasurementOperator, rho: &DensityLike) -> Result<MeasurementData> {
    Ok(MeasurementData::from_forward(op.apply(rho.matrix())?)?)
}

fn step_norm(a: &DensityLike, b: &DensityLike) -> Result<f64> {
    Ok(trace_norm(&(a.matrix() - b.matrix()))?)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_1(_: &mut Suite) -> Result<Outcome> {
    let mut worst_step: f64 = 0.0;
    let mut worst_closed: f64 = 0.0;
    let mut all_spurious = true;
    let mut truth_lower = true;
    for t in [0.1, 0.5, SPURIOUS_T2_MAX] {
        let s = construct_spurious_t2(t)?;
        let nll = Objective::new(s.operator.clone(), s.data.clone(), FitKind::NegLogLikelihood)?;
        worst_step = worst_step.max(step_norm(&mle_step(&s.rho_fix, &nll)?, &s.rho_fix)?);
        let g = nll.gradient(s.rho_fix.matrix())?;
        for eps in [0.1, 0.5] {
            worst_step = worst_step.max(step_norm(&gm_step(&s.rho_fix, &g, eps, 1.0)?, &s.rho_fix)?);
        }
        let c = Complex64::new;
        let off = 2.0 - 5.0 * t;
        let closed = HermitianMatrix::from_rows(&[
            &[c(2.0 + 4.0 * t, 0.0), c(off, -off)],
            &[c(off, off), c(4.0 - 4.0 * t, 0.0)],
        ])?
        .scale(1.0 / 6.0);
        worst_closed = worst_closed.max(s.rho_true.matrix().max_abs_diff(&closed));
        let cert = validity_certificate(&s.rho_fix, &nll, &CertificateTolerances::default())?;
        all_spurious &= cert.verdict == Verdict::Spurious;
        for kind in FITS {
            let obj = Objective::new(s.operator.clone(), s.data.clone(), kind)?;
            truth_lower &= obj.value(s.rho_true.matrix())? < obj.value(s.rho_fix.matrix())?;
        }
    }
    outcome(
        worst_step < 1e-12 && worst_closed < 1e-12 && all_spurious && truth_lower,
        format!(
            "max fixed-point step {worst_step:.1e}, closed-form error {worst_closed:.1e}, \
             spurious verdicts {all_spurious}, truth objective lower {truth_lower}"
        ),
    )
}

fn criterion_2(suite: &mut Suite) -> Result<Outcome> {
    let tol = CertificateTolerances::default();
    let (mut pgd_ok, mut pgd_runs) = (0, 0);
    let (mut gm_ok, mut gm_converged, mut gm_runs) = (0, 0, 0);
    let mut worst_restricted = f64::INFINITY;
    for i in 0..20u64 {
        let op = if i < 10 { six_state() } else { homodyne() };
        let n = op.dim();
        let truth = random_density(n, n, derive_seed(2, tags::TRUTH, i))?;
        let y = exact(&op, &truth)?;
        for kind in FITS {
            let obj = Objective::new(op.clone(), y.clone(), kind)?;
            let rho0 = DensityLike::maximally_mixed(n, 1.0);
            let (rho, _) = pgd_solve(&rho0, &obj, &PgdOptions::default())?;
            let cert = validity_certificate(&rho, &obj, &tol)?;
            pgd_runs += 1;
            worst_restricted = worst_restricted.min(cert.min_eig_q_restricted);
            if cert.verdict == Verdict::Valid && cert.min_eig_q_restricted >= -1e-6 {
                pgd_ok += 1;
            }
            let policy = StepPolicy::with_initial(tuned_eps0(kind))?;
            let (rho, trace) = gm_solve(&rho0, &obj, &policy, &SolveOptions::default())?;
            suite.note_gm(&trace);
            gm_runs += 1;
            if trace.stop_reason == tomo_core::solvers::StopReason::Converged {
                gm_converged += 1;
                let cert = validity_certificate(&rho, &obj, &tol)?;
                worst_restricted = worst_restricted.min(cert.min_eig_q_restricted);
                if cert.verdict == Verdict::Valid && cert.min_eig_q_restricted >= -1e-6 {
                    gm_ok += 1;
                }
            }
        }
    }
    outcome(
        pgd_ok == pgd_runs && gm_ok == gm_converged && gm_converged > 0,
        format!(
            "pgd valid {pgd_ok}/{pgd_runs}; gm converged {gm_converged}/{gm_runs}, valid {gm_ok}/{gm_converged}; \
             min restricted eigenvalue {worst_restricted:.1e}"
        ),
    )
}

/// Largest Frobenius gap between gm iterates and the factorized iteration
/// driven by the same step sizes over 100 steps.
fn matched_gap(suite: &mut Suite, obj: &Objective, x0: FactorState) -> Result<f64> {
    let rho0 = x0.density()?;
    let opts = SolveOptions {
        max_iter: 100,
        tol: 0.0,
        keep_trace: true,
    };
    let (_, trace) = gm_solve(&rho0, obj, &StepPolicy::for_start(obj, rho0.matrix())?, &opts)?;
    suite.note_gm(&trace);
    let iterates = trace.iterates_kept.as_ref().expect("iterates kept");
    let mut x = x0;
    let mut worst: f64 = 0.0;
    for (k, &eps) in trace.eps_values.iter().enumerate() {
        x = fgd_step(&x, obj, eps)?;
        worst = worst.max((iterates[k + 1].matrix() - &x.outer()).frobenius_norm());
    }
    Ok(worst)
}

/// Square factors decide the criterion. Rank-deficient factors are reported
/// alongside: there the matrix iteration amplifies rounding noise in the
/// kernel of the iterate, which the factor cannot carry.
fn criterion_3(suite: &mut Suite) -> Result<Outcome> {
    let op = homodyne();
    let (mut square, mut deficient): (f64, f64) = (0.0, 0.0);
    for i in 0..20u64 {
        let truth = random_density(10, 1 + (i as usize % 10), derive_seed(3, tags::TRUTH, i))?;
        let y = if i % 2 == 0 {
            exact(&op, &truth)?
        } else {
            simulate_data(&op, &truth, 500.0, derive_seed(3, tags::NOISE, i), true)?
        };
        let obj = Objective::new(op.clone(), y, FITS[(i as usize / 2) % 2])?;
        let seed = derive_seed(3, tags::START, i);
        square = square.max(matched_gap(suite, &obj, FactorState::random(10, 10, 1.0, seed)?)?);
        let r = 1 + (3 * i as usize) % 9;
        deficient = deficient.max(matched_gap(suite, &obj, FactorState::random(10, r, 1.0, seed)?)?);
    }
    outcome(
        square < 1e-8,
        format!(
            "20 instances x 100 steps, max Frobenius gap {square:.1e} (N x N factors); \
             {deficient:.1e} from rank-deficient factors (informational)"
        ),
    )
}

/// Extra gm traces from rank-deficient and spurious starts; the verdict
/// covers every gm trace of the run.
fn criterion_4(suite: &mut Suite) -> Result<Outcome> {
    let op = homodyne();
    for i in 0..6u64 {
        let truth = random_density(10, 3 + i as usize, derive_seed(4, tags::TRUTH, i))?;
        let y = simulate_data(&op, &truth, 500.0, derive_seed(4, tags::NOISE, i), true)?;
        let rho0 = FactorState::random(10, 1 + i as usize, 1.0, derive_seed(4, tags::START, i))?.density()?;
        let obj = Objective::new(op.clone(), y, FITS[i as usize % 2])?;
        let opts = SolveOptions {
            max_iter: 3000,
            ..SolveOptions::default()
        };
        let (_, trace) = gm_solve(&rho0, &obj, &StepPolicy::for_start(&obj, rho0.matrix())?, &opts)?;
        suite.note_gm(&trace);
    }
    for t in [0.1, 0.5, SPURIOUS_T2_MAX] {
        let s = construct_spurious_t2(t)?;
        for kind in FITS {
            let obj = Objective::new(s.operator.clone(), s.data.clone(), kind)?;
            for rho0 in [s.rho_fix.clone(), DensityLike::maximally_mixed(2, 1.0)] {
                let (_, trace) =
                    gm_solve(&rho0, &obj, &StepPolicy::with_initial(0.5)?, &SolveOptions::default())?;
                suite.note_gm(&trace);
            }
        }
    }
    outcome(
        suite.gm_non_monotone == 0,
        format!(
            "{} gm traces, {} steps, {} non-monotone, largest per-step change {:.1e}",
            suite.gm_traces, suite.gm_steps, suite.gm_non_monotone, suite.gm_worst_increase
        ),
    )
}

fn criterion_5(_: &mut Suite) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut excluded = 0;
    for i in 0..10u64 {
        let op = if i < 5 { homodyne() } else { six_state() };
        let n = op.dim();
        let truth = random_density(n, 1 + (2 * i as usize) % n, derive_seed(5, tags::TRUTH, i))?;
        let y = simulate_data(&op, &truth, 500.0, derive_seed(5, tags::NOISE, i), true)?;
        for kind in FITS {
            let obj = Objective::new(op.clone(), y.clone(), kind)?;
            let fit = oracle(&obj, 1.0)?.state;
            let mu = mu_exclusion(&fit, &obj, 1.0)?;
            let near_mu = |e: f64| mu.is_some_and(|m| (e - m).abs() <= 1e-3 * e);
            let eps: Vec<f64> = [0.01, 0.1, 1.0, 0.5, 2.0].into_iter().filter(|&e| !near_mu(e)).take(3).collect();
            excluded += 3 - [0.01, 0.1, 1.0].iter().filter(|&&e| !near_mu(e)).count();
            let g = obj.gradient(fit.matrix())?;
            for e in eps {
                worst = worst.max(step_norm(&gm_step(&fit, &g, e, 1.0)?, &fit)?);
                cases += 1;
            }
        }
    }
    outcome(
        worst < 1e-8,
        format!("{cases} (solution, eps) pairs, {excluded} eps replaced near mu, max step {worst:.1e}"),
    )
}

fn criterion_6(_: &mut Suite) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    let mut rng = seeded(6);
    for (j, op) in [six_state(), homodyne()].into_iter().enumerate() {
        let n = op.dim();
        for i in 0..10u64 {
            let rho = random_density(n, n, derive_seed(6, tags::TRUTH, (j as u64) << 8 | i))?;
            let other = random_density(n, n, derive_seed(6, tags::NOISE, (j as u64) << 8 | i))?;
            let y = exact(&op, &other)?;
            for kind in FITS {
                let obj = Objective::new(op.clone(), y.clone(), kind)?;
                let g = obj.gradient(rho.matrix())?;
                for _ in 0..20 {
                    let d = random_hermitian(n, &mut rng);
                    let d = d.scale(1.0 / d.frobenius_norm());
                    let h = 1e-6;
                    let fd = (obj.value_change(rho.matrix(), &d.scale(h))?
                        - obj.value_change(rho.matrix(), &d.scale(-h))?)
                        / (2.0 * h);
                    let dd = g.trace_product(&d);
                    worst = worst.max((fd - dd).abs() / dd.abs());
                    checks += 1;
                }
            }
        }
    }
    outcome(worst < 1e-5, format!("{checks} directional derivatives, max relative error {worst:.1e}"))
}

fn criterion_7(_: &mut Suite) -> Result<Outcome> {
    let op = homodyne();
    let mut worst_sum: f64 = 0.0;
    for i in 0..20u64 {
        let rho = random_density(10, 1 + i as usize % 10, derive_seed(7, tags::TRUTH, i))?;
        let p = op.apply(rho.matrix())?;
        for row in p.row_iter() {
            worst_sum = worst_sum.max((row.sum() - 1.0).abs());
        }
    }
    let gl = GaussLegendre::new(30)?;
    let panels = 280;
    let width = 14.0 / panels as f64;
    let mut worst_gram: f64 = 0.0;
    for m in 0..10 {
        for k in 0..10 {
            let v: f64 = (0..panels)
                .map(|j| {
                    let a = -7.0 + j as f64 * width;
                    gl.integrate(a, a + width, |x| hermite_function(m, x) * hermite_function(k, x))
                })
                .sum();
            worst_gram = worst_gram.max((v - if m == k { 1.0 } else { 0.0 }).abs());
        }
    }
    outcome(
        worst_sum < 1e-6 && worst_gram < 1e-8,
        format!("max |row sum - 1| {worst_sum:.1e}, max Hermite Gram error {worst_gram:.1e}"),
    )
}

fn criterion_8(_: &mut Suite) -> Result<Outcome> {
    let op = homodyne();
    let mut levels = Vec::new();
    for i in 0..100u64 {
        let truth = random_density(10, 1 + i as usize % 10, derive_seed(8, tags::TRUTH, i))?;
        let clean = exact(&op, &truth)?;
        let noisy = simulate_data(&op, &truth, 500.0, derive_seed(8, tags::NOISE, i), true)?;
        levels.push((noisy.values() - clean.values()).norm() / clean.values().norm());
    }
    let mean = levels.iter().sum::<f64>() / levels.len() as f64;
    let (lo, hi) = levels.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &l| (a.min(l), b.max(l)));
    outcome(
        (0.15..=0.30).contains(&mean),
        format!("mean relative noise {mean:.4} (range {lo:.4}..{hi:.4}) over 100 instances"),
    )
}

fn criterion_9(_: &mut Suite) -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let spec = RankTrapSpec {
        operator: OperatorDescriptor::standard_homodyne(10),
        true_rank: 5,
        start_ranks: None,
        count: 10,
        fit: FitKind::NegLogLikelihood,
        eps0: None,
        // the verdict tests the scaling residual, about step / ε; with ε
        // near 3e-3 at the end of deficient runs a 1e-10 step leaves it
        // above the 1e-8 fixed-point tolerance
        tol: Some(1e-12),
        max_iter: Some(20_000),
        tolerances: CertificateTolerances::default(),
        seed: 9,
        output_dir: dir.path().to_path_buf(),
    };
    let out = cmd_rank_trap(&spec, dir.path())?;
    let (low, high): (Vec<_>, Vec<_>) = out.records.iter().partition(|r| r.start_rank < spec.true_rank);
    ensure!(!low.is_empty() && !high.is_empty(), "both start-rank groups needed");
    let med_low = median(low.iter().map(|r| r.trace_distance).collect());
    let med_high = median(high.iter().map(|r| r.trace_distance).collect());
    let spurious = low.iter().filter(|r| r.certificate.verdict == Verdict::Spurious).count() as f64 / low.len() as f64;
    let kernel_ok =
        high.iter().filter(|r| r.certificate.min_eig_q_restricted > -1e-4).count() as f64 / high.len() as f64;
    for s in &out.summary {
        eprintln!(
            "    start rank {:>2}: median td {:.2e}, median min restricted {:.2e}, valid {} spurious {} not fixed {}",
            s.start_rank,
            s.median_trace_distance,
            s.median_min_eig_q_restricted,
            s.valid,
            s.spurious,
            s.not_fixed_point
        );
    }
    outcome(
        med_low > 10.0 * med_high && spurious >= 0.95 && kernel_ok >= 0.95,
        format!(
            "median td r<5 {med_low:.2e} vs r>=5 {med_high:.2e}; spurious r<5 {:.0}%; \
             kernel PSD r>=5 {:.0}%",
            100.0 * spurious,
            100.0 * kernel_ok
        ),
    )
}

fn criterion_10(suite: &mut Suite) -> Result<Outcome> {
    let per_rank: usize = std::env::var("TOMO_ACCEPT_PER_RANK")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(10);
    let op = homodyne();
    let master = 2024;
    let gm_nll = RunConfig::new(SolverKind::Gm, FitKind::NegLogLikelihood);
    let gm_l2 = RunConfig::new(SolverKind::Gm, FitKind::LeastSquares);
    let fgd_nll = RunConfig::new(SolverKind::Fgd, FitKind::NegLogLikelihood);
    let (mut pair_gap, mut d_nll, mut d_l2) = (0.0f64, Vec::new(), Vec::new());
    for rank in 1..=10 {
        for k in 0..per_rank {
            let index = ((rank as u64) << 32) | k as u64;
            let truth = random_density(10, rank, derive_seed(master, tags::TRUTH, index))?;
            let y = simulate_data(&op, &truth, 500.0, derive_seed(master, tags::NOISE, index), true)?;
            let nll = Objective::from_descriptor(op.clone(), y.clone(), ObjectiveDescriptor::default())?;
            let l2 = Objective::new(op.clone(), y, FitKind::LeastSquares)?;
            let a = run_solver(&gm_nll, &nll, 1.0, master, index)?;
            let b = run_solver(&fgd_nll, &nll, 1.0, master, index)?;
            let c = run_solver(&gm_l2, &l2, 1.0, master, index)?;
            suite.note_gm(&a.trace);
            suite.note_gm(&c.trace);
            pair_gap = pair_gap.max(a.state.trace_distance(&b.state)?);
            d_nll.push(a.state.trace_distance(&oracle(&nll, 1.0)?.state)?);
            d_l2.push(c.state.trace_distance(&oracle(&l2, 1.0)?.state)?);
        }
    }
    let count = d_nll.len();
    let (m_nll, m_l2) = (median(d_nll), median(d_l2));
    outcome(
        pair_gap < 1e-6 && m_nll < 0.05 && m_l2 < 0.05,
        format!(
            "{count} noisy instances; max gm/fgd gap {pair_gap:.1e}; median distance to reference nll {m_nll:.2e}, l2 {m_l2:.2e}"
        ),
    )
}

type Criterion = fn(&mut Suite) -> Result<Outcome>;

fn main() -> ExitCode {
    let criteria: [(usize, &str, Criterion); 10] = [
        (1, "six-state spurious fixed point", criterion_1),
        (2, "certificate on true solutions", criterion_2),
        (3, "factorized and matrix iterations coincide", criterion_3),
        (5, "fixed-point family at reference solutions", criterion_5),
        (6, "gradients match finite differences", criterion_6),
        (7, "homodyne operator sanity", criterion_7),
        (8, "Poisson noise level", criterion_8),
        (9, "rank trap", criterion_9),
        (10, "noisy reconstructions at desk scale", criterion_10),
        // last: it reports on every gm trace of the run
        (4, "gm objective monotone on all traces", criterion_4),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut suite = Suite::default();
    let mut lines = Vec::new();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        eprintln!("criterion {id:>2}: running ({name})");
        let t = Instant::now();
        let (pass, detail) = match run(&mut suite) {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e:#}")),
        };
        let secs = t.elapsed().as_secs_f64();
        if !pass {
            failed += 1;
        }
        let line = format!(
            "criterion {id:>2} {} [{secs:.1} s] {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        eprintln!("{line}");
        lines.push((id, line));
    }
    lines.sort_by_key(|(id, _)| *id);
    println!("\nacceptance summary");
    for (_, line) in &lines {
        println!("{line}");
    }
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
