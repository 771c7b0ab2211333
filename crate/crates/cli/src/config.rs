use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use tomo_core::diagnostics::CertificateTolerances;
use tomo_core::objectives::{FitKind, ObjectiveDescriptor};
use tomo_core::operators::OperatorDescriptor;
use tomo_core::solvers::{PgdOptions, DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Gm,
    Fgd,
    Mle,
    Pgd,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gm => "gm",
            Self::Fgd => "fgd",
            Self::Mle => "mle",
            Self::Pgd => "pgd",
        }
    }
}

/// `{"solver":"gm"|"fgd"|"mle"|"pgd","rank":r|null,"fit":"nll"|"l2",
///   "eps0":..,"tol":..,"max_iter":..,"seed":..}`; everything but `solver`
/// has a default. `tol`/`max_iter` default per solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub solver: SolverKind,
    #[serde(default)]
    pub rank: Option<usize>,
    #[serde(default = "default_fit")]
    pub fit: FitKind,
    #[serde(default)]
    pub eps0: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_fit() -> FitKind {
    FitKind::NegLogLikelihood
}

impl RunConfig {
    pub fn new(solver: SolverKind, fit: FitKind) -> Self {
        Self {
            id: None,
            solver,
            rank: None,
            fit,
            eps0: None,
            tol: None,
            max_iter: None,
            seed: 0,
        }
    }

    /// `gm-nll`, `fgd-l2-r3`, ... unless an explicit id is given.
    pub fn label(&self) -> String {
        if let Some(id) = &self.id {
            return id.clone();
        }
        let fit = match self.fit {
            FitKind::NegLogLikelihood => "nll",
            FitKind::LeastSquares => "l2",
        };
        match self.rank {
            Some(r) => format!("{}-{fit}-r{r}", self.solver.name()),
            None => format!("{}-{fit}", self.solver.name()),
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(match self.solver {
            SolverKind::Pgd => PgdOptions::default().tol,
            _ => DEFAULT_TOL,
        })
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter.unwrap_or(match self.solver {
            SolverKind::Pgd => PgdOptions::default().max_iter,
            _ => DEFAULT_MAX_ITER,
        })
    }

    pub fn objective(&self) -> ObjectiveDescriptor {
        ObjectiveDescriptor {
            fit: self.fit,
            ..ObjectiveDescriptor::default()
        }
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        if let Some(r) = self.rank {
            if r == 0 || r > dim {
                bail!("{}: rank {r} outside 1..={dim}", self.label());
            }
        }
        if matches!(self.solver, SolverKind::Mle) && self.fit != FitKind::NegLogLikelihood {
            bail!("{}: the mle iteration only fits the likelihood", self.label());
        }
        if let Some(e) = self.eps0 {
            if !(e > 0.0) {
                bail!("{}: eps0 must be positive", self.label());
            }
        }
        if !(self.tol() > 0.0) || self.max_iter() == 0 {
            bail!("{}: need tol > 0 and max_iter >= 1", self.label());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub count_per_rank: usize,
    pub ranks: Vec<usize>,
    pub dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub scale: f64,
    pub enabled: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            scale: 500.0,
            enabled: true,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("tomo-out")
}

/// Dataset and reconstruction experiment. `generate` uses operator,
/// ensemble, noise and seed; `reconstruct` runs `solvers` on the dataset in
/// `output_dir`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub operator: OperatorDescriptor,
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub solvers: Vec<RunConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn check(&self) -> Result<()> {
        let e = &self.ensemble;
        if e.count_per_rank == 0 {
            bail!("count_per_rank must be at least 1");
        }
        if e.ranks.is_empty() {
            bail!("no ranks given");
        }
        if e.dim != self.operator.dim() {
            bail!("ensemble dim {} but operator acts on dimension {}", e.dim, self.operator.dim());
        }
        if let Some(&r) = e.ranks.iter().find(|&&r| r == 0 || r > e.dim) {
            bail!("rank {r} outside 1..={}", e.dim);
        }
        let mut seen = e.ranks.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != e.ranks.len() {
            bail!("duplicate ranks in ensemble");
        }
        if !(self.noise.scale > 0.0) || !self.noise.scale.is_finite() {
            bail!("noise scale must be positive, got {}", self.noise.scale);
        }
        let mut labels = Vec::new();
        for s in &self.solvers {
            s.check(e.dim)?;
            labels.push(s.label());
        }
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            bail!("solver labels must be unique; set \"id\" to disambiguate");
        }
        Ok(())
    }
}

fn default_true_rank() -> usize {
    5
}

fn default_count() -> usize {
    10
}

/// `rank-trap`: truths of rank `true_rank`, factorized runs from every
/// start rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankTrapSpec {
    pub operator: OperatorDescriptor,
    #[serde(default = "default_true_rank")]
    pub true_rank: usize,
    /// Defaults to `1..=N`.
    #[serde(default)]
    pub start_ranks: Option<Vec<usize>>,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_fit")]
    pub fit: FitKind,
    #[serde(default)]
    pub eps0: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub tolerances: CertificateTolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl RankTrapSpec {
    pub fn start_ranks(&self) -> Vec<usize> {
        self.start_ranks
            .clone()
            .unwrap_or_else(|| (1..=self.operator.dim()).collect())
    }

    pub fn check(&self) -> Result<()> {
        let n = self.operator.dim();
        if self.true_rank == 0 || self.true_rank > n {
            bail!("true_rank {} outside 1..={n}", self.true_rank);
        }
        let starts = self.start_ranks();
        if starts.is_empty() {
            bail!("no start ranks");
        }
        if let Some(&r) = starts.iter().find(|&&r| r == 0 || r > n) {
            bail!("start rank {r} outside 1..={n}");
        }
        if self.count == 0 {
            bail!("count must be at least 1");
        }
        if let Some(e) = self.eps0 {
            if !(e > 0.0) {
                bail!("eps0 must be positive");
            }
        }
        Ok(())
    }
}

fn default_trace() -> f64 {
    1.0
}

/// `validate`: a state, data and an objective. Relative paths resolve
/// against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSpec {
    pub operator: OperatorDescriptor,
    pub state: PathBuf,
    pub data: PathBuf,
    #[serde(default = "default_fit")]
    pub fit: FitKind,
    #[serde(default = "default_trace")]
    pub trace_target: f64,
    #[serde(default)]
    pub tolerances: CertificateTolerances,
}
