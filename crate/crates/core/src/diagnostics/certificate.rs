use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::herm::{eigenvalues, spectral_decompose, DensityLike, HermitianMatrix};
use crate::objectives::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertificateTolerances {
    /// Full-space PSD tolerance on `Q`.
    pub psd_tol: f64,
    /// PSD tolerance on `Q` restricted to `ker ρ`.
    pub kernel_psd_tol: f64,
    /// Bound on the scaling residual for a fixed point.
    pub fix_tol: f64,
    /// Eigenvalues of `ρ` below this span the numerical kernel.
    pub kernel_cutoff: f64,
}

impl Default for CertificateTolerances {
    fn default() -> Self {
        Self {
            psd_tol: 1e-6,
            kernel_psd_tol: 1e-8,
            fix_tol: 1e-8,
            kernel_cutoff: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    Spurious,
    NotFixedPoint,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidityCertificate {
    /// `λ = -tr(∇F(ρ)ρ) / c`.
    pub lambda: f64,
    /// `Q = ∇F(ρ) + λI`.
    #[serde(skip)]
    pub q: HermitianMatrix,
    #[serde(rename = "min_eig_Q")]
    pub min_eig_q: f64,
    /// Minimum eigenvalue of `Q` on `ker ρ`; `+inf` (JSON `null`) when the
    /// numerical kernel is trivial.
    #[serde(rename = "min_eig_Q_restricted")]
    pub min_eig_q_restricted: f64,
    pub m_residual: f64,
    pub verdict: Verdict,
    #[serde(skip)]
    pub kernel_dim: usize,
}

impl ValidityCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificate serializes")
    }
}

/// `(λ*, ‖ρσ - λ*ρ‖_F / ‖ρ‖_F)` with `λ* = tr(σρ) / tr(ρ)`; the residual is
/// zero exactly when `σ ∈ M(ρ)`.
pub fn m_set_residual(rho: &HermitianMatrix, sigma: &HermitianMatrix) -> Result<(f64, f64)> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let norm = rho.frobenius_norm();
    let tr = rho.trace();
    if norm == 0.0 || tr == 0.0 {
        return Err(Error::Degenerate("ρ = 0 has no scaling set".into()));
    }
    let lambda = sigma.trace_product(rho) / tr;
    let prod = rho.as_matrix() * sigma.as_matrix();
    let diff = prod - rho.as_matrix().map(|z| z * lambda);
    let res = diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / norm;
    Ok((lambda, res))
}

/// `M ∈ ∂χ_c(ρ)` iff `M = λI - Q` with `Q ⪰ 0` and `Qρ = 0`; `λ` is read off
/// the range of `ρ` as `tr(Mρ) / tr(ρ)`.
pub fn subgradient_membership(rho: &DensityLike, m: &HermitianMatrix, tol: f64) -> Result<bool> {
    let lambda = m.trace_product(rho.matrix()) / rho.matrix().trace();
    let q = &HermitianMatrix::identity(m.dim()).scale(lambda) - m;
    let q_rho = q.as_matrix() * rho.matrix().as_matrix();
    let off_kernel = q_rho.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if off_kernel > tol {
        return Ok(false);
    }
    Ok(eigenvalues(&q)?[0] >= -tol)
}

pub fn validity_certificate(
    rho: &DensityLike,
    obj: &Objective,
    tol: &CertificateTolerances,
) -> Result<ValidityCertificate> {
    let c = rho.trace_target();
    let g = obj.gradient(rho.matrix())?;
    let neg_g = g.scale(-1.0);
    let (lambda_star, m_residual) = m_set_residual(rho.matrix(), &neg_g)?;
    // tr(ρ) = c up to roundoff, so λ* = -tr(gρ)/c
    let lambda = lambda_star * rho.matrix().trace() / c;
    let q = &g + &HermitianMatrix::identity(g.dim()).scale(lambda);
    let min_eig_q = eigenvalues(&q)?[0];

    let kernel = spectral_decompose(rho.matrix())?.subspace_below(tol.kernel_cutoff);
    let kernel_dim = kernel.ncols();
    let min_eig_q_restricted = if kernel_dim == 0 {
        f64::INFINITY
    } else {
        let block = HermitianMatrix::hermitian_part(&(kernel.adjoint() * q.as_matrix() * &kernel));
        eigenvalues(&block)?[0]
    };

    let verdict = if m_residual > tol.fix_tol {
        Verdict::NotFixedPoint
    } else if min_eig_q >= -tol.psd_tol && min_eig_q_restricted >= -tol.kernel_psd_tol {
        Verdict::Valid
    } else {
        Verdict::Spurious
    };
    Ok(ValidityCertificate {
        lambda,
        q,
        min_eig_q,
        min_eig_q_restricted,
        m_residual,
        verdict,
        kernel_dim,
    })
}

/// The single step size `μ = c / tr(∇F(ρ)ρ)` at which a solution can fail to
/// be stationary; `None` when `tr(∇F(ρ)ρ)` vanishes and every step is fine.
pub fn mu_exclusion(rho: &DensityLike, obj: &Objective, c: f64) -> Result<Option<f64>> {
    let g = obj.gradient(rho.matrix())?;
    let tr = g.trace_product(rho.matrix());
    if tr.abs() <= 1e-12 * c {
        return Ok(None);
    }
    Ok(Some(c / tr))
}
