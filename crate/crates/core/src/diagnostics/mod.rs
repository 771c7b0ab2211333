//! Telling minimizers apart from spurious fixed points.
//!
//! A fixed point `ρ` of the sandwich iterations satisfies `-∇F(ρ) ∈ M(ρ)`,
//! i.e. `-∇F(ρ) ρ = λρ`. It minimizes `F` over `D_c` exactly when in addition
//! `Q = ∇F(ρ) + λI` is positive semi-definite. Since `Qρ = 0` at a fixed
//! point, only the block of `Q` on `ker ρ` carries information, and the
//! certificate reports both the full and the kernel-restricted minimum
//! eigenvalue.

mod certificate;
mod spurious;

pub use certificate::{
    m_set_residual, mu_exclusion, subgradient_membership, validity_certificate, CertificateTolerances,
    ValidityCertificate, Verdict,
};
pub use spurious::{
    construct_spurious_t2, rank_limited_run, spurious_via_rank, RankLimitedRun, SpuriousT2, SPURIOUS_T2_MAX,
};
