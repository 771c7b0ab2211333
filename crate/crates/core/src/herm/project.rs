//! Frobenius-metric projection onto `{ρ ⪰ 0, tr ρ = c}`.

use super::{spectral_decompose, DensityLike, HermitianMatrix};
use crate::error::Result;

/// Euclidean projection of `v` onto `{λ ≥ 0, Σλ = c}` (sort-and-threshold).
pub fn project_simplex(v: &[f64], c: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let candidate = (cumsum - c) / (j + 1) as f64;
        if uj - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

pub fn project_to_density(h: &HermitianMatrix, c: f64) -> Result<DensityLike> {
    let d = spectral_decompose(h)?;
    let projected = project_simplex(&d.eigenvalues, c);
    let mut shaped = d.clone();
    shaped.eigenvalues = projected;
    // eigenvalue sum is exactly c up to roundoff; renormalize to pin the trace
    DensityLike::from_psd_normalized(shaped.reconstruct(), c)
}
