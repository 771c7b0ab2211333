//! Hermitian eigendecomposition (nalgebra's tridiagonal QR), with ascending
//! ordering.

use nalgebra::DMatrix;

use super::{CMatrix, HermitianMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("dim >= 1")
    }

    /// `V diag(f(λ)) V*`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let v = &self.eigenvectors;
        let n = v.nrows();
        let mut scaled = v.clone();
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let w = f(l);
            for i in 0..n {
                scaled[(i, k)] *= w;
            }
        }
        HermitianMatrix::hermitian_part(&(scaled * v.adjoint()))
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.reconstruct_with(|l| l)
    }

    /// Columns of the eigenvectors whose eigenvalue is below `cutoff`.
    pub fn subspace_below(&self, cutoff: f64) -> CMatrix {
        let idx: Vec<usize> = (0..self.eigenvalues.len())
            .filter(|&k| self.eigenvalues[k] < cutoff)
            .collect();
        self.eigenvectors.select_columns(&idx)
    }
}

fn checked(h: &HermitianMatrix) -> Result<()> {
    if h.as_matrix().iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("eigendecomposition input".into()))
    }
}

pub fn spectral_decompose(h: &HermitianMatrix) -> Result<SpectralDecomposition> {
    checked(h)?;
    let n = h.dim();
    let eig = h.as_matrix().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Ascending eigenvalues only; cheaper than [`spectral_decompose`].
pub fn eigenvalues(h: &HermitianMatrix) -> Result<Vec<f64>> {
    checked(h)?;
    let mut vals: Vec<f64> = h.as_matrix().clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(a: &HermitianMatrix) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|l| l.abs()).sum())
}

pub fn is_psd(h: &HermitianMatrix, tol: f64) -> Result<bool> {
    Ok(eigenvalues(h)?[0] >= -tol)
}
