//! Linear measurement maps `T: Herm(N) -> R^{M x K}` stored as effect
//! matrices, `(Tρ)_{m,k} = tr(ρ E_{m,k})`.
//!
//! Effects are computed once at construction and flattened into a real design
//! matrix over the orthonormal coordinates of Herm(N), so `apply` and
//! `adjoint` are a matrix-vector product and its transpose.

mod data;
mod descriptor;
mod quadrature;

pub use data::{read_data_csv, write_data_csv, MeasurementData};
pub use descriptor::OperatorDescriptor;
pub use quadrature::{hermite_function, hermite_functions, GaussLegendre};

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::herm::{spectral_decompose, CMatrix, HermitianMatrix};

/// Default Gauss–Legendre nodes per homodyne bin.
pub const DEFAULT_QUAD_ORDER: usize = 20;

/// Relative eigenvalue cutoff of the Gram matrix below which a direction of
/// Herm(N) counts as unobserved.
const GRAM_RANK_TOL: f64 = 1e-10;

#[derive(Debug)]
pub struct MeasurementOperator {
    dim: usize,
    rows: usize,
    cols: usize,
    effects: Vec<HermitianMatrix>,
    design: DMatrix<f64>,
    solver: OnceLock<std::result::Result<DMatrix<f64>, usize>>,
}

impl Clone for MeasurementOperator {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            rows: self.rows,
            cols: self.cols,
            effects: self.effects.clone(),
            design: self.design.clone(),
            solver: OnceLock::new(),
        }
    }
}

impl MeasurementOperator {
    /// `effects` is row-major: entry `m * cols + k` is `E_{m,k}`.
    pub fn from_effects(rows: usize, cols: usize, effects: Vec<HermitianMatrix>) -> Result<Self> {
        if rows == 0 || cols == 0 || effects.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "expected {rows} x {cols} effects, got {}",
                effects.len()
            )));
        }
        let dim = effects[0].dim();
        if let Some(bad) = effects.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        let d = dim * dim;
        let mut design = DMatrix::zeros(rows * cols, d);
        for (r, e) in effects.iter().enumerate() {
            for (c, v) in e.to_real_coords().into_iter().enumerate() {
                design[(r, c)] = v;
            }
        }
        Ok(Self {
            dim,
            rows,
            cols,
            effects,
            design,
            solver: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of settings `M`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Outcomes per setting `K`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn effect(&self, m: usize, k: usize) -> &HermitianMatrix {
        &self.effects[m * self.cols + k]
    }

    pub fn effects(&self) -> &[HermitianMatrix] {
        &self.effects
    }

    fn check_dim(&self, rho: &HermitianMatrix) -> Result<()> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        Ok(())
    }

    fn check_shape(&self, z: &DMatrix<f64>) -> Result<()> {
        if z.shape() != (self.rows, self.cols) {
            return Err(Error::ShapeMismatch {
                expected: (self.rows, self.cols),
                found: z.shape(),
            });
        }
        Ok(())
    }

    /// `(Tρ)_{m,k} = tr(ρ E_{m,k})`. The result is real by construction since
    /// both factors are Hermitian.
    pub fn apply(&self, rho: &HermitianMatrix) -> Result<DMatrix<f64>> {
        self.check_dim(rho)?;
        let x = DVector::from_vec(rho.to_real_coords());
        let flat = &self.design * x;
        Ok(DMatrix::from_fn(self.rows, self.cols, |m, k| flat[m * self.cols + k]))
    }

    /// `T*z = Σ z_{m,k} E_{m,k}`.
    pub fn adjoint(&self, z: &DMatrix<f64>) -> Result<HermitianMatrix> {
        self.check_shape(z)?;
        let flat = DVector::from_fn(self.rows * self.cols, |r, _| z[(r / self.cols, r % self.cols)]);
        let coords = self.design.tr_mul(&flat);
        HermitianMatrix::from_real_coords(self.dim, coords.as_slice())
    }

    /// Eigenvalues of the Gram matrix `AᵀA` of the real design matrix `A`.
    fn gram_spectrum(&self) -> Result<crate::herm::SpectralDecomposition> {
        let gram = self.design.tr_mul(&self.design);
        let d = gram.nrows();
        let g = HermitianMatrix::hermitian_part(&CMatrix::from_fn(d, d, |i, j| {
            Complex64::new(gram[(i, j)], 0.0)
        }));
        spectral_decompose(&g)
    }

    /// Rank of the effects viewed as vectors in the real space Herm(N).
    pub fn gram_rank(&self) -> Result<usize> {
        let s = self.gram_spectrum()?;
        let max = s.max_eigenvalue();
        Ok(s.eigenvalues.iter().filter(|&&l| l > GRAM_RANK_TOL * max).count())
    }

    fn least_squares(&self) -> Result<&DMatrix<f64>> {
        if self.solver.get().is_none() {
            let built = self.build_least_squares()?;
            let _ = self.solver.set(built);
        }
        match self.solver.get().expect("initialized above") {
            Ok(p) => Ok(p),
            Err(rank) => Err(Error::RankDeficient {
                rank: *rank,
                needed: self.dim * self.dim,
            }),
        }
    }

    fn build_least_squares(&self) -> Result<std::result::Result<DMatrix<f64>, usize>> {
        let s = self.gram_spectrum()?;
        let max = s.max_eigenvalue();
        let rank = s.eigenvalues.iter().filter(|&&l| l > GRAM_RANK_TOL * max).count();
        let d = self.dim * self.dim;
        if rank < d {
            return Ok(Err(rank));
        }
        // (AᵀA)^{-1} = V diag(1/λ) Vᵀ; eigenvectors are real up to a phase
        // per column, which cancels in V diag Vᵀ* below.
        let v = &s.eigenvectors;
        let mut inv = DMatrix::<f64>::zeros(d, d);
        for (k, &l) in s.eigenvalues.iter().enumerate() {
            for i in 0..d {
                let vi = v[(i, k)];
                for j in 0..d {
                    inv[(i, j)] += (vi * v[(j, k)].conj()).re / l;
                }
            }
        }
        Ok(Ok(inv * self.design.transpose()))
    }

    /// Least-squares preimage `argmin_H ‖T H - y‖₂` over Herm(N).
    pub fn pseudo_inverse_apply(&self, y: &DMatrix<f64>) -> Result<HermitianMatrix> {
        self.check_shape(y)?;
        let p = self.least_squares()?;
        let flat = DVector::from_fn(self.rows * self.cols, |r, _| y[(r / self.cols, r % self.cols)]);
        let coords = p * flat;
        HermitianMatrix::from_real_coords(self.dim, coords.as_slice())
    }
}

/// Six-state qubit tomography: rows are the Z, X and Y bases, columns the two
/// eigenprojectors of each.
pub fn pauli_six_state() -> MeasurementOperator {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let h = Complex64::new(0.5, 0.0);
    let ih = Complex64::new(0.0, 0.5);
    let m = |a: [Complex64; 4]| {
        HermitianMatrix::new(CMatrix::from_row_slice(2, 2, &a)).expect("literal projector is Hermitian")
    };
    let effects = vec![
        m([one, z, z, z]),
        m([z, z, z, one]),
        m([h, h, h, h]),
        m([h, -h, -h, h]),
        m([h, -ih, ih, h]),
        m([h, ih, -ih, h]),
    ];
    MeasurementOperator::from_effects(3, 2, effects).expect("six-state operator is well formed")
}

/// Binned homodyne detection in the Fock basis truncated to `dim` levels:
/// `(Tρ)(θ, k) = ∫_{x_k}^{x_{k+1}} Σ_{m,n} ρ_{m,n} e^{i(n-m)θ} h_m(x) h_n(x) dx`.
pub fn homodyne_operator(
    dim: usize,
    angles: &[f64],
    bin_edges: &[f64],
    quad_order: usize,
) -> Result<MeasurementOperator> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if angles.is_empty() {
        return Err(Error::InvalidParameter("at least one angle is required".into()));
    }
    for (i, a) in angles.iter().enumerate() {
        if !a.is_finite() || angles[..i].contains(a) {
            return Err(Error::InvalidParameter(format!("angle {a} is repeated or not finite")));
        }
    }
    if bin_edges.len() < 2 || bin_edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidParameter("need at least two finite bin edges".into()));
    }
    if bin_edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("bin edges must be strictly increasing".into()));
    }
    let rule = GaussLegendre::new(quad_order)?;

    // overlap integrals I^k_{mn} = ∫_bin h_m h_n, real symmetric
    let bins: Vec<DMatrix<f64>> = bin_edges
        .windows(2)
        .map(|e| {
            let mut acc = DMatrix::<f64>::zeros(dim, dim);
            for (x, w) in rule.mapped(e[0], e[1]) {
                let h = hermite_functions(dim, x);
                for m in 0..dim {
                    for n in m..dim {
                        acc[(m, n)] += w * h[m] * h[n];
                    }
                }
            }
            for m in 0..dim {
                for n in 0..m {
                    acc[(m, n)] = acc[(n, m)];
                }
            }
            acc
        })
        .collect();

    let mut effects = Vec::with_capacity(angles.len() * bins.len());
    for &theta in angles {
        for overlap in &bins {
            // tr(ρE) = Σ ρ_{mn} E_{nm} reproduces the phase e^{i(n-m)θ}
            // when E_{ab} = e^{i(a-b)θ} I_{ab}.
            let e = CMatrix::from_fn(dim, dim, |a, b| {
                Complex64::from_polar(overlap[(a, b)], (a as f64 - b as f64) * theta)
            });
            effects.push(HermitianMatrix::hermitian_part(&e));
        }
    }
    MeasurementOperator::from_effects(angles.len(), bins.len(), effects)
}

/// `count` equispaced angles `jπ/count` on `[0, π)`.
pub fn equispaced_angles(count: usize) -> Vec<f64> {
    (0..count)
        .map(|j| std::f64::consts::PI * j as f64 / count as f64)
        .collect()
}

/// `bins + 1` equispaced edges on `[lo, hi]`.
pub fn equispaced_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins)
        .map(|k| lo + (hi - lo) * k as f64 / bins as f64)
        .collect()
}

/// The 15 angle / 50 bin operator on `[-7, 7]` used throughout the
/// homodyne experiments.
pub fn standard_homodyne(dim: usize) -> Result<MeasurementOperator> {
    homodyne_operator(
        dim,
        &equispaced_angles(15),
        &equispaced_edges(-7.0, 7.0, 50),
        DEFAULT_QUAD_ORDER,
    )
}
