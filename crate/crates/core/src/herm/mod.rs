//! Dense complex Hermitian matrix algebra.
//!
//! [`HermitianMatrix`] is the ambient space Herm(N); [`DensityLike`] adds the
//! certified PSD and trace-`c` constraints. Hermitian matrices are also viewed
//! as real vectors of length N² through an orthonormal basis (see
//! [`HermitianMatrix::to_real_coords`]), which turns `tr(AB)` into a dot
//! product and lets measurement operators act as plain real matrices.

mod eigen;
mod project;
mod random;

pub use eigen::{eigenvalues, is_psd, spectral_decompose, trace_norm, SpectralDecomposition};
pub use project::{project_simplex, project_to_density};
pub use random::{ginibre, random_density, random_density_with, random_hermitian};

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Elementwise asymmetry tolerated by [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Default eigenvalue tolerance for PSD membership.
pub const PSD_TOL: f64 = 1e-9;
/// Default relative trace tolerance for [`DensityLike`].
pub const TRACE_TOL: f64 = 1e-9;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: CMatrix,
}

impl HermitianMatrix {
    /// Validates symmetry within [`HERMITIAN_TOL`] and stores the exact
    /// Hermitian part.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        let n = m.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (m[(i, j)] - m[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        if worst > HERMITIAN_TOL {
            return Err(Error::NotHermitian(worst));
        }
        Ok(Self::hermitian_part(&m))
    }

    /// `(m + m*) / 2` without validation.
    pub fn hermitian_part(m: &CMatrix) -> Self {
        let n = m.nrows();
        let inner = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(m[(i, i)].re, 0.0)
            } else {
                (m[(i, j)] + m[(j, i)].conj()) * 0.5
            }
        });
        Self { inner }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            inner: CMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: CMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            inner: CMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex64::new(diag[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        }
    }

    /// Builds from separate row-major real and imaginary parts.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let n = re.len();
        if im.len() != n
            || re.iter().any(|r| r.len() != n)
            || im.iter().any(|r| r.len() != n)
        {
            return Err(Error::InvalidParameter(
                "re/im must both be square arrays of equal size".into(),
            ));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            Complex64::new(re[i][j], im[i][j])
        }))
    }

    /// Row-major complex entries; convenient for small literal matrices.
    pub fn from_rows(rows: &[&[Complex64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare(n, rows.first().map_or(0, |r| r.len())));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// `X X*` for any `N x r` matrix `X`.
    pub fn outer(x: &CMatrix) -> Self {
        Self::hermitian_part(&(x * x.adjoint()))
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> CMatrix {
        self.inner
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.inner[(i, i)].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `tr(self * other)`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &Self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                // tr(AB) = sum_ij A_ij B_ji = sum_ij Re(A_ij conj(B_ij))
                let a = self.inner[(i, j)];
                let b = other.inner[(i, j)];
                acc += a.re * b.re + a.im * b.im;
            }
        }
        acc
    }

    /// `self * rho * self`.
    pub fn sandwich(&self, rho: &Self) -> Self {
        let left = &self.inner * &rho.inner;
        Self::hermitian_part(&(left * &self.inner))
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            inner: self.inner.map(|z| z * a),
        }
    }

    /// `I - eps * self`.
    pub fn shifted_identity(&self, eps: f64) -> Self {
        let n = self.dim();
        let mut out = self.scale(-eps);
        for i in 0..n {
            out.inner[(i, i)] += Complex64::new(1.0, 0.0);
        }
        out
    }

    /// Coordinates in the orthonormal basis
    /// `{e_ii} ∪ {(e_ij + e_ji)/√2, i(e_ij - e_ji)/√2 : i < j}`; the map is an
    /// isometry from `(Herm(N), tr(AB))` onto `(R^{N²}, ·)`.
    pub fn to_real_coords(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            out.push(self.inner[(i, i)].re);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let z = self.inner[(i, j)];
                out.push(std::f64::consts::SQRT_2 * z.re);
                out.push(std::f64::consts::SQRT_2 * z.im);
            }
        }
        out
    }

    pub fn from_real_coords(n: usize, coords: &[f64]) -> Result<Self> {
        if coords.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: coords.len(),
            });
        }
        let mut inner = CMatrix::zeros(n, n);
        for i in 0..n {
            inner[(i, i)] = Complex64::new(coords[i], 0.0);
        }
        let mut k = n;
        for i in 0..n {
            for j in (i + 1)..n {
                let z = Complex64::new(coords[k], coords[k + 1]) * std::f64::consts::FRAC_1_SQRT_2;
                inner[(i, j)] = z;
                inner[(j, i)] = z.conj();
                k += 2;
            }
        }
        Ok(Self { inner })
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let re = (0..n)
            .map(|i| (0..n).map(|j| self.inner[(i, j)].re).collect())
            .collect();
        let im = (0..n)
            .map(|i| (0..n).map(|j| self.inner[(i, j)].im).collect())
            .collect();
        MatrixJson { dim: n, re, im }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        if raw.re.len() != raw.dim {
            return Err(serde::de::Error::custom(format!(
                "dim {} does not match {} rows",
                raw.dim,
                raw.re.len()
            )));
        }
        HermitianMatrix::from_parts(&raw.re, &raw.im).map_err(serde::de::Error::custom)
    }
}

/// A Hermitian matrix certified PSD with trace `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityLike {
    matrix: HermitianMatrix,
    trace_target: f64,
}

impl DensityLike {
    pub fn new(matrix: HermitianMatrix, trace_target: f64) -> Result<Self> {
        if !(trace_target > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "trace target must be positive, got {trace_target}"
            )));
        }
        let tr = matrix.trace();
        if (tr - trace_target).abs() > TRACE_TOL * trace_target {
            return Err(Error::TraceMismatch {
                found: tr,
                target: trace_target,
            });
        }
        let min = eigenvalues(&matrix)?[0];
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self {
            matrix,
            trace_target,
        })
    }

    /// Rescales a matrix that is PSD by construction (a congruence or an
    /// outer product) to trace `c`. No eigenvalue check is performed.
    pub(crate) fn from_psd_normalized(matrix: HermitianMatrix, c: f64) -> Result<Self> {
        let tr = matrix.trace();
        if !(tr > 1e-300) || !tr.is_finite() {
            return Err(Error::Degenerate(format!("trace {tr:e} cannot be normalized")));
        }
        Ok(Self {
            matrix: matrix.scale(c / tr),
            trace_target: c,
        })
    }

    pub fn maximally_mixed(n: usize, c: f64) -> Self {
        Self {
            matrix: HermitianMatrix::identity(n).scale(c / n as f64),
            trace_target: c,
        }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> HermitianMatrix {
        self.matrix
    }

    pub fn trace_target(&self) -> f64 {
        self.trace_target
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `‖self - other‖_tr`.
    pub fn trace_distance(&self, other: &DensityLike) -> Result<f64> {
        trace_norm(&(&self.matrix - &other.matrix))
    }

    /// Number of eigenvalues above `cutoff`.
    pub fn numerical_rank(&self, cutoff: f64) -> Result<usize> {
        Ok(spectral_decompose(&self.matrix)?
            .eigenvalues
            .iter()
            .filter(|&&l| l > cutoff)
            .count())
    }
}

impl Serialize for DensityLike {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(s)
    }
}
