use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{CMatrix, DensityLike, HermitianMatrix};
use crate::error::{Error, Result};
use crate::rng::{seeded, Rng as TomoRng};

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `n x r` matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> CMatrix {
    // fill row-major so the stream layout does not depend on storage order
    let mut m = CMatrix::zeros(n, r);
    for i in 0..n {
        for j in 0..r {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

/// GUE-like random Hermitian matrix, mainly for tests and oracles.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    let g = ginibre(n, n, rng);
    HermitianMatrix::hermitian_part(&(&g + g.adjoint()))
}

/// Induced-measure state `XX* / tr(XX*)` with `X` an `n x r` Ginibre matrix.
pub fn random_density_with(n: usize, r: usize, rng: &mut TomoRng) -> Result<DensityLike> {
    if r == 0 || r > n {
        return Err(Error::RankOutOfRange { rank: r, dim: n });
    }
    let x = ginibre(n, r, rng);
    DensityLike::from_psd_normalized(HermitianMatrix::outer(&x), 1.0)
}

pub fn random_density(n: usize, r: usize, seed: u64) -> Result<DensityLike> {
    random_density_with(n, r, &mut seeded(seed))
}
